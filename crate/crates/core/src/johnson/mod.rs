//! Spectral side: Szegő and GZ cocycles over ∂𝔻, UH scans, truncated spectra and their comparison.

mod eigenfunction;
mod scan;
mod spectrum;

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use thiserror::Error;

use crate::cmv::{check_z, gz_raw, szego_raw, CmvError, VerblunskySequence};
use crate::dynamics::{BasePoint, CocycleSystem, DynamicsError, FiberMap};
use crate::hyperbolicity::HyperbolicityError;
use crate::linalg::{c, eigenvalues, Mat2, C64};

pub use eigenfunction::bounded_orbit_to_eigenfunction;
pub use scan::{band_edges, deep_in_region, uh_scan, uniform_grid, BandEdge, ScanPoint, SpectralScan};
pub use spectrum::{truncated_spectrum, truncated_spectrum_with, Eigenpair, TruncatedSpectrum, BOUNDARY_LOCALIZATION, RESIDUAL_TOL};

/// Oracle verdicts closer than this to a band edge are refused.
pub const ORACLE_MARGIN_MIN: f64 = 2e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JohnsonError {
    #[error("oracle margin {margin:e} below {min:e}: z is at a band edge")]
    MarginTooSmall { margin: f64, min: f64 },
    #[error("sequence is not periodic")]
    NotPeriodic,
    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("witness no longer bounds the orbit: {0}")]
    WitnessStale(String),
    #[error("Hausdorff distance of an empty set")]
    EmptySet,
    #[error(transparent)]
    Cmv(#[from] CmvError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Hyperbolicity(#[from] HyperbolicityError),
}

/// `e^{iθ}`.
pub fn unit(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// `ω ↦ S(f(ω), z)`.
#[derive(Clone, Debug)]
pub struct SzegoFiber {
    pub seq: VerblunskySequence,
    pub z: C64,
}

impl FiberMap for SzegoFiber {
    fn matrix(&self, omega: &BasePoint) -> Mat2 {
        match self.seq.alpha_at(omega, 0) {
            Ok(a) => szego_raw(a, self.z),
            Err(_) => nan_matrix(),
        }
    }
}

/// `ω ↦ Q(f(Tω), z) P(f(ω), z)`.
#[derive(Clone, Debug)]
pub struct GzFiber {
    pub seq: VerblunskySequence,
    pub z: C64,
}

impl FiberMap for GzFiber {
    fn matrix(&self, omega: &BasePoint) -> Mat2 {
        match (self.seq.alpha_at(omega, 0), self.seq.alpha_at(omega, 1)) {
            (Ok(a0), Ok(a1)) => gz_raw(a1, self.z).1 * gz_raw(a0, self.z).0,
            _ => nan_matrix(),
        }
    }
}

fn nan_matrix() -> Mat2 {
    let n = c(f64::NAN, f64::NAN);
    Mat2::new(n, n, n, n)
}

pub fn szego_cocycle(seq: &VerblunskySequence, z: C64) -> Result<CocycleSystem, JohnsonError> {
    check_z(z)?;
    seq.validate()?;
    let base = seq.base_system()?;
    Ok(CocycleSystem::new(base, Arc::new(SzegoFiber { seq: seq.clone(), z })))
}

/// Cocycle over `T²` propagating `(u_{2n}, v_{2n})`.
pub fn gz_cocycle(seq: &VerblunskySequence, z: C64) -> Result<CocycleSystem, JohnsonError> {
    check_z(z)?;
    seq.validate()?;
    let base = seq.base_system()?.squared();
    Ok(CocycleSystem::new(base, Arc::new(GzFiber { seq: seq.clone(), z })))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OracleVerdict {
    pub uh: bool,
    /// Monodromy eigenvalues, larger modulus first.
    pub eigenvalues: (C64, C64),
    /// `tr M / sqrt(det M)`, real up to rounding.
    pub discriminant: C64,
    /// `|λ₁| − 1` when UH, otherwise `sqrt(1 − Δ²/4)`.
    pub margin: f64,
}

/// `S(α_{p−1}, z) ⋯ S(α_0, z)` over one period from orbit point 0.
pub fn monodromy(seq: &VerblunskySequence, z: C64) -> Result<Mat2, JohnsonError> {
    let VerblunskySequence::Periodic { coefficients } = seq else {
        return Err(JohnsonError::NotPeriodic);
    };
    check_z(z)?;
    seq.validate()?;
    Ok(coefficients.iter().fold(Mat2::identity(), |m, a| szego_raw(*a, z) * m))
}

/// Discriminant and verdict without the margin guard.
pub fn monodromy_verdict(seq: &VerblunskySequence, z: C64) -> Result<OracleVerdict, JohnsonError> {
    let m = monodromy(seq, z)?;
    let (l1, l2) = eigenvalues(&m);
    let root = m.det().sqrt();
    let delta = m.trace() / root;
    let (uh, margin) = if delta.im.abs() <= 1e-8 * delta.norm().max(1.0) {
        let d = delta.re.abs();
        if d > 2.0 {
            (true, (d + (d * d - 4.0).sqrt()) / 2.0 - 1.0)
        } else {
            (false, (1.0 - d * d / 4.0).max(0.0).sqrt())
        }
    } else {
        let (a, b) = (l1.norm(), l2.norm());
        let gap = (a - b).abs();
        (gap > 0.0, if gap > 0.0 { a - 1.0 } else { 0.0 })
    };
    Ok(OracleVerdict { uh, eigenvalues: (l1, l2), discriminant: delta, margin })
}

/// Exact UH decision for periodic sequences from the monodromy eigenvalues.
pub fn periodic_monodromy_oracle(seq: &VerblunskySequence, z: C64) -> Result<OracleVerdict, JohnsonError> {
    let v = monodromy_verdict(seq, z)?;
    if v.margin < ORACLE_MARGIN_MIN {
        return Err(JohnsonError::MarginTooSmall { margin: v.margin, min: ORACLE_MARGIN_MIN });
    }
    Ok(v)
}

/// Arc-length distance on ∂𝔻.
pub fn arc_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Distance from `x` to the nearest point of the sorted set `s`.
fn nearest(s: &[f64], x: f64) -> f64 {
    let i = s.partition_point(|&y| y < x);
    let n = s.len();
    let cand = [s[i % n], s[(i + n - 1) % n], s[0], s[n - 1]];
    cand.iter().map(|&y| arc_distance(x, y)).fold(PI, f64::min)
}

/// Hausdorff distance in the arc metric; inputs are reduced mod 2π and sorted internally.
pub fn hausdorff_distance(a: &[f64], b: &[f64]) -> Result<f64, JohnsonError> {
    if a.is_empty() || b.is_empty() {
        return Err(JohnsonError::EmptySet);
    }
    let prep = |s: &[f64]| {
        let mut v: Vec<f64> = s.iter().map(|x| x.rem_euclid(TAU)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (sa, sb) = (prep(a), prep(b));
    let ab = sa.iter().map(|&x| nearest(&sb, x)).fold(0.0, f64::max);
    let ba = sb.iter().map(|&x| nearest(&sa, x)).fold(0.0, f64::max);
    Ok(ab.max(ba))
}
