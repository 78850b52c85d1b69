//! Verblunsky sequences, Szegő and Gesztesy–Zinchenko transfer matrices, CMV windows.

mod descriptor;
mod solution;
mod window;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{reduce_mod1, BasePoint, BaseSystem, DynamicsError};
use crate::linalg::{c, LinalgError, Mat2, UnimodularMatrix, C64};

pub use descriptor::{parse_descriptor, toml_diagnostic, write_descriptor};
pub use solution::{poly_bound_fit, solve_difference, weyl_cutoff_residual, PolyBoundFit, SolutionPair, WeylCutoff};
pub use window::{build_window, BandedCmvWindow, IndexParity};

pub const UNIT_CIRCLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CmvError {
    #[error("Verblunsky coefficient {value} at index {index} is not in the open unit disk")]
    InvalidCoefficient { index: i64, value: C64 },
    #[error("spectral parameter has modulus {modulus}, expected 1")]
    NotUnimodular { modulus: f64 },
    #[error("window length {len} is below 4")]
    RangeTooSmall { len: i64 },
    #[error("window length {len} is odd")]
    OddLength { len: i64 },
    #[error("vector of length {got} does not match window of size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("solution window [{lo}, {hi}] does not contain [{need_lo}, {need_hi}]")]
    WindowTooSmall { lo: i64, hi: i64, need_lo: i64, need_hi: i64 },
    #[error("index {n} outside the explicit coefficient window")]
    OutOfWindow { n: i64 },
    #[error("explicit sequences carry no base dynamics")]
    NoDynamics,
    #[error("base point {0:?} does not belong to the sequence's base system")]
    ForeignBasePoint(BasePoint),
    #[error("stencil and factorization disagree by {deviation:e}")]
    FactorizationMismatch { deviation: f64 },
    #[error("invalid sequence: {0}")]
    Invalid(String),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Two-sided sequence `α_n ∈ 𝔻`, dynamically defined as `α_ω(n) = f(Tⁿω)` where applicable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VerblunskySequence {
    /// `f(i) = coefficients[i]` over the orbit `i ↦ i + 1 mod p`.
    Periodic { coefficients: Vec<C64> },
    /// `f(x) = amplitude·exp(i(2πx + phase))` over `x ↦ x + frequency mod 1`.
    Rotation { frequency: f64, amplitude: f64, phase: f64 },
    /// `α_n = coefficients[n − start]`.
    Explicit { start: i64, coefficients: Vec<C64> },
}

impl VerblunskySequence {
    pub fn constant(alpha: C64) -> Self {
        VerblunskySequence::Periodic { coefficients: vec![alpha] }
    }

    pub fn validate(&self) -> Result<(), CmvError> {
        let check = |index: i64, value: C64| {
            if value.re.is_finite() && value.im.is_finite() && value.norm() < 1.0 {
                Ok(())
            } else {
                Err(CmvError::InvalidCoefficient { index, value })
            }
        };
        match self {
            VerblunskySequence::Periodic { coefficients } => {
                if coefficients.is_empty() {
                    return Err(CmvError::Invalid("periodic sequence needs at least one coefficient".into()));
                }
                for (i, a) in coefficients.iter().enumerate() {
                    check(i as i64, *a)?;
                }
            }
            VerblunskySequence::Rotation { frequency, amplitude, phase } => {
                BaseSystem::rotation(*frequency)?;
                if !(*amplitude >= 0.0 && *amplitude < 1.0) {
                    return Err(CmvError::Invalid(format!("amplitude {amplitude} not in [0, 1)")));
                }
                if !phase.is_finite() {
                    return Err(CmvError::Invalid("phase must be finite".into()));
                }
            }
            VerblunskySequence::Explicit { start, coefficients } => {
                if coefficients.is_empty() {
                    return Err(CmvError::Invalid("explicit sequence needs at least one coefficient".into()));
                }
                for (i, a) in coefficients.iter().enumerate() {
                    check(start + i as i64, *a)?;
                }
            }
        }
        Ok(())
    }

    pub fn base_system(&self) -> Result<BaseSystem, CmvError> {
        match self {
            VerblunskySequence::Periodic { coefficients } => Ok(BaseSystem::periodic(coefficients.len())?),
            VerblunskySequence::Rotation { frequency, .. } => Ok(BaseSystem::rotation(*frequency)?),
            VerblunskySequence::Explicit { .. } => Err(CmvError::NoDynamics),
        }
    }

    pub fn default_base_point(&self) -> BasePoint {
        match self {
            VerblunskySequence::Rotation { .. } => BasePoint::CircleCoordinate(0.0),
            _ => BasePoint::OrbitIndex(0),
        }
    }

    /// `α_ω(n)`; explicit sequences ignore `ω`.
    pub fn alpha_at(&self, omega: &BasePoint, n: i64) -> Result<C64, CmvError> {
        match (self, omega) {
            (VerblunskySequence::Periodic { coefficients }, BasePoint::OrbitIndex(i)) => {
                let p = coefficients.len() as i64;
                Ok(coefficients[(*i as i64 + n).rem_euclid(p) as usize])
            }
            (VerblunskySequence::Rotation { frequency, amplitude, phase }, BasePoint::CircleCoordinate(x)) => {
                let t = reduce_mod1(x + reduce_mod1(n as f64 * frequency));
                Ok(C64::from_polar(*amplitude, 2.0 * PI * t + phase))
            }
            (VerblunskySequence::Explicit { start, coefficients }, _) => {
                let k = n - start;
                if k < 0 || k >= coefficients.len() as i64 {
                    return Err(CmvError::OutOfWindow { n });
                }
                Ok(coefficients[k as usize])
            }
            (_, w) => Err(CmvError::ForeignBasePoint(*w)),
        }
    }
}

pub fn rho(alpha: C64) -> f64 {
    (1.0 - alpha.norm_sqr()).max(0.0).sqrt()
}

fn check_alpha(alpha: C64) -> Result<f64, CmvError> {
    if !(alpha.re.is_finite() && alpha.im.is_finite() && alpha.norm() < 1.0) {
        return Err(CmvError::InvalidCoefficient { index: 0, value: alpha });
    }
    Ok(rho(alpha))
}

pub(crate) fn check_z(z: C64) -> Result<(), CmvError> {
    let modulus = z.norm();
    if !((modulus - 1.0).abs() <= UNIT_CIRCLE_TOL) {
        return Err(CmvError::NotUnimodular { modulus });
    }
    Ok(())
}

pub(crate) fn szego_raw(alpha: C64, z: C64) -> Mat2 {
    let r = rho(alpha);
    Mat2::new(z / r, -alpha.conj() / r, -alpha * z / r, c(1.0 / r, 0.0))
}

pub(crate) fn gz_raw(alpha: C64, z: C64) -> (Mat2, Mat2) {
    let r = rho(alpha);
    let p = Mat2::new(-alpha / r, z.inv() / r, z / r, -alpha.conj() / r);
    let q = Mat2::new(-alpha.conj() / r, c(1.0 / r, 0.0), c(1.0 / r, 0.0), -alpha / r);
    (p, q)
}

/// `S(α, z) = ρ⁻¹ [[z, −ᾱ], [−αz, 1]]`.
pub fn szego_matrix(alpha: C64, z: C64) -> Result<UnimodularMatrix, CmvError> {
    check_alpha(alpha)?;
    check_z(z)?;
    Ok(UnimodularMatrix::new(szego_raw(alpha, z))?)
}

/// `(P(α, z), Q(α, z))`.
pub fn gz_matrices(alpha: C64, z: C64) -> Result<(UnimodularMatrix, UnimodularMatrix), CmvError> {
    check_alpha(alpha)?;
    check_z(z)?;
    let (p, q) = gz_raw(alpha, z);
    Ok((UnimodularMatrix::new(p)?, UnimodularMatrix::new(q)?))
}

/// `‖S(α,z)S(β,z) − z·Q(α,z)P(β,z)‖_max`.
pub fn szego_gz_identity_check(alpha: C64, beta: C64, z: C64) -> Result<f64, CmvError> {
    let sa = szego_matrix(alpha, z)?;
    let sb = szego_matrix(beta, z)?;
    let (_, qa) = gz_matrices(alpha, z)?;
    let (pb, _) = gz_matrices(beta, z)?;
    let lhs = *sa.matrix() * *sb.matrix();
    let rhs = (*qa.matrix() * *pb.matrix()).scale(z);
    Ok(lhs.max_abs_diff(&rhs))
}

/// `Θ(α) = [[ᾱ, ρ], [ρ, −α]]`.
pub fn theta_block(alpha: C64) -> Result<Mat2, CmvError> {
    let r = check_alpha(alpha)?;
    Ok(theta_raw(alpha, r))
}

pub(crate) fn theta_raw(alpha: C64, r: f64) -> Mat2 {
    Mat2::new(alpha.conj(), c(r, 0.0), c(r, 0.0), -alpha)
}

/// The entries `a_n, b_n, c_n, d_n` from `α_n, α_{n−1}` and their `ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmvEntries {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl CmvEntries {
    pub fn new(alpha_n: C64, rho_n: f64, alpha_prev: C64, rho_prev: f64) -> Self {
        CmvEntries {
            a: -alpha_n.conj() * alpha_prev,
            b: alpha_n.conj() * rho_prev,
            c: -alpha_prev * rho_n,
            d: c(rho_n * rho_prev, 0.0),
        }
    }
}
