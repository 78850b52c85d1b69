use serde::{Deserialize, Serialize};

use crate::cmv::VerblunskySequence;
use crate::hyperbolicity::{classify_uh, Classification, ClassifyParams};
use crate::par::{self, Execution};

use super::{monodromy_verdict, szego_cocycle, unit, JohnsonError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub theta: f64,
    pub classification: Classification,
}

impl ScanPoint {
    /// Signed distance to the decision threshold: certificate growth over `1 + ε` for UH and
    /// Undetermined points, `1 + slack` minus the witness sup-norm for NotUH points.
    pub fn margin(&self, epsilon: f64, slack: f64) -> f64 {
        match &self.classification {
            Classification::Uh(e) => e.certificate.margin(),
            Classification::NotUh(w) => 1.0 + slack - w.sup_norm,
            Classification::Undetermined(m) => m.min_max_growth - (1.0 + epsilon),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralScan {
    pub points: Vec<ScanPoint>,
    pub params: ClassifyParams,
}

impl SpectralScan {
    pub fn thetas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta).collect()
    }

    /// Angles classified UH, the approximant of `U`.
    pub fn uh_set(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.classification.is_uh()).map(|p| p.theta).collect()
    }

    /// Angles classified NotUH, the approximant of `Σ`.
    pub fn spectrum_set(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.classification.is_not_uh()).map(|p| p.theta).collect()
    }

    pub fn undetermined(&self) -> Vec<f64> {
        self.points.iter().filter(|p| matches!(p.classification, Classification::Undetermined(_))).map(|p| p.theta).collect()
    }

    /// Whether every grid point within `cells` steps of `theta` on either side is UH.
    pub fn deep_in_uh(&self, theta: f64, cells: usize) -> bool {
        let thetas = self.thetas();
        let flags: Vec<bool> = self.points.iter().map(|p| p.classification.is_uh()).collect();
        deep_in_region(&thetas, &flags, theta, cells)
    }
}

/// Whether the flagged region of a sorted periodic grid contains every grid point within
/// `cells` steps of `theta`, counting from the cell that holds `theta`.
pub fn deep_in_region(thetas: &[f64], flags: &[bool], theta: f64, cells: usize) -> bool {
    let n = thetas.len();
    if n == 0 {
        return false;
    }
    let i = thetas.partition_point(|&t| t < theta);
    let lo = i as i64 - 1 - cells as i64;
    let hi = i as i64 + cells as i64;
    (lo..=hi).all(|k| flags[k.rem_euclid(n as i64) as usize])
}

/// The uniform grid `θ_k = 2πk / size`.
pub fn uniform_grid(size: usize) -> Vec<f64> {
    (0..size).map(|k| std::f64::consts::TAU * k as f64 / size as f64).collect()
}

/// Classifies the Szegő cocycle at every grid angle; points run in parallel, each classification sequentially.
pub fn uh_scan(
    seq: &VerblunskySequence,
    theta_grid: &[f64],
    params: &ClassifyParams,
    execution: Execution,
) -> Result<SpectralScan, JohnsonError> {
    if theta_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(JohnsonError::Cmv(crate::cmv::CmvError::Invalid("scan grid must be strictly increasing".into())));
    }
    seq.validate()?;
    let inner = params.clone().with_execution(if execution.is_parallel() { Execution::Sequential } else { execution });
    let points = par::map(execution, theta_grid, |&theta| -> Result<ScanPoint, JohnsonError> {
        let cocycle = szego_cocycle(seq, unit(theta))?;
        Ok(ScanPoint { theta, classification: classify_uh(&cocycle, &inner) })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(SpectralScan { points, params: params.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandEdge {
    /// Grid neighbours bracketing the edge.
    pub bracket: (f64, f64),
    pub theta: f64,
    /// True when the bracket starts on the UH side.
    pub entering_spectrum: bool,
}

/// Refines every UH/NotUH flip of the scan by bisection: on the monodromy discriminant for
/// periodic sequences, on the classification otherwise.
pub fn band_edges(
    seq: &VerblunskySequence,
    scan: &SpectralScan,
    tol: f64,
    execution: Execution,
) -> Result<Vec<BandEdge>, JohnsonError> {
    let n = scan.points.len();
    let mut brackets = Vec::new();
    for i in 0..n {
        let (p, q) = (&scan.points[i], &scan.points[(i + 1) % n]);
        let (a, b) = (p.classification.is_uh(), q.classification.is_uh());
        let decided = |x: &Classification| !matches!(x, Classification::Undetermined(_));
        if decided(&p.classification) && decided(&q.classification) && a != b {
            let hi = if i + 1 == n { q.theta + std::f64::consts::TAU } else { q.theta };
            brackets.push((p.theta, hi, a));
        }
    }
    let inner = scan.params.clone().with_execution(Execution::Sequential);
    let periodic = matches!(seq, VerblunskySequence::Periodic { .. });
    let edges = par::map(execution, &brackets, |&(lo0, hi0, uh_lo)| -> Result<BandEdge, JohnsonError> {
        let is_uh = |t: f64| -> Result<bool, JohnsonError> {
            if periodic {
                Ok(monodromy_verdict(seq, unit(t))?.uh)
            } else {
                Ok(classify_uh(&szego_cocycle(seq, unit(t))?, &inner).is_uh())
            }
        };
        let (mut lo, mut hi) = (lo0, hi0);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if is_uh(mid)? == uh_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(BandEdge { bracket: (lo0, hi0), theta: (0.5 * (lo + hi)).rem_euclid(std::f64::consts::TAU), entering_spectrum: uh_lo })
    });
    edges.into_iter().collect()
}
