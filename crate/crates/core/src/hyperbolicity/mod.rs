//! Uniform hyperbolicity: Sacker–Sell search, invariant splitting, growth fit, classification.

mod classify;
mod growth;
mod robust;
mod search;
mod splitting;

use thiserror::Error;

use crate::dynamics::{BasePoint, DynamicsError};
use crate::linalg::{LinalgError, Vec2};

pub use classify::{classify_uh, Classification, ClassifyParams, Margins, UhEvidence, WITNESS_DOUBLINGS};
pub use growth::{uniform_growth_estimate, GrowthEstimate};
pub use robust::{perturb, robustness_margin_bound, robustness_probe, PerturbedFiber};
pub use search::{
    sacker_sell_search, sacker_sell_search_with_hint, sup_norm_along_orbit, BoundedOrbitWitness, GridDescription, SearchOutcome,
    SearchParams, UHCertificate,
};
pub use splitting::{
    construct_splitting, verify_splitting, SplitSample, Splitting, SplittingParams, SplittingReport, INVARIANCE_TOL, RATIO_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperbolicityError {
    #[error("inconclusive at N = {n}: min max growth {min_max_growth}")]
    Inconclusive { min_max_growth: f64, n: usize, omega: BasePoint, v: Vec2 },
    #[error("stable/unstable lines not converged at {omega:?}: gap {gap:e} with n_limit {n_limit}")]
    NotConverged { omega: BasePoint, gap: f64, n_limit: usize },
    #[error("norm {norm} too small at {omega:?}")]
    NormTooSmall { omega: BasePoint, norm: f64 },
    #[error("fitted log rate {fitted_log_rate} is not positive")]
    NoContraction { fitted_log_rate: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
