use serde::{Deserialize, Serialize};

use crate::dynamics::CocycleSystem;
use crate::par::Execution;

use super::growth::{uniform_growth_estimate, GrowthEstimate};
use super::search::{sacker_sell_search_with_hint, sup_norm_along_orbit, BoundedOrbitWitness, SearchOutcome, SearchParams, UHCertificate};
use super::splitting::{construct_splitting, verify_splitting, Splitting, SplittingParams, SplittingReport};
use super::HyperbolicityError;

/// Extra horizon doublings allowed when a witness fails its double-horizon check.
pub const WITNESS_DOUBLINGS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyParams {
    pub schedule: Vec<usize>,
    pub search: SearchParams,
    pub splitting: SplittingParams,
    pub n_limit_max: usize,
    pub growth_range: usize,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            schedule: vec![2, 4, 8, 16, 32],
            search: SearchParams::default(),
            splitting: SplittingParams::default(),
            n_limit_max: 1 << 16,
            growth_range: 64,
        }
    }
}

impl ClassifyParams {
    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.search.execution = execution;
        self.splitting.execution = execution;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UhEvidence {
    pub certificate: UHCertificate,
    pub splitting: Splitting,
    pub report: SplittingReport,
    pub growth: GrowthEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// Largest `N` reached.
    pub n: usize,
    pub min_max_growth: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Classification {
    Uh(Box<UhEvidence>),
    NotUh(BoundedOrbitWitness),
    Undetermined(Margins),
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Uh(_) => "UH",
            Classification::NotUh(_) => "NotUH",
            Classification::Undetermined(_) => "Undetermined",
        }
    }

    pub fn is_uh(&self) -> bool {
        matches!(self, Classification::Uh(_))
    }

    pub fn is_not_uh(&self) -> bool {
        matches!(self, Classification::NotUh(_))
    }
}

/// Escalates `N` through the schedule; a certificate is final, a witness must persist to the last `N`.
pub fn classify_uh(cocycle: &CocycleSystem, params: &ClassifyParams) -> Classification {
    let mut hint: Option<BoundedOrbitWitness> = None;
    let mut last: Option<Result<BoundedOrbitWitness, (usize, f64)>> = None;
    for &n in &params.schedule {
        match sacker_sell_search_with_hint(cocycle, n, &params.search, hint.as_ref()) {
            Ok(SearchOutcome::Certificate(cert)) => return confirm_uh(cocycle, cert, params),
            Ok(SearchOutcome::Witness(w)) => {
                hint = Some(w.clone());
                last = Some(Ok(w));
            }
            Err(HyperbolicityError::Inconclusive { min_max_growth, n, .. }) => {
                hint = None;
                last = Some(Err((n, min_max_growth)));
            }
            Err(e) => {
                return Classification::Undetermined(Margins { n, min_max_growth: f64::NAN, reason: e.to_string() });
            }
        }
    }
    match last {
        Some(Ok(w)) => confirm_witness(cocycle, w, params),
        Some(Err((n, g))) => Classification::Undetermined(Margins { n, min_max_growth: g, reason: "inconclusive".into() }),
        None => Classification::Undetermined(Margins { n: 0, min_max_growth: f64::NAN, reason: "empty schedule".into() }),
    }
}

/// A witness must stay within twice its slack at double its horizon; otherwise the search is rerun there.
fn confirm_witness(cocycle: &CocycleSystem, mut w: BoundedOrbitWitness, params: &ClassifyParams) -> Classification {
    let bound = 1.0 + 2.0 * params.search.slack;
    for attempt in 0..=WITNESS_DOUBLINGS {
        match sup_norm_along_orbit(cocycle, &w.omega, &w.v, 2 * w.horizon) {
            Ok(sup) if sup <= bound => return Classification::NotUh(w),
            Ok(_) if attempt == WITNESS_DOUBLINGS => break,
            Ok(_) => {}
            Err(e) => return Classification::Undetermined(Margins { n: w.horizon, min_max_growth: f64::NAN, reason: e.to_string() }),
        }
        let n = 2 * w.horizon;
        match sacker_sell_search_with_hint(cocycle, n, &params.search, Some(&w)) {
            Ok(SearchOutcome::Witness(next)) => w = next,
            Ok(SearchOutcome::Certificate(cert)) => return confirm_uh(cocycle, cert, params),
            Err(HyperbolicityError::Inconclusive { min_max_growth, n, .. }) => {
                return Classification::Undetermined(Margins { n, min_max_growth, reason: "witness does not persist".into() });
            }
            Err(e) => return Classification::Undetermined(Margins { n, min_max_growth: f64::NAN, reason: e.to_string() }),
        }
    }
    Classification::Undetermined(Margins { n: w.horizon, min_max_growth: w.sup_norm, reason: "witness does not persist".into() })
}

fn confirm_uh(cocycle: &CocycleSystem, cert: UHCertificate, params: &ClassifyParams) -> Classification {
    let undetermined = |reason: String| {
        Classification::Undetermined(Margins { n: cert.n, min_max_growth: cert.min_max_growth, reason })
    };
    let mut sp = params.splitting.clone();
    let splitting = loop {
        match construct_splitting(cocycle, &sp) {
            Ok(s) => break s,
            Err(HyperbolicityError::NotConverged { .. }) | Err(HyperbolicityError::NormTooSmall { .. })
                if sp.n_limit * 2 <= params.n_limit_max =>
            {
                sp.n_limit *= 2;
            }
            Err(e) => return undetermined(format!("splitting: {e}")),
        }
    };
    let report = match verify_splitting(&splitting, cocycle, sp.fit_horizon) {
        Ok(r) => r,
        Err(e) => return undetermined(format!("splitting check: {e}")),
    };
    if !report.passes() {
        return undetermined("splitting check failed".into());
    }
    let range = params.growth_range.max(2 * cert.n);
    let growth = match uniform_growth_estimate(cocycle, range, params.search.omega_density, params.search.execution) {
        Ok(g) => g,
        Err(e) => return undetermined(format!("growth: {e}")),
    };
    let interpolated = (1.0 + cert.epsilon).powf(1.0 / cert.n as f64);
    if !(growth.lambda >= interpolated * (1.0 - 1e-6)) {
        return undetermined(format!("growth rate {} below {}", growth.lambda, interpolated));
    }
    Classification::Uh(Box::new(UhEvidence { certificate: cert, splitting, report, growth }))
}
