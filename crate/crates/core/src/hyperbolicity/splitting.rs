use serde::{Deserialize, Serialize};

use crate::dynamics::{step, BasePoint, CocycleSystem, Direction, LogScaled};
use crate::linalg::{angle_distance, vec_norm, ProjectivePoint, Vec2, DEGENERACY_TOL};
use crate::par::{self, Execution};

use super::HyperbolicityError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplittingParams {
    pub n_limit: usize,
    pub tol: f64,
    pub omega_density: usize,
    /// Orbit length used to fit `c` and `L`.
    pub fit_horizon: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SplittingParams {
    fn default() -> Self {
        SplittingParams { n_limit: 64, tol: 1e-11, omega_density: 32, fit_horizon: 512, execution: Execution::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSample {
    pub omega: BasePoint,
    pub stable: ProjectivePoint,
    pub unstable: ProjectivePoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub samples: Vec<SplitSample>,
    pub c: f64,
    /// Contraction rate `L > 1`.
    pub rate: f64,
    pub gap: f64,
    pub n_limit: usize,
}

/// `S(Aⁿ(ω))` and `S(Aⁿ⁻¹(ω))` for `n = ±n_limit` (sign from `dir`), from log-scaled products.
fn limit_pair(cocycle: &CocycleSystem, omega: &BasePoint, n: usize, dir: Direction) -> Result<(ProjectivePoint, ProjectivePoint), HyperbolicityError> {
    let mut acc = LogScaled::identity();
    let mut w = *omega;
    let mut prev = None;
    for k in 0..n {
        if k + 1 == n {
            prev = Some(acc);
        }
        match dir {
            Direction::Forward => {
                let a = cocycle.fiber(&w)?;
                w = step(&cocycle.base, &w, Direction::Forward);
                acc.left_mul(a.matrix());
            }
            Direction::Backward => {
                w = step(&cocycle.base, &w, Direction::Backward);
                acc.left_mul(cocycle.fiber(&w)?.inverse().matrix());
            }
        }
    }
    let min_log = (1.0 + DEGENERACY_TOL).ln();
    let prev = prev.unwrap_or_else(LogScaled::identity);
    if acc.log_norm <= min_log || prev.log_norm <= min_log {
        return Err(HyperbolicityError::NormTooSmall { omega: *omega, norm: acc.log_norm.min(prev.log_norm).exp() });
    }
    let s = ProjectivePoint::new(acc.unit.top_right_singular())?.orthogonal();
    let sp = ProjectivePoint::new(prev.unit.top_right_singular())?.orthogonal();
    Ok((s, sp))
}

const GENERIC: Vec2 = [num_complex::Complex64::new(0.8, 0.0), num_complex::Complex64::new(0.36, 0.48)];

fn normalize(v: Vec2) -> Vec2 {
    let n = vec_norm(&v);
    [v[0] / n, v[1] / n]
}

/// Stable (`dir = Forward`) or unstable (`Backward`) line field along the orbit `T^{±k}ω`, `k = 0..=horizon`,
/// obtained by transporting a generic line over `burn_in` extra steps toward `ω`.
pub(crate) fn orbit_sections(cocycle: &CocycleSystem, omega: &BasePoint, horizon: usize, burn_in: usize, dir: Direction) -> Result<Vec<Vec2>, HyperbolicityError> {
    let total = horizon + burn_in;
    let mut out = vec![GENERIC; horizon + 1];
    let mut x = normalize(GENERIC);
    match dir {
        Direction::Forward => {
            // Pull back from T^{total}ω: backward dynamics attracts to Λˢ.
            let mut w = cocycle.shift(omega, total as i64);
            for j in (0..total).rev() {
                w = step(&cocycle.base, &w, Direction::Backward);
                x = normalize(cocycle.fiber(&w)?.inverse().apply(&x));
                if j <= horizon {
                    out[j] = x;
                }
            }
        }
        Direction::Backward => {
            let mut w = cocycle.shift(omega, -(total as i64));
            for j in (0..total).rev() {
                x = normalize(cocycle.fiber(&w)?.apply(&x));
                w = step(&cocycle.base, &w, Direction::Forward);
                if j <= horizon {
                    out[j] = x;
                }
            }
        }
    }
    if total == 0 {
        out[0] = x;
    }
    Ok(out)
}

/// `log‖Aⁿ(ω)s(ω)‖` (forward) or `log‖A⁻ⁿ(ω)u(ω)‖` (backward) for `n = 0..=horizon`,
/// telescoped through one-step factors of the line field `sections`.
fn telescoped_logs(cocycle: &CocycleSystem, omega: &BasePoint, sections: &[Vec2], dir: Direction) -> Result<Vec<f64>, HyperbolicityError> {
    let mut out = Vec::with_capacity(sections.len());
    let mut acc = 0.0;
    out.push(0.0);
    let mut w = *omega;
    for s in sections.iter().take(sections.len().saturating_sub(1)) {
        let f = match dir {
            Direction::Forward => {
                let a = cocycle.fiber(&w)?;
                w = step(&cocycle.base, &w, Direction::Forward);
                vec_norm(&a.apply(s))
            }
            Direction::Backward => {
                w = step(&cocycle.base, &w, Direction::Backward);
                vec_norm(&cocycle.fiber(&w)?.inverse().apply(s))
            }
        };
        acc += f.ln();
        out.push(acc);
    }
    Ok(out)
}

pub fn construct_splitting(cocycle: &CocycleSystem, params: &SplittingParams) -> Result<Splitting, HyperbolicityError> {
    let n = params.n_limit.max(2);
    let omegas = cocycle.base.sample_points(params.omega_density);
    let per = par::map(params.execution, &omegas, |w| -> Result<(SplitSample, Vec<f64>, Vec<f64>), HyperbolicityError> {
        let (s, sp) = limit_pair(cocycle, w, n, Direction::Forward)?;
        let (u, up) = limit_pair(cocycle, w, n, Direction::Backward)?;
        let gap = angle_distance(&s, &sp).max(angle_distance(&u, &up));
        if !(gap < params.tol) {
            return Err(HyperbolicityError::NotConverged { omega: *w, gap, n_limit: n });
        }
        let fs = orbit_sections(cocycle, w, params.fit_horizon, n, Direction::Forward)?;
        let bs = orbit_sections(cocycle, w, params.fit_horizon, n, Direction::Backward)?;
        let ys = telescoped_logs(cocycle, w, &fs, Direction::Forward)?;
        let yu = telescoped_logs(cocycle, w, &bs, Direction::Backward)?;
        Ok((SplitSample { omega: *w, stable: s, unstable: u }, ys, yu))
    });
    let mut samples = Vec::with_capacity(per.len());
    let mut series = Vec::new();
    for r in per {
        let (s, ys, yu) = r?;
        samples.push(s);
        series.push(ys);
        series.push(yu);
    }
    // Pooled least squares y ≈ a − n·ℓ.
    let (mut sn, mut sy, mut snn, mut sny, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ys in &series {
        for (k, y) in ys.iter().enumerate() {
            let x = k as f64;
            sn += x;
            sy += y;
            snn += x * x;
            sny += x * y;
            cnt += 1.0;
        }
    }
    let denom = cnt * snn - sn * sn;
    let slope = if denom > 0.0 { (cnt * sny - sn * sy) / denom } else { 0.0 };
    let ell = -slope;
    if !(ell > 0.0) {
        return Err(HyperbolicityError::NoContraction { fitted_log_rate: ell });
    }
    let c = series
        .iter()
        .flat_map(|ys| ys.iter().enumerate().map(|(k, y)| (y + k as f64 * ell).exp()))
        .fold(1.0, f64::max);
    let gap = samples.iter().map(|s| angle_distance(&s.stable, &s.unstable)).fold(f64::INFINITY, f64::min);
    Ok(Splitting { samples, c, rate: ell.exp(), gap, n_limit: n })
}

impl Splitting {
    fn lookup(&self, omega: &BasePoint) -> Option<&SplitSample> {
        self.samples.iter().find(|s| s.omega == *omega)
    }

    /// Line field along the orbit of `ω`: stored sections where available, otherwise the same limit recomputed.
    fn sections(&self, cocycle: &CocycleSystem, omega: &BasePoint, horizon: usize, dir: Direction) -> Result<Vec<Vec2>, HyperbolicityError> {
        let sign = if dir == Direction::Forward { 1 } else { -1 };
        let pts: Vec<BasePoint> = (0..=horizon).map(|k| cocycle.shift(omega, sign * k as i64)).collect();
        if pts.iter().all(|p| self.lookup(p).is_some()) {
            return Ok(pts
                .iter()
                .map(|p| {
                    let s = self.lookup(p).unwrap();
                    if dir == Direction::Forward { s.stable.vector() } else { s.unstable.vector() }
                })
                .collect());
        }
        orbit_sections(cocycle, omega, horizon, self.n_limit, dir)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingReport {
    pub invariance_stable: f64,
    pub invariance_unstable: f64,
    /// `max ‖Aⁿv_s‖·Lⁿ/c` over samples and `n ∈ [1, horizon]`.
    pub contraction_ratio: f64,
    /// Mirror quantity for `Λᵘ` in backward time.
    pub expansion_ratio: f64,
    pub gap: f64,
    pub invariance_ok: bool,
    pub contraction_ok: bool,
    pub gap_ok: bool,
}

impl SplittingReport {
    pub fn passes(&self) -> bool {
        self.invariance_ok && self.contraction_ok && self.gap_ok
    }
}

pub const INVARIANCE_TOL: f64 = 1e-8;
pub const RATIO_TOL: f64 = 1e-6;

pub fn verify_splitting(splitting: &Splitting, cocycle: &CocycleSystem, horizon: usize) -> Result<SplittingReport, HyperbolicityError> {
    let mut inv_s: f64 = 0.0;
    let mut inv_u: f64 = 0.0;
    let mut ratio_s: f64 = 0.0;
    let mut ratio_u: f64 = 0.0;
    let log_l = splitting.rate.ln();
    let log_c = splitting.c.ln();
    for s in &splitting.samples {
        let w = s.omega;
        let a = cocycle.fiber(&w)?;
        let tw = step(&cocycle.base, &w, Direction::Forward);
        let fwd = splitting.sections(cocycle, &w, 1, Direction::Forward)?;
        let next_s = match splitting.lookup(&tw) {
            Some(t) => t.stable,
            None => ProjectivePoint::new(fwd[1])?,
        };
        inv_s = inv_s.max(angle_distance(&s.stable.image(a.matrix())?, &next_s));
        let bwd_pts = splitting.sections(cocycle, &tw, 1, Direction::Backward)?;
        let next_u = match splitting.lookup(&tw) {
            Some(t) => t.unstable,
            None => ProjectivePoint::new(bwd_pts[0])?,
        };
        inv_u = inv_u.max(angle_distance(&s.unstable.image(a.matrix())?, &next_u));

        let fs = splitting.sections(cocycle, &w, horizon, Direction::Forward)?;
        let bs = splitting.sections(cocycle, &w, horizon, Direction::Backward)?;
        let ys = telescoped_logs(cocycle, &w, &fs, Direction::Forward)?;
        let yu = telescoped_logs(cocycle, &w, &bs, Direction::Backward)?;
        for k in 1..ys.len() {
            ratio_s = ratio_s.max((ys[k] + k as f64 * log_l - log_c).exp());
        }
        for k in 1..yu.len() {
            ratio_u = ratio_u.max((yu[k] + k as f64 * log_l - log_c).exp());
        }
    }
    let gap = splitting.samples.iter().map(|s| angle_distance(&s.stable, &s.unstable)).fold(f64::INFINITY, f64::min);
    Ok(SplittingReport {
        invariance_stable: inv_s,
        invariance_unstable: inv_u,
        contraction_ratio: ratio_s,
        expansion_ratio: ratio_u,
        gap,
        invariance_ok: inv_s.max(inv_u) < INVARIANCE_TOL,
        contraction_ok: ratio_s.max(ratio_u) <= 1.0 + RATIO_TOL,
        gap_ok: gap > 0.0,
    })
}
