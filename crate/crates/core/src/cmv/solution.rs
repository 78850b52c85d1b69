use serde::{Deserialize, Serialize};

use crate::dynamics::BasePoint;
use crate::linalg::{c, Mat2, C64};

use super::{check_z, gz_raw, rho, CmvEntries, CmvError, VerblunskySequence};

/// Solution `(u, v)` of `ℰu = zu`, `v = ℳu` on `[start, start + len)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionPair {
    pub start: i64,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub z: C64,
    /// `α_j` over the same index range.
    pub alphas: Vec<C64>,
}

/// `Y(n, z)`: `P(α_n, z)` for even `n`, `Q(α_n, z)` for odd `n`.
pub(crate) fn gz_step(n: i64, alpha: C64, z: C64) -> Mat2 {
    let (p, q) = gz_raw(alpha, z);
    if n.rem_euclid(2) == 0 {
        p
    } else {
        q
    }
}

pub fn solve_difference(
    seq: &VerblunskySequence,
    omega: &BasePoint,
    z: C64,
    init: (C64, C64),
    range: (i64, i64),
) -> Result<SolutionPair, CmvError> {
    check_z(z)?;
    let (lo, hi) = range;
    if !(lo <= 0 && 0 <= hi) {
        return Err(CmvError::Invalid(format!("range [{lo}, {hi}] must contain 0")));
    }
    let len = (hi - lo + 1) as usize;
    let alphas = (lo..=hi)
        .map(|j| {
            let a = seq.alpha_at(omega, j)?;
            if a.norm() < 1.0 { Ok(a) } else { Err(CmvError::InvalidCoefficient { index: j, value: a }) }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let al = |j: i64| alphas[(j - lo) as usize];
    let mut u = vec![c(0.0, 0.0); len];
    let mut v = vec![c(0.0, 0.0); len];
    let i0 = (-lo) as usize;
    u[i0] = init.0;
    v[i0] = init.1;
    for n in 0..hi {
        let i = (n - lo) as usize;
        let [nu, nv] = gz_step(n, al(n), z).apply(&[u[i], v[i]]);
        u[i + 1] = nu;
        v[i + 1] = nv;
    }
    for n in (lo..0).rev() {
        let i = (n - lo) as usize;
        let [pu, pv] = gz_step(n, al(n), z).inverse().apply(&[u[i + 1], v[i + 1]]);
        u[i] = pu;
        v[i] = pv;
    }
    Ok(SolutionPair { start: lo, u, v, z, alphas })
}

impl SolutionPair {
    pub fn end(&self) -> i64 {
        self.start + self.u.len() as i64 - 1
    }

    pub fn u_at(&self, n: i64) -> C64 {
        self.u[(n - self.start) as usize]
    }

    pub fn alpha(&self, j: i64) -> C64 {
        self.alphas[(j - self.start) as usize]
    }

    fn entries(&self, n: i64) -> CmvEntries {
        let (a, ap) = (self.alpha(n), self.alpha(n - 1));
        CmvEntries::new(a, rho(a), ap, rho(ap))
    }

    /// `(ℰφ)_n` for the full-line stencil, with `φ` given as a function of the index.
    fn apply_row(&self, n: i64, phi: impl Fn(i64) -> C64) -> C64 {
        if n.rem_euclid(2) == 0 {
            let (e, e1) = (self.entries(n), self.entries(n + 1));
            e.b * phi(n - 1) + e.a * phi(n) + e1.b * phi(n + 1) + e1.d * phi(n + 2)
        } else {
            let (ep, e) = (self.entries(n - 1), self.entries(n));
            ep.d * phi(n - 2) + ep.c * phi(n - 1) + e.a * phi(n) + e.c * phi(n + 1)
        }
    }

    pub fn sup_u(&self) -> f64 {
        self.u.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn sup_v(&self) -> f64 {
        self.v.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// `max |((ℰ − z)u)_n|` over rows whose stencil lies inside the window.
    pub fn interior_residual(&self) -> f64 {
        let (lo, hi) = (self.start, self.end());
        let mut r: f64 = 0.0;
        for n in (lo + 2)..=(hi - 2) {
            let val = self.apply_row(n, |k| self.u_at(k)) - self.z * self.u_at(n);
            r = r.max(val.norm());
        }
        r
    }

    /// `max_j (|α_j| + ρ_j)` over the window, the bound on `max|v| / max|u|`.
    pub fn v_bound_factor(&self) -> f64 {
        self.alphas.iter().map(|a| a.norm() + rho(*a)).fold(0.0, f64::max)
    }

    fn norm_sq_on(&self, lo: i64, hi: i64) -> f64 {
        (lo..=hi).map(|n| self.u_at(n).norm_sqr()).sum()
    }

    /// `‖(ℰ − z)φ^{(N)}‖` computed by applying the stencil to the truncation directly.
    pub fn cutoff_residual_direct(&self, n: usize) -> Result<f64, CmvError> {
        let n = n as i64;
        self.require(n)?;
        let (a, b) = (-2 * n + 1, 2 * n);
        let phi = |k: i64| if k >= a && k <= b { self.u_at(k) } else { c(0.0, 0.0) };
        let mut s = 0.0;
        for row in (a - 1)..=(b + 1) {
            let val = self.apply_row(row, phi) - self.z * phi(row);
            s += val.norm_sqr();
        }
        Ok(s.sqrt())
    }

    fn require(&self, n: i64) -> Result<(), CmvError> {
        let (need_lo, need_hi) = (-2 * n - 1, 2 * n + 2);
        if self.start > need_lo || self.end() < need_hi {
            return Err(CmvError::WindowTooSmall { lo: self.start, hi: self.end(), need_lo, need_hi });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylCutoff {
    pub residual: f64,
    /// `‖(ℰ − z)φ^{(N)}‖ / ‖φ^{(N)}‖`.
    pub normalized: f64,
    /// `(‖φ^{(N−1)}‖, ‖φ^{(N)}‖, ‖φ^{(N+1)}‖)`.
    pub norms: (f64, f64, f64),
    pub inequality_holds: bool,
}

/// Residual of the truncation `φ^{(N)} = φ·χ_{[−2N+1, 2N]}` from its four nonzero boundary rows.
pub fn weyl_cutoff_residual(solution: &SolutionPair, n: usize) -> Result<WeylCutoff, CmvError> {
    let s = solution;
    let nn = n as i64;
    s.require(nn)?;
    let phi = |k: i64| s.u_at(k);
    let (l, r) = (-2 * nn, 2 * nn);
    let t1 = s.entries(l + 1).b * phi(l + 1) + s.entries(l + 1).d * phi(l + 2);
    let t2 = -s.entries(l).d * phi(l - 1) - s.entries(l).c * phi(l);
    let t3 = -s.entries(r + 1).b * phi(r + 1) - s.entries(r + 1).d * phi(r + 2);
    let t4 = s.entries(r).d * phi(r - 1) + s.entries(r).c * phi(r);
    let res_sq = t1.norm_sqr() + t2.norm_sqr() + t3.norm_sqr() + t4.norm_sqr();
    let nm = |k: i64| if k <= 0 { 0.0 } else { s.norm_sq_on(-2 * k + 1, 2 * k) };
    let (a, b, cc) = (nm(nn - 1), nm(nn), nm(nn + 1));
    let lhs = 0.5 * res_sq;
    let rhs = cc - a;
    Ok(WeylCutoff {
        residual: res_sq.sqrt(),
        normalized: res_sq.sqrt() / b.sqrt(),
        norms: (a.sqrt(), b.sqrt(), cc.sqrt()),
        inequality_holds: lhs <= rhs + 1e-12 * rhs.abs().max(lhs),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyBoundFit {
    /// Fitted exponent `S` in `|u_n| ≤ R(1 + |n|)^S`.
    pub slope: f64,
    pub log_r: f64,
    pub residual: f64,
    pub bounded: bool,
}

/// Fits `log max_{|n| ≤ m} |u_n|` against `log(1 + m)`.
pub fn poly_bound_fit(solution: &SolutionPair, s_max: f64, residual_max: f64) -> PolyBoundFit {
    let m_max = (-solution.start).min(solution.end());
    if m_max < 1 {
        return PolyBoundFit { slope: 0.0, log_r: solution.u_at(0).norm().ln(), residual: 0.0, bounded: true };
    }
    let mut running = solution.u_at(0).norm();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for m in 1..=m_max {
        running = running.max(solution.u_at(m).norm()).max(solution.u_at(-m).norm());
        xs.push((1.0 + m as f64).ln());
        ys.push(running.max(f64::MIN_POSITIVE).ln());
    }
    let n = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let den = n * sxx - sx * sx;
    let slope = if den > 0.0 { (n * sxy - sx * sy) / den } else { 0.0 };
    let log_r = (sy - slope * sx) / n;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - log_r - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    PolyBoundFit { slope, log_r, residual, bounded: slope < s_max && residual < residual_max }
}
