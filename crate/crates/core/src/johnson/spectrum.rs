use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::cmv::{build_window, BandedCmvWindow, VerblunskySequence};
use crate::dynamics::BasePoint;
use crate::linalg::{c, C64};
use crate::par::{self, Execution};

use super::{unit, JohnsonError};

/// Eigenvectors with more than this share of their mass in the outer eighths are boundary states.
pub const BOUNDARY_LOCALIZATION: f64 = 0.9;
/// Bound on `‖Wx − e^{iθ}x‖` for a unit eigenvector.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub angle: f64,
    /// Mass of the unit eigenvector on the outer `⌈M/8⌉` sites at each end.
    pub edge_fraction: f64,
    pub residual: f64,
}

impl Eigenpair {
    pub fn is_boundary(&self) -> bool {
        self.edge_fraction > BOUNDARY_LOCALIZATION
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSpectrum {
    pub n: usize,
    pub omega: BasePoint,
    pub boundary_phases: (C64, C64),
    pub range: (i64, i64),
    /// Sorted by angle in `[0, 2π)`.
    pub eigenpairs: Vec<Eigenpair>,
    pub unitarity_residual: f64,
    pub max_residual: f64,
}

impl TruncatedSpectrum {
    pub fn eigenangles(&self) -> Vec<f64> {
        self.eigenpairs.iter().map(|e| e.angle).collect()
    }

    /// Angles of eigenvectors spread through the window.
    pub fn bulk(&self) -> Vec<f64> {
        self.eigenpairs.iter().filter(|e| !e.is_boundary()).map(|e| e.angle).collect()
    }

    pub fn boundary(&self) -> Vec<f64> {
        self.eigenpairs.iter().filter(|e| e.is_boundary()).map(|e| e.angle).collect()
    }
}

/// Spectrum of the window `[−2N, 2N+1]` decoupled by `boundary_phases`.
pub fn truncated_spectrum(
    seq: &VerblunskySequence,
    omega: &BasePoint,
    n: usize,
    boundary_phases: (C64, C64),
) -> Result<TruncatedSpectrum, JohnsonError> {
    truncated_spectrum_with(seq, omega, n, boundary_phases, Execution::default())
}

pub fn truncated_spectrum_with(
    seq: &VerblunskySequence,
    omega: &BasePoint,
    n: usize,
    boundary_phases: (C64, C64),
    execution: Execution,
) -> Result<TruncatedSpectrum, JohnsonError> {
    let n_i = n as i64;
    let range = (-2 * n_i, 2 * n_i + 1);
    let window = build_window(seq, omega, range, boundary_phases)?;
    let unitarity_residual = window.unitarity_residual();
    if !(unitarity_residual < 1e-10) {
        return Err(JohnsonError::ConvergenceFailure(format!("window unitarity residual {unitarity_residual:e}")));
    }
    let eigenpairs = window_eigenpairs(&window, execution)?;
    let max_residual = eigenpairs.iter().map(|e| e.residual).fold(0.0, f64::max);
    Ok(TruncatedSpectrum { n, omega: *omega, boundary_phases, range, eigenpairs, unitarity_residual, max_residual })
}

/// Continuous phase of `v_n / u_n` carried across the window, minus the phase the right
/// boundary demands. Eigenvalues `e^{iθ}` are exactly the solutions of `F(θ) ∈ 2πℤ`.
struct PhaseFunction<'a> {
    window: &'a BandedCmvWindow,
}

impl PhaseFunction<'_> {
    fn eval(&self, theta: f64) -> f64 {
        let w = self.window;
        let (n_min, n_max) = w.range();
        let eta_l = w.alpha(n_min - 1);
        let eta_r = w.alpha(n_max);
        let mut psi = if n_min.rem_euclid(2) == 0 { (-eta_l).arg() } else { theta + (-eta_l.conj()).arg() };
        for n in n_min..n_max {
            let a = w.alpha(n);
            psi = if n.rem_euclid(2) == 0 {
                2.0 * theta - psi - 2.0 * (c(1.0, 0.0) - a * unit(theta - psi)).arg()
            } else {
                -psi - 2.0 * (c(1.0, 0.0) - a.conj() * unit(-psi)).arg()
            };
        }
        let target = if n_max.rem_euclid(2) == 1 { eta_r.conj().arg() } else { theta + eta_r.arg() };
        psi - target
    }
}

/// Root of the increasing function `f − y` on `[a, b]` with `f(a) ≤ y ≤ f(b)`.
fn bracketed_root(f: impl Fn(f64) -> f64, y: f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    fa -= y;
    fb -= y;
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x) - y;
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

fn window_eigenpairs(window: &BandedCmvWindow, execution: Execution) -> Result<Vec<Eigenpair>, JohnsonError> {
    let m = window.size();
    let pf = PhaseFunction { window };
    let g = 4 * m + 64;
    // Edge states put near-jumps of F exponentially close to their eigenangle; a grid
    // endpoint sitting on one miscounts the winding, so the grid start is shifted until it does not.
    let mut sampled = None;
    let mut last_err = String::new();
    for offset in [0.381_966_011_250_105, 0.723_606_797_749_979, 0.145_898_033_750_315, 0.0] {
        let t0 = offset * TAU / g as f64;
        let thetas: Vec<f64> = (0..=g).map(|i| t0 + TAU * i as f64 / g as f64).collect();
        let values = par::map(execution, &thetas, |&t| pf.eval(t));
        let winding = (values[g] - values[0]) / TAU;
        if !((winding - m as f64).abs() < 1e-6) {
            last_err = format!("phase winding {winding} for window size {m}");
            continue;
        }
        if let Some(i) = (0..g).find(|&i| values[i + 1] < values[i]) {
            last_err = format!("phase function decreases near θ = {}", thetas[i]);
            continue;
        }
        sampled = Some((thetas, values));
        break;
    }
    let Some((thetas, values)) = sampled else {
        return Err(JohnsonError::ConvergenceFailure(last_err));
    };
    let k0 = (values[0] / TAU).ceil() as i64;
    let angles = par::map_range(execution, m, |j| {
        let y = TAU * (k0 + j as i64) as f64;
        let i = values.partition_point(|&v| v < y).clamp(1, g);
        bracketed_root(|t| pf.eval(t), y, thetas[i - 1], thetas[i], values[i - 1], values[i])
    });
    let mut pairs = par::map(execution, &angles, |&theta| {
        let x = inverse_iteration(window, unit(theta));
        let wx = window.apply(&x).expect("dimension matches");
        let z = unit(theta);
        let residual = wx.iter().zip(&x).map(|(a, b)| (a - z * b).norm_sqr()).sum::<f64>().sqrt();
        let e = m.div_ceil(8);
        let edge_fraction = x[..e].iter().chain(&x[m - e..]).map(|v| v.norm_sqr()).sum::<f64>();
        Eigenpair { angle: theta.rem_euclid(TAU), edge_fraction, residual }
    });
    pairs.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    if let Some(bad) = pairs.iter().find(|p| !(p.residual <= RESIDUAL_TOL)) {
        return Err(JohnsonError::ConvergenceFailure(format!(
            "eigenvector residual {:e} at θ = {}",
            bad.residual, bad.angle
        )));
    }
    Ok(pairs)
}

const KL: usize = 2;
const KU: usize = 2;
const WIDTH: usize = 2 * KL + KU + 1;

/// LU factorization with partial pivoting of a matrix with `KL` sub- and `KU` superdiagonals.
struct BandLu {
    n: usize,
    /// Row `i` holds columns `i − KL .. i − KL + WIDTH`.
    rows: Vec<[C64; WIDTH]>,
    pivots: Vec<usize>,
    mult: Vec<[C64; KL]>,
}

impl BandLu {
    fn get(rows: &[[C64; WIDTH]], i: usize, j: usize) -> C64 {
        let k = j as i64 - i as i64 + KL as i64;
        if (0..WIDTH as i64).contains(&k) {
            rows[i][k as usize]
        } else {
            c(0.0, 0.0)
        }
    }

    fn set(rows: &mut [[C64; WIDTH]], i: usize, j: usize, v: C64) {
        let k = j as i64 - i as i64 + KL as i64;
        debug_assert!((0..WIDTH as i64).contains(&k));
        rows[i][k as usize] = v;
    }

    fn factor(window: &BandedCmvWindow, shift: C64) -> Self {
        let n = window.size();
        let (n_min, _) = window.range();
        let mut rows = vec![[c(0.0, 0.0); WIDTH]; n];
        for (i, r) in (n_min..).take(n).enumerate() {
            for (col, v) in window.row(r) {
                Self::set(&mut rows, i, (col - n_min) as usize, v);
            }
            let d = Self::get(&rows, i, i) - shift;
            Self::set(&mut rows, i, i, d);
        }
        let tiny = 1e-14;
        let mut pivots = vec![0; n];
        let mut mult = vec![[c(0.0, 0.0); KL]; n];
        for k in 0..n {
            let last = (k + KL).min(n - 1);
            let hi = (k + KL + KU).min(n - 1);
            let p = (k..=last).max_by(|&a, &b| Self::get(&rows, a, k).norm().total_cmp(&Self::get(&rows, b, k).norm())).unwrap_or(k);
            pivots[k] = p;
            if p != k {
                for j in k..=hi {
                    let (a, b) = (Self::get(&rows, k, j), Self::get(&rows, p, j));
                    Self::set(&mut rows, k, j, b);
                    Self::set(&mut rows, p, j, a);
                }
            }
            let mut piv = Self::get(&rows, k, k);
            if piv.norm() < tiny {
                piv = c(tiny, 0.0);
                Self::set(&mut rows, k, k, piv);
            }
            for i in (k + 1)..=last {
                let l = Self::get(&rows, i, k) / piv;
                mult[k][i - k - 1] = l;
                Self::set(&mut rows, i, k, c(0.0, 0.0));
                for j in (k + 1)..=hi {
                    let v = Self::get(&rows, i, j) - l * Self::get(&rows, k, j);
                    Self::set(&mut rows, i, j, v);
                }
            }
        }
        BandLu { n, rows, pivots, mult }
    }

    fn solve(&self, b: &mut [C64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            for i in (k + 1)..=(k + KL).min(n - 1) {
                let t = self.mult[k][i - k - 1] * b[k];
                b[i] -= t;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in (k + 1)..=(k + KL + KU).min(n - 1) {
                s -= Self::get(&self.rows, k, j) * b[j];
            }
            b[k] = s / Self::get(&self.rows, k, k);
        }
    }
}

fn normalize(x: &mut [C64]) {
    let s = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= s);
}

/// Unit eigenvector for an eigenvalue `z` known to high accuracy.
fn inverse_iteration(window: &BandedCmvWindow, z: C64) -> Vec<C64> {
    let lu = BandLu::factor(window, z);
    let m = window.size();
    let mut x: Vec<C64> = (0..m).map(|i| c(1.0 + 0.5 * (0.618_033_988_749_895 * i as f64).sin(), 0.25 * (1.3 * i as f64).cos())).collect();
    normalize(&mut x);
    for _ in 0..3 {
        lu.solve(&mut x);
        normalize(&mut x);
    }
    x
}
