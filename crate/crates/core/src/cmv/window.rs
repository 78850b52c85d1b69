use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::BasePoint;
use crate::linalg::{c, C64};

use super::{rho, theta_raw, CmvEntries, CmvError, VerblunskySequence};

/// Which coordinates `Θ(α_j)` acts on in the factorization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexParity {
    /// `(j, j + 1)`.
    #[default]
    Standard,
    /// `(j − 1, j)`.
    Shifted,
}

/// Finite unitary block `[n_min, n_max]` of the extended CMV matrix, decoupled by
/// unimodular coefficients at `n_min − 1` and `n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedCmvWindow {
    n_min: i64,
    n_max: i64,
    /// `α_j` for `j ∈ [n_min − 2, n_max + 1]`.
    alphas: Vec<C64>,
    rhos: Vec<f64>,
    rows: Vec<[C64; 4]>,
}

impl BandedCmvWindow {
    pub fn range(&self) -> (i64, i64) {
        (self.n_min, self.n_max)
    }

    pub fn size(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn alpha(&self, j: i64) -> C64 {
        self.alphas[(j - self.n_min + 2) as usize]
    }

    pub fn rho(&self, j: i64) -> f64 {
        self.rhos[(j - self.n_min + 2) as usize]
    }

    /// First column touched by row `n`.
    pub fn row_start(n: i64) -> i64 {
        if n.rem_euclid(2) == 0 {
            n - 1
        } else {
            n - 2
        }
    }

    /// Stencil of row `n` as `(column, value)` restricted to the window.
    pub fn row(&self, n: i64) -> impl Iterator<Item = (i64, C64)> + '_ {
        let r = &self.rows[(n - self.n_min) as usize];
        let s = Self::row_start(n);
        (0..4).map(move |k| (s + k as i64, r[k])).filter(move |(col, _)| *col >= self.n_min && *col <= self.n_max)
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let m = self.size();
        let mut out = vec![vec![c(0.0, 0.0); m]; m];
        for n in self.n_min..=self.n_max {
            for (col, v) in self.row(n) {
                out[(n - self.n_min) as usize][(col - self.n_min) as usize] = v;
            }
        }
        out
    }

    /// `ℒℳ` assembled from `Θ` blocks under `parity`, as sparse rows.
    pub fn factorized_rows(&self, parity: IndexParity) -> Vec<BTreeMap<i64, C64>> {
        let block = |j: i64| theta_raw(self.alpha(j), self.rho(j));
        // Sparse row of ℒ (even blocks) or ℳ (odd blocks) at row `r`.
        let factor_row = |r: i64, even: bool| -> Vec<(i64, C64)> {
            let want = if even { 0 } else { 1 };
            let (j, first) = match parity {
                IndexParity::Standard => {
                    if r.rem_euclid(2) == want { (r, r) } else { (r - 1, r - 1) }
                }
                IndexParity::Shifted => {
                    if r.rem_euclid(2) == want { (r, r - 1) } else { (r + 1, r) }
                }
            };
            if j < self.n_min - 1 || j > self.n_max {
                return vec![(r, c(1.0, 0.0))];
            }
            let t = block(j);
            let i = (r - first) as usize;
            vec![(first, t.0[i][0]), (first + 1, t.0[i][1])]
                .into_iter()
                .filter(|(col, _)| *col >= self.n_min && *col <= self.n_max)
                .collect()
        };
        (self.n_min..=self.n_max)
            .map(|r| {
                let mut acc: BTreeMap<i64, C64> = BTreeMap::new();
                for (k, lv) in factor_row(r, true) {
                    for (col, mv) in factor_row(k, false) {
                        *acc.entry(col).or_insert(c(0.0, 0.0)) += lv * mv;
                    }
                }
                acc
            })
            .collect()
    }

    /// Max entrywise difference between the stencil and `ℒℳ` under `parity`.
    pub fn factorization_deviation(&self, parity: IndexParity) -> f64 {
        let fact = self.factorized_rows(parity);
        let mut dev: f64 = 0.0;
        for (i, n) in (self.n_min..=self.n_max).enumerate() {
            let mut row: BTreeMap<i64, C64> = fact[i].clone();
            for (col, v) in self.row(n) {
                *row.entry(col).or_insert(c(0.0, 0.0)) -= v;
            }
            for v in row.values() {
                dev = dev.max(v.norm());
            }
        }
        dev
    }

    /// `max |(WW*)_{rs} − δ_{rs}|`; only rows within distance 4 can overlap.
    pub fn unitarity_residual(&self) -> f64 {
        let rows: Vec<Vec<(i64, C64)>> = (self.n_min..=self.n_max).map(|n| self.row(n).collect()).collect();
        let mut dev: f64 = 0.0;
        for i in 0..rows.len() {
            for j in i..(i + 5).min(rows.len()) {
                let mut s = c(0.0, 0.0);
                for (ci, vi) in &rows[i] {
                    for (cj, vj) in &rows[j] {
                        if ci == cj {
                            s += vi * vj.conj();
                        }
                    }
                }
                if i == j {
                    s -= 1.0;
                }
                dev = dev.max(s.norm());
            }
        }
        dev
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>, CmvError> {
        if x.len() != self.size() {
            return Err(CmvError::DimensionMismatch { expected: self.size(), got: x.len() });
        }
        Ok((self.n_min..=self.n_max)
            .map(|n| self.row(n).map(|(col, v)| v * x[(col - self.n_min) as usize]).sum())
            .collect())
    }
}

/// Window `[n_min, n_max]` with `α_{n_min−1} = η_left`, `α_{n_max} = η_right`.
pub fn build_window(
    seq: &VerblunskySequence,
    omega: &BasePoint,
    range: (i64, i64),
    boundary_phases: (C64, C64),
) -> Result<BandedCmvWindow, CmvError> {
    let (n_min, n_max) = range;
    let len = n_max - n_min + 1;
    if len < 4 {
        return Err(CmvError::RangeTooSmall { len });
    }
    if len % 2 != 0 {
        return Err(CmvError::OddLength { len });
    }
    let (eta_l, eta_r) = boundary_phases;
    for eta in [eta_l, eta_r] {
        super::check_z(eta)?;
    }
    let mut alphas = Vec::with_capacity(len as usize + 3);
    let mut rhos = Vec::with_capacity(len as usize + 3);
    for j in (n_min - 2)..=(n_max + 1) {
        let (a, r) = if j == n_min - 1 {
            (eta_l, 0.0)
        } else if j == n_max {
            (eta_r, 0.0)
        } else if j < n_min - 1 || j > n_max {
            (c(0.0, 0.0), 1.0)
        } else {
            let a = seq.alpha_at(omega, j)?;
            if !(a.norm() < 1.0) {
                return Err(CmvError::InvalidCoefficient { index: j, value: a });
            }
            (a, rho(a))
        };
        alphas.push(a);
        rhos.push(r);
    }
    let mut w = BandedCmvWindow { n_min, n_max, alphas, rhos, rows: Vec::with_capacity(len as usize) };
    let entries = |n: i64| CmvEntries::new(w.alpha(n), w.rho(n), w.alpha(n - 1), w.rho(n - 1));
    let mut rows = Vec::with_capacity(len as usize);
    for n in n_min..=n_max {
        let row = if n.rem_euclid(2) == 0 {
            let (e, e1) = (entries(n), entries(n + 1));
            [e.b, e.a, e1.b, e1.d]
        } else {
            let (ep, e) = (entries(n - 1), entries(n));
            [ep.d, ep.c, e.a, e.c]
        };
        let start = BandedCmvWindow::row_start(n);
        for (k, v) in row.iter().enumerate() {
            let col = start + k as i64;
            debug_assert!(col >= n_min && col <= n_max || *v == c(0.0, 0.0), "decoupling leaked at ({n}, {col})");
        }
        rows.push(row);
    }
    w.rows = rows;
    let deviation = w.factorization_deviation(IndexParity::Standard);
    if !(deviation <= 1e-13) {
        return Err(CmvError::FactorizationMismatch { deviation });
    }
    Ok(w)
}
