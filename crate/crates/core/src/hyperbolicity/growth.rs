use serde::{Deserialize, Serialize};

use crate::dynamics::{step, CocycleSystem, Direction, LogScaled};
use crate::par::{self, Execution};

use super::HyperbolicityError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub c: f64,
    pub lambda: f64,
    pub fit_range: (i64, i64),
    /// RMS residual of the log-linear fit.
    pub residual: f64,
}

/// Fits `‖Aⁿ(ω)‖ ≥ C·λ^{|n|}` for `|n| ≤ n_max`, with `m(n)` the minimum over sampled `ω`.
pub fn uniform_growth_estimate(cocycle: &CocycleSystem, n_max: usize, omega_density: usize, execution: Execution) -> Result<GrowthEstimate, HyperbolicityError> {
    let omegas = cocycle.base.sample_points(omega_density);
    let per = par::map(execution, &omegas, |w| -> Result<Vec<f64>, HyperbolicityError> {
        // Index k: n = k − n_max.
        let mut logs = vec![0.0; 2 * n_max + 1];
        for dir in [Direction::Forward, Direction::Backward] {
            let mut acc = LogScaled::identity();
            let mut x = *w;
            for k in 1..=n_max {
                match dir {
                    Direction::Forward => {
                        let a = cocycle.fiber(&x)?;
                        x = step(&cocycle.base, &x, Direction::Forward);
                        acc.left_mul(a.matrix());
                        logs[n_max + k] = acc.log_norm;
                    }
                    Direction::Backward => {
                        x = step(&cocycle.base, &x, Direction::Backward);
                        acc.left_mul(cocycle.fiber(&x)?.inverse().matrix());
                        logs[n_max - k] = acc.log_norm;
                    }
                }
            }
        }
        Ok(logs)
    });
    let mut m = vec![f64::INFINITY; 2 * n_max + 1];
    for r in per {
        for (mk, v) in m.iter_mut().zip(r?) {
            *mk = mk.min(v);
        }
    }
    let xs: Vec<f64> = (0..m.len()).map(|k| (k as f64 - n_max as f64).abs()).collect();
    let cnt = m.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), m.iter().sum::<f64>());
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&m).map(|(x, y)| x * y).sum();
    let denom = cnt * sxx - sx * sx;
    let slope = if denom > 0.0 { (cnt * sxy - sx * sy) / denom } else { 0.0 };
    let intercept = (sy - slope * sx) / cnt;
    let residual = (xs.iter().zip(&m).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / cnt).sqrt();
    let log_lambda = slope.max(0.0);
    let log_c = xs.iter().zip(&m).map(|(x, y)| y - x * log_lambda).fold(f64::INFINITY, f64::min);
    Ok(GrowthEstimate {
        c: log_c.exp(),
        lambda: log_lambda.exp(),
        fit_range: (-(n_max as i64), n_max as i64),
        residual,
    })
}
