use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{BasePoint, BaseSystem, CocycleSystem, FiberMap};
use crate::linalg::{c, Mat2};

use super::search::{sacker_sell_search, SearchOutcome, SearchParams, UHCertificate};

/// `A(ω) + E(ω)` rescaled to `|det| = 1`.
#[derive(Debug)]
pub struct PerturbedFiber {
    inner: Arc<dyn FiberMap>,
    kind: Perturbation,
}

#[derive(Clone, Debug)]
enum Perturbation {
    PerOrbitPoint(Vec<Mat2>),
    /// `E₀ + E₁ cos 2πω + E₂ sin 2πω`.
    Fourier([Mat2; 3]),
}

impl FiberMap for PerturbedFiber {
    fn matrix(&self, omega: &BasePoint) -> Mat2 {
        let a = self.inner.matrix(omega);
        let e = match (&self.kind, omega) {
            (Perturbation::PerOrbitPoint(es), BasePoint::OrbitIndex(i)) => es[*i % es.len()],
            (Perturbation::Fourier(es), BasePoint::CircleCoordinate(x)) => {
                let (s, co) = (2.0 * PI * x).sin_cos();
                add(&add(&es[0], &es[1].scale(co.into())), &es[2].scale(s.into()))
            }
            _ => Mat2::diag(c(0.0, 0.0), c(0.0, 0.0)),
        };
        let m = add(&a, &e);
        m.scale((1.0 / m.det().norm().sqrt()).into())
    }
}

fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = *a;
    for i in 0..2 {
        for j in 0..2 {
            out.0[i][j] += b.0[i][j];
        }
    }
    out
}

/// Random matrix with operator norm exactly `delta`.
fn random_matrix(rng: &mut ChaCha8Rng, delta: f64) -> Mat2 {
    let mut z = || c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
    let m = Mat2::new(z(), z(), z(), z());
    let n = m.norm();
    if n == 0.0 || delta == 0.0 {
        return Mat2::diag(c(0.0, 0.0), c(0.0, 0.0));
    }
    m.scale((delta / n).into())
}

/// A copy of `cocycle` whose fiber is perturbed by random matrices of norm at most `delta`.
pub fn perturb(cocycle: &CocycleSystem, delta: f64, seed: u64) -> CocycleSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = match cocycle.base {
        BaseSystem::PeriodicOrbit { period, .. } => {
            Perturbation::PerOrbitPoint((0..period).map(|_| random_matrix(&mut rng, delta)).collect())
        }
        BaseSystem::CircleRotation { .. } => Perturbation::Fourier([
            random_matrix(&mut rng, delta / 3.0),
            random_matrix(&mut rng, delta / 3.0),
            random_matrix(&mut rng, delta / 3.0),
        ]),
    };
    let mut out = cocycle.clone();
    out.fiber = Arc::new(PerturbedFiber { inner: cocycle.fiber.clone(), kind });
    out
}

/// Largest `δ` for which the worst-case change of `max_{|n|≤N} ‖Aⁿv‖` stays below the certificate margin.
pub fn robustness_margin_bound(certificate: &UHCertificate) -> f64 {
    let margin = certificate.margin();
    if margin <= 0.0 {
        return 0.0;
    }
    let b = certificate.max_fiber_norm;
    let n = certificate.n as f64;
    let drift = |delta: f64| {
        // |det(A+E)| ∈ [1 − 2Bδ − δ², 1 + 2Bδ + δ²]; renormalizing moves A by at most d1.
        let spread = 2.0 * b * delta + delta * delta;
        if spread >= 1.0 {
            return f64::INFINITY;
        }
        let k = (1.0 / (1.0 - spread).sqrt() - 1.0).max(1.0 - 1.0 / (1.0 + spread).sqrt());
        let d1 = (b + delta) * k + delta;
        let dm = d1.max(d1 * b * (b + d1));
        n * dm * (b + dm).powf(n - 1.0)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if drift(hi) < margin {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if drift(mid) < margin {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Whether the certificate `(N, ε)` survives a random perturbation of size `delta`.
pub fn robustness_probe(cocycle: &CocycleSystem, certificate: &UHCertificate, delta: f64, params: &SearchParams, seed: u64) -> bool {
    let perturbed = perturb(cocycle, delta, seed);
    let mut p = params.clone();
    p.epsilon = certificate.epsilon;
    matches!(sacker_sell_search(&perturbed, certificate.n, &p), Ok(SearchOutcome::Certificate(_)))
}
