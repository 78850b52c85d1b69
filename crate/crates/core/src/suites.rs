//! Property suites behind `verify`: algebraic identities, singular directions, factorization.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cmv::{build_window, gz_matrices, szego_gz_identity_check, szego_matrix, theta_block, IndexParity, VerblunskySequence};
use crate::dynamics::{iterate, BasePoint, CocycleSystem};
use crate::johnson::{szego_cocycle, unit};
use crate::linalg::{
    angle_distance, c, contracted_angle_bounds, operator_norm, singular_directions, vec_norm, Mat2, ProjectivePoint,
    UnimodularMatrix, C64,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

impl PropertyCheck {
    fn new(name: &str, max_deviation: f64, tolerance: f64, samples: usize) -> Self {
        PropertyCheck { name: name.into(), max_deviation, tolerance, samples, passed: max_deviation <= tolerance }
    }
}

pub fn random_disk(rng: &mut impl Rng, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, TAU * rng.random::<f64>())
}

pub fn random_unit(rng: &mut impl Rng) -> C64 {
    unit(TAU * rng.random::<f64>())
}

/// Random `A` with `|det A| = 1` and `‖A‖ ≥ min_norm`.
pub fn random_unimodular(rng: &mut impl Rng, min_norm: f64) -> UnimodularMatrix {
    loop {
        let mut z = || c(rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0);
        let m = Mat2::new(z(), z(), z(), z());
        let d = m.det().norm();
        if d < 1e-3 {
            continue;
        }
        let m = m.scale(c(1.0 / d.sqrt(), 0.0));
        if m.norm() >= min_norm {
            if let Ok(u) = UnimodularMatrix::new(m) {
                return u;
            }
        }
    }
}

/// `S(α,z)S(β,z) = zQ(α,z)P(β,z)`, `det S = z`, `|det P| = |det Q| = 1`, `Θ*Θ = I`.
pub fn identity_suite(seed: u64, samples: usize) -> Vec<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut id, mut det_s, mut det_gz, mut theta) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let (a, b, z) = (random_disk(&mut rng, 0.99), random_disk(&mut rng, 0.99), random_unit(&mut rng));
        id = id.max(szego_gz_identity_check(a, b, z).expect("valid inputs"));
        let s = szego_matrix(a, z).expect("valid inputs");
        det_s = det_s.max((s.det() - z).norm());
        let (p, q) = gz_matrices(a, z).expect("valid inputs");
        det_gz = det_gz.max((p.det().norm() - 1.0).abs()).max((q.det().norm() - 1.0).abs());
        let t = theta_block(a).expect("valid inputs");
        theta = theta.max((t.adjoint() * t).max_abs_diff(&Mat2::identity()));
    }
    vec![
        PropertyCheck::new("szego_gz_identity", id, 1e-12, samples),
        PropertyCheck::new("szego_determinant", det_s, 1e-12, samples),
        PropertyCheck::new("gz_determinant_modulus", det_gz, 1e-12, samples),
        PropertyCheck::new("theta_unitarity", theta, 1e-12, samples),
    ]
}

fn relative(a: &Mat2, b: &Mat2) -> f64 {
    a.max_abs_diff(b) / a.norm().max(b.norm()).max(1.0)
}

/// `A^{−n}(Tⁿω) = Aⁿ(ω)⁻¹` and `A^{m+n}(ω) = Aᵐ(Tⁿω)Aⁿ(ω)` on Szegő cocycles of `seq` at random `z`.
pub fn cocycle_suite(seq: &VerblunskySequence, seed: u64, samples: usize) -> Vec<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0c1);
    let mut inv = 0.0f64;
    let mut prop = 0.0f64;
    let mut count = 0;
    let fallback = VerblunskySequence::Periodic { coefficients: vec![c(0.5, 0.0), c(0.0, 0.3), c(-0.4, 0.2)] };
    let seq = if seq.base_system().is_ok() { seq } else { &fallback };
    let points = seq.base_system().expect("has dynamics").sample_points(8);
    for _ in 0..samples.min(200) {
        let z = random_unit(&mut rng);
        let cocycle: CocycleSystem = szego_cocycle(seq, z).expect("valid sequence");
        let w: BasePoint = points[rng.random_range(0..points.len())];
        let n: i64 = rng.random_range(1..=8);
        let m: i64 = rng.random_range(-6..=6);
        let k: i64 = rng.random_range(-6..=6);
        let an = iterate(&cocycle, &w, n).expect("bounded");
        let back = iterate(&cocycle, &cocycle.shift(&w, n), -n).expect("bounded");
        inv = inv.max(relative(back.matrix(), &an.inverse().into_inner()));
        let lhs = iterate(&cocycle, &w, m + k).expect("bounded");
        let rhs = *iterate(&cocycle, &cocycle.shift(&w, k), m).expect("bounded").matrix() * *iterate(&cocycle, &w, k).expect("bounded").matrix();
        prop = prop.max(relative(lhs.matrix(), &rhs));
        count += 1;
    }
    vec![
        PropertyCheck::new("cocycle_inverse_identity", inv, 1e-9, count),
        PropertyCheck::new("cocycle_property", prop, 1e-9, count),
    ]
}

/// Singular directions: orthogonality, scaling, multiplicative relations, `‖A⁻¹‖ = ‖A‖`, angle bracket containment.
pub fn singular_suite(seed: u64, samples: usize) -> Vec<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1e33a1);
    let (mut orth, mut scale, mut mult, mut norm_inv, mut contain) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let a = random_unimodular(&mut rng, 1.2);
        let sd = singular_directions(&a).expect("norm above 1.2");
        let inv = a.inverse();
        let sdi = singular_directions(&inv).expect("same norm");
        orth = orth.max((angle_distance(&sd.contracted, &sd.expanded) - FRAC_PI_2).abs());
        let vs = sd.contracted.vector();
        let vu = sd.expanded.vector();
        scale = scale
            .max((vec_norm(&a.apply(&vs)) * sd.norm - 1.0).abs())
            .max((vec_norm(&a.apply(&vu)) / sd.norm - 1.0).abs());
        mult = mult
            .max(angle_distance(&sd.contracted.image(a.matrix()).expect("invertible"), &sdi.expanded))
            .max(angle_distance(&sd.expanded.image(a.matrix()).expect("invertible"), &sdi.contracted));
        norm_inv = norm_inv.max((operator_norm(&inv) - sd.norm).abs() / sd.norm);
        let v = ProjectivePoint::new([random_disk(&mut rng, 1.0), random_disk(&mut rng, 1.0)]).expect("nonzero");
        let r = vec_norm(&a.apply(&v.vector()));
        let theta = angle_distance(&v, &sd.contracted);
        let (lo, hi) = contracted_angle_bounds(&a, r).expect("R within range");
        contain = contain.max(lo - theta).max(theta - hi);
    }
    vec![
        PropertyCheck::new("singular_orthogonality", orth, 1e-9, samples),
        PropertyCheck::new("singular_scaling", scale, 1e-9, samples),
        PropertyCheck::new("singular_multiplicative", mult, 1e-9, samples),
        PropertyCheck::new("norm_of_inverse", norm_inv, 1e-12, samples),
        PropertyCheck::new("angle_bounds_containment", contain.max(0.0), 1e-9, samples),
    ]
}

/// Stencil against `ℒℳ` under `parity`, and unitarity, on a random window and on `seq`.
pub fn window_suite(seq: &VerblunskySequence, parity: IndexParity, length: usize, seed: u64) -> Vec<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3a11);
    let len = length as i64;
    let (lo, hi) = (-(len / 2), len / 2 - 1);
    let coefficients: Vec<C64> = (0..len + 4).map(|_| random_disk(&mut rng, 0.95)).collect();
    let random = VerblunskySequence::Explicit { start: lo - 2, coefficients };
    let mut fact = 0.0f64;
    let mut unitary = 0.0f64;
    let mut count = 0;
    let own = match seq {
        VerblunskySequence::Explicit { .. } => None,
        s => Some(s),
    };
    for s in std::iter::once(&random).chain(own) {
        let w = s.default_base_point();
        let eta = (random_unit(&mut rng), random_unit(&mut rng));
        let win = build_window(s, &w, (lo, hi), eta).expect("valid window");
        fact = fact.max(win.factorization_deviation(parity));
        unitary = unitary.max(win.unitarity_residual());
        count += 1;
    }
    vec![
        PropertyCheck::new("factorization_matches_stencil", fact, 1e-13, count),
        PropertyCheck::new("window_unitarity", unitary, 1e-10, count),
    ]
}

/// Every suite, as run by `verify`.
pub fn verify_all(seq: &VerblunskySequence, parity: IndexParity, cfg: &crate::config::VerifyConfig, seed: u64) -> Vec<PropertyCheck> {
    let mut out = identity_suite(seed, cfg.samples);
    out.extend(cocycle_suite(seq, seed, cfg.samples));
    out.extend(singular_suite(seed, cfg.matrix_samples));
    out.extend(window_suite(seq, parity, cfg.window_length, seed));
    out
}
