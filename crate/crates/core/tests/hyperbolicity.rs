use std::sync::Arc;

use proptest::prelude::*;

use cmvuh::dynamics::{BasePoint, BaseSystem, CocycleSystem, FiberMap};
use cmvuh::hyperbolicity::{
    classify_uh, construct_splitting, robustness_margin_bound, robustness_probe, sacker_sell_search, sup_norm_along_orbit,
    uniform_growth_estimate, verify_splitting, Classification, ClassifyParams, SearchOutcome, SearchParams, SplittingParams,
};
use cmvuh::linalg::{angle_distance, c, Mat2, ProjectivePoint};
use cmvuh::par::Execution;

fn hyperbolic() -> CocycleSystem {
    CocycleSystem::constant(Mat2::from_real(2.0, 0.0, 0.0, 0.5))
}

fn rotation(t: f64) -> CocycleSystem {
    CocycleSystem::constant(Mat2::from_real(t.cos(), -t.sin(), t.sin(), t.cos()))
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn rot(t: f64) -> Mat2 {
    Mat2::from_real(t.cos(), -t.sin(), t.sin(), t.cos())
}

/// `A(ω) = R(2π(ω + α))·diag(λ, 1/λ)·R(−2πω)`, conjugate to a constant cocycle over the golden rotation.
#[derive(Debug)]
struct TwistedDiag(f64);

impl FiberMap for TwistedDiag {
    fn matrix(&self, omega: &BasePoint) -> Mat2 {
        let BasePoint::CircleCoordinate(x) = omega else { unreachable!() };
        let t = std::f64::consts::TAU * x;
        rot(t + std::f64::consts::TAU * GOLDEN) * Mat2::from_real(self.0, 0.0, 0.0, 1.0 / self.0) * rot(-t)
    }
}

fn e1() -> ProjectivePoint {
    ProjectivePoint::new([c(1.0, 0.0), c(0.0, 0.0)]).unwrap()
}

fn e2() -> ProjectivePoint {
    ProjectivePoint::new([c(0.0, 0.0), c(1.0, 0.0)]).unwrap()
}

#[test]
fn diagonal_certificate() {
    let out = sacker_sell_search(&hyperbolic(), 2, &SearchParams::default()).unwrap();
    let SearchOutcome::Certificate(cert) = out else { panic!("expected certificate, got {out:?}") };
    assert_eq!(cert.n, 2);
    // min over lines of max_{|n|≤2} ‖Aⁿv‖ is attained at v = (1, 1)/√2.
    let expected = ((16.0 + 1.0 / 16.0) / 2.0f64).sqrt();
    assert!((cert.min_max_growth - expected).abs() < 1e-9, "{}", cert.min_max_growth);
    assert!((cert.max_fiber_norm - 2.0).abs() < 1e-12);
}

#[test]
fn rotation_gives_unit_witness() {
    let out = sacker_sell_search(&rotation(0.7), 8, &SearchParams::default()).unwrap();
    let SearchOutcome::Witness(w) = out else { panic!("expected witness, got {out:?}") };
    assert!((w.sup_norm - 1.0).abs() < 1e-12);
    let again = sup_norm_along_orbit(&rotation(0.7), &w.omega, &w.v, w.horizon).unwrap();
    assert!((again - w.sup_norm).abs() < 1e-12);
}

#[test]
fn shear_is_not_uh() {
    let shear = CocycleSystem::constant(Mat2::from_real(1.0, 1.0, 0.0, 1.0));
    let cls = classify_uh(&shear, &ClassifyParams::default());
    assert!(cls.is_not_uh(), "{}", cls.label());
}

#[test]
fn diagonal_splitting() {
    let coc = hyperbolic();
    let s = construct_splitting(&coc, &SplittingParams::default()).unwrap();
    let sample = &s.samples[0];
    assert!(angle_distance(&sample.stable, &e2()) < 1e-12);
    assert!(angle_distance(&sample.unstable, &e1()) < 1e-12);
    assert!((s.rate - 2.0).abs() < 1e-9);
    assert!((s.gap - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    let report = verify_splitting(&s, &coc, 64).unwrap();
    assert!(report.passes(), "{report:?}");
    assert!(report.invariance_stable < 1e-12 && report.invariance_unstable < 1e-12);
}

#[test]
fn swapped_splitting_fails_verification() {
    let coc = hyperbolic();
    let mut s = construct_splitting(&coc, &SplittingParams::default()).unwrap();
    for sample in &mut s.samples {
        std::mem::swap(&mut sample.stable, &mut sample.unstable);
    }
    let report = verify_splitting(&s, &coc, 64).unwrap();
    assert!(!report.contraction_ok);
    assert!(!report.passes());
}

#[test]
fn rotation_has_no_splitting() {
    assert!(construct_splitting(&rotation(0.7), &SplittingParams::default()).is_err());
}

#[test]
fn growth_rate_of_sqrt3() {
    let coc = CocycleSystem::constant(Mat2::from_real(3f64.sqrt(), 0.0, 0.0, 1.0 / 3f64.sqrt()));
    let g = uniform_growth_estimate(&coc, 32, 8, Execution::Sequential).unwrap();
    assert!((g.lambda - 3f64.sqrt()).abs() < 1e-9, "{g:?}");
    assert!((g.c - 1.0).abs() < 1e-6);
}

#[test]
fn classify_collects_evidence() {
    let Classification::Uh(ev) = classify_uh(&hyperbolic(), &ClassifyParams::default()) else { panic!() };
    assert!(ev.certificate.margin() > 0.0);
    assert!(ev.report.passes());
    assert!((ev.growth.lambda - 2.0).abs() < 1e-6);
    assert!(classify_uh(&rotation(1.0), &ClassifyParams::default()).is_not_uh());
}

#[test]
fn sequential_and_parallel_agree() {
    let coc = CocycleSystem::new(BaseSystem::rotation(GOLDEN).unwrap(), Arc::new(TwistedDiag(1.5)));
    let a = classify_uh(&coc, &ClassifyParams::default().with_execution(Execution::Sequential));
    let b = classify_uh(&coc, &ClassifyParams::default().with_execution(Execution::Parallel));
    assert!(a.is_uh());
    assert_eq!(a, b);
}

#[test]
fn quasi_periodic_splitting_rotates_with_base() {
    let coc = CocycleSystem::new(BaseSystem::rotation(GOLDEN).unwrap(), Arc::new(TwistedDiag(1.5)));
    let s = construct_splitting(&coc, &SplittingParams { omega_density: 8, ..Default::default() }).unwrap();
    for sample in &s.samples {
        let BasePoint::CircleCoordinate(x) = sample.omega else { unreachable!() };
        let t = std::f64::consts::TAU * x;
        let unstable = ProjectivePoint::new([c(t.cos(), 0.0), c(t.sin(), 0.0)]).unwrap();
        assert!(angle_distance(&sample.unstable, &unstable) < 1e-9);
        assert!(angle_distance(&sample.stable, &unstable.orthogonal()) < 1e-9);
    }
    assert!((s.rate - 1.5).abs() < 1e-6);
    assert!(verify_splitting(&s, &coc, 128).unwrap().passes());
}

#[test]
fn robustness_bound_and_probe() {
    let coc = hyperbolic();
    let SearchOutcome::Certificate(cert) = sacker_sell_search(&coc, 2, &SearchParams::default()).unwrap() else { panic!() };
    let bound = robustness_margin_bound(&cert);
    assert!(bound > 0.0 && bound < 1.0, "{bound}");
    for seed in 0..20 {
        assert!(robustness_probe(&coc, &cert, 0.5 * bound, &SearchParams::default(), seed));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn diagonal_classification_follows_eigenvalue(lambda in 1.05f64..4.0) {
        let coc = CocycleSystem::constant(Mat2::from_real(lambda, 0.0, 0.0, 1.0 / lambda));
        let cls = classify_uh(&coc, &ClassifyParams::default());
        prop_assert!(cls.is_uh(), "{}", cls.label());
    }

    #[test]
    fn rotations_are_never_uh(t in 0.0f64..std::f64::consts::TAU) {
        let cls = classify_uh(&rotation(t), &ClassifyParams::default());
        prop_assert!(cls.is_not_uh());
    }

    #[test]
    fn conjugation_preserves_certificate(lambda in 1.2f64..3.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let p = Mat2::from_real(1.0, a, b, 1.0 + a * b);
        let m = p * Mat2::from_real(lambda, 0.0, 0.0, 1.0 / lambda) * p.inverse();
        let cls = classify_uh(&CocycleSystem::constant(m), &ClassifyParams::default());
        prop_assert!(cls.is_uh(), "{}", cls.label());
    }
}
