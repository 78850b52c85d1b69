use std::sync::Arc;

use proptest::prelude::*;

use cmvuh::dynamics::{
    iterate, iterate_log_scaled, shift, BasePoint, BaseSystem, CocycleSystem, Direction, DynamicsError, TableFiber,
};
use cmvuh::linalg::{c, Mat2};

fn rotation_table() -> CocycleSystem {
    let (s, co) = (0.3f64.sin(), 0.3f64.cos());
    CocycleSystem::periodic_table(vec![
        Mat2::from_real(2.0, 1.0, 0.0, 0.5),
        Mat2::from_real(co, -s, s, co),
        Mat2::new(c(0.0, 1.0), c(0.5, 0.0), c(0.0, 0.0), c(0.0, -1.0)),
    ])
    .unwrap()
}

#[test]
fn base_validation() {
    assert!(matches!(BaseSystem::periodic(0), Err(DynamicsError::InvalidBase(_))));
    assert!(BaseSystem::rotation(1.0).is_err());
    assert!(BaseSystem::rotation(0.0).is_err());
    assert!(BaseSystem::rotation(0.5).is_ok());
}

#[test]
fn periodic_shift_wraps() {
    let b = BaseSystem::periodic(3).unwrap();
    assert_eq!(shift(&b, &BasePoint::OrbitIndex(2), 1), BasePoint::OrbitIndex(0));
    assert_eq!(shift(&b, &BasePoint::OrbitIndex(0), -1), BasePoint::OrbitIndex(2));
    assert_eq!(shift(&b, &BasePoint::OrbitIndex(1), -7), BasePoint::OrbitIndex(0));
}

#[test]
fn squared_periodic_base_uses_stride_two() {
    let b = BaseSystem::periodic(3).unwrap().squared();
    assert_eq!(shift(&b, &BasePoint::OrbitIndex(0), 1), BasePoint::OrbitIndex(2));
    assert_eq!(shift(&b, &BasePoint::OrbitIndex(0), 3), BasePoint::OrbitIndex(0));
    let r = BaseSystem::rotation(0.7).unwrap().squared();
    assert_eq!(r, BaseSystem::CircleRotation { frequency: 0.3999999999999999 });
}

#[test]
fn rotation_shift_reduces_mod_one() {
    let b = BaseSystem::rotation(0.75).unwrap();
    let BasePoint::CircleCoordinate(x) = shift(&b, &BasePoint::circle(0.5), 1) else { panic!() };
    assert!((x - 0.25).abs() < 1e-15);
    let BasePoint::CircleCoordinate(y) = shift(&b, &BasePoint::circle(0.5), -3) else { panic!() };
    assert!((y - 0.25).abs() < 1e-15);
}

#[test]
fn constant_iterate_is_power() {
    let coc = CocycleSystem::constant(Mat2::from_real(2.0, 0.0, 0.0, 0.5));
    let a3 = iterate(&coc, &BasePoint::OrbitIndex(0), 3).unwrap();
    assert_eq!(*a3.matrix(), Mat2::from_real(8.0, 0.0, 0.0, 0.125));
    let am2 = iterate(&coc, &BasePoint::OrbitIndex(0), -2).unwrap();
    assert_eq!(*am2.matrix(), Mat2::from_real(0.25, 0.0, 0.0, 4.0));
    assert_eq!(*iterate(&coc, &BasePoint::OrbitIndex(0), 0).unwrap().matrix(), Mat2::identity());
}

#[test]
fn overflow_is_reported() {
    let coc = CocycleSystem::constant(Mat2::from_real(1e10, 0.0, 0.0, 1e-10));
    assert!(matches!(iterate(&coc, &BasePoint::OrbitIndex(0), 40), Err(DynamicsError::Overflow { .. })));
    let log = iterate_log_scaled(&coc, &BasePoint::OrbitIndex(0), 40).unwrap();
    assert!((log.log_norm - 400.0 * 10f64.ln()).abs() < 1e-9);
}

#[test]
fn iterate_limit_is_enforced() {
    let mut coc = CocycleSystem::constant(Mat2::identity());
    coc.max_iterate = 10;
    assert!(matches!(iterate(&coc, &BasePoint::OrbitIndex(0), 11), Err(DynamicsError::IterateLimit { .. })));
}

#[test]
fn non_unimodular_fiber_is_rejected() {
    let coc = CocycleSystem::new(BaseSystem::periodic(1).unwrap(), Arc::new(TableFiber(vec![Mat2::from_real(2.0, 0.0, 0.0, 1.0)])));
    assert!(matches!(iterate(&coc, &BasePoint::OrbitIndex(0), 1), Err(DynamicsError::Fiber { .. })));
}

#[test]
fn orbit_vector_matches_iterate() {
    let coc = rotation_table();
    let w = BasePoint::OrbitIndex(1);
    let v = [c(0.3, 0.1), c(-0.2, 0.9)];
    let fwd = coc.orbit_vector(&w, v, 7, Direction::Forward).unwrap();
    let bwd = coc.orbit_vector(&w, v, 7, Direction::Backward).unwrap();
    for k in 0..=7i64 {
        let f = iterate(&coc, &w, k).unwrap().apply(&v);
        let b = iterate(&coc, &w, -k).unwrap().apply(&v);
        for i in 0..2 {
            assert!((f[i] - fwd[k as usize][i]).norm() < 1e-12);
            assert!((b[i] - bwd[k as usize][i]).norm() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn cocycle_property(n in -12i64..12, m in -12i64..12, i in 0usize..3) {
        let coc = rotation_table();
        let w = BasePoint::OrbitIndex(i);
        let lhs = iterate(&coc, &w, n + m).unwrap();
        let rhs = *iterate(&coc, &coc.shift(&w, m), n).unwrap().matrix() * *iterate(&coc, &w, m).unwrap().matrix();
        let scale = lhs.matrix().norm().max(1.0);
        prop_assert!(lhs.matrix().max_abs_diff(&rhs) <= 1e-10 * scale);
    }

    #[test]
    fn inverse_identity(n in 0i64..20, i in 0usize..3) {
        let coc = rotation_table();
        let w = BasePoint::OrbitIndex(i);
        let back = iterate(&coc, &coc.shift(&w, n), -n).unwrap();
        let fwd_inv = iterate(&coc, &w, n).unwrap().inverse();
        let scale = fwd_inv.matrix().norm().max(1.0);
        prop_assert!(back.matrix().max_abs_diff(fwd_inv.matrix()) <= 1e-10 * scale);
    }

    #[test]
    fn log_scaled_matches_direct(n in -20i64..20, i in 0usize..3) {
        let coc = rotation_table();
        let w = BasePoint::OrbitIndex(i);
        let direct = iterate(&coc, &w, n).unwrap();
        let log = iterate_log_scaled(&coc, &w, n).unwrap();
        let rebuilt = log.unit.scale(c(log.log_norm.exp(), 0.0));
        let scale = direct.matrix().norm();
        prop_assert!(rebuilt.max_abs_diff(direct.matrix()) <= 1e-10 * scale);
    }

    #[test]
    fn rotation_shift_composes(x in 0.0f64..1.0, j in -50i64..50, k in -50i64..50) {
        let b = BaseSystem::rotation(0.618_033_988_749_894_8).unwrap();
        let lhs = shift(&b, &shift(&b, &BasePoint::circle(x), j), k);
        let rhs = shift(&b, &BasePoint::circle(x), j + k);
        let (BasePoint::CircleCoordinate(p), BasePoint::CircleCoordinate(q)) = (lhs, rhs) else { unreachable!() };
        let d = (p - q).abs();
        prop_assert!(d.min(1.0 - d) < 1e-12);
    }
}
