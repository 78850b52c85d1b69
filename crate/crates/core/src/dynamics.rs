//! Base dynamics `(Ω, T)` and the cocycle engine `(ω, n) ↦ Aⁿ(ω)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Mat2, UnimodularMatrix, Vec2};

pub const DEFAULT_NORM_CAP: f64 = 1e150;
pub const DEFAULT_MAX_ITERATE: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid base system: {0}")]
    InvalidBase(String),
    #[error("fiber value at {omega:?} rejected: {source}")]
    Fiber { omega: BasePoint, source: LinalgError },
    #[error("norm {norm:e} exceeds cap after {steps} steps")]
    Overflow { steps: usize, norm: f64 },
    #[error("|n| = {n} exceeds configured maximum {max}")]
    IterateLimit { n: i64, max: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasePoint {
    OrbitIndex(usize),
    CircleCoordinate(f64),
}

impl BasePoint {
    /// Circle coordinate reduced into `[0, 1)`.
    pub fn circle(x: f64) -> Self {
        BasePoint::CircleCoordinate(reduce_mod1(x))
    }
}

pub fn reduce_mod1(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSystem {
    /// `i ↦ i + stride mod p`; `stride = 1` except for powers of a periodic map.
    PeriodicOrbit { period: usize, stride: usize },
    CircleRotation { frequency: f64 },
}

impl BaseSystem {
    pub fn periodic(period: usize) -> Result<Self, DynamicsError> {
        if period == 0 {
            return Err(DynamicsError::InvalidBase("period must be >= 1".into()));
        }
        Ok(BaseSystem::PeriodicOrbit { period, stride: 1 })
    }

    pub fn rotation(frequency: f64) -> Result<Self, DynamicsError> {
        if !(frequency > 0.0 && frequency < 1.0) {
            return Err(DynamicsError::InvalidBase(format!("frequency {frequency} not in (0,1)")));
        }
        Ok(BaseSystem::CircleRotation { frequency })
    }

    /// The map `T²`.
    pub fn squared(&self) -> Self {
        match *self {
            BaseSystem::PeriodicOrbit { period, stride } => {
                BaseSystem::PeriodicOrbit { period, stride: (2 * stride) % period }
            }
            BaseSystem::CircleRotation { frequency } => {
                BaseSystem::CircleRotation { frequency: reduce_mod1(2.0 * frequency) }
            }
        }
    }

    pub fn contains(&self, omega: &BasePoint) -> bool {
        match (self, omega) {
            (BaseSystem::PeriodicOrbit { period, .. }, BasePoint::OrbitIndex(i)) => i < period,
            (BaseSystem::CircleRotation { .. }, BasePoint::CircleCoordinate(x)) => (0.0..1.0).contains(x),
            _ => false,
        }
    }

    /// Finite surrogate for Ω: every orbit point, or a uniform grid of `density` points.
    pub fn sample_points(&self, density: usize) -> Vec<BasePoint> {
        match *self {
            BaseSystem::PeriodicOrbit { period, .. } => (0..period).map(BasePoint::OrbitIndex).collect(),
            BaseSystem::CircleRotation { .. } => {
                let k = density.max(1);
                (0..k).map(|i| BasePoint::CircleCoordinate(i as f64 / k as f64)).collect()
            }
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, BaseSystem::PeriodicOrbit { .. })
    }
}

pub fn step(base: &BaseSystem, omega: &BasePoint, direction: Direction) -> BasePoint {
    shift(base, omega, if direction == Direction::Forward { 1 } else { -1 })
}

/// `Tᵏω` for any integer `k`.
pub fn shift(base: &BaseSystem, omega: &BasePoint, k: i64) -> BasePoint {
    match (*base, *omega) {
        (BaseSystem::PeriodicOrbit { period, stride }, BasePoint::OrbitIndex(i)) => {
            let p = period as i64;
            let off = (k.rem_euclid(p) * stride as i64).rem_euclid(p);
            BasePoint::OrbitIndex(((i as i64 + off) % p) as usize)
        }
        (BaseSystem::CircleRotation { frequency }, BasePoint::CircleCoordinate(x)) => {
            let f = reduce_mod1(k as f64 * frequency);
            BasePoint::circle(x + f)
        }
        (_, other) => other,
    }
}

/// A continuous fiber map `Ω → G`, sampled pointwise.
pub trait FiberMap: Send + Sync + fmt::Debug {
    fn matrix(&self, omega: &BasePoint) -> Mat2;
}

#[derive(Clone, Debug)]
pub struct ConstantFiber(pub Mat2);

impl FiberMap for ConstantFiber {
    fn matrix(&self, _omega: &BasePoint) -> Mat2 {
        self.0
    }
}

/// One matrix per orbit point of a periodic base.
#[derive(Clone, Debug)]
pub struct TableFiber(pub Vec<Mat2>);

impl FiberMap for TableFiber {
    fn matrix(&self, omega: &BasePoint) -> Mat2 {
        match omega {
            BasePoint::OrbitIndex(i) => self.0[*i % self.0.len()],
            BasePoint::CircleCoordinate(x) => {
                let k = ((x * self.0.len() as f64) as usize).min(self.0.len() - 1);
                self.0[k]
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CocycleSystem {
    pub base: BaseSystem,
    pub fiber: Arc<dyn FiberMap>,
    pub norm_cap: f64,
    pub max_iterate: usize,
}

impl CocycleSystem {
    pub fn new(base: BaseSystem, fiber: Arc<dyn FiberMap>) -> Self {
        CocycleSystem { base, fiber, norm_cap: DEFAULT_NORM_CAP, max_iterate: DEFAULT_MAX_ITERATE }
    }

    pub fn constant(m: Mat2) -> Self {
        CocycleSystem::new(BaseSystem::PeriodicOrbit { period: 1, stride: 1 }, Arc::new(ConstantFiber(m)))
    }

    pub fn periodic_table(ms: Vec<Mat2>) -> Result<Self, DynamicsError> {
        let base = BaseSystem::periodic(ms.len())?;
        Ok(CocycleSystem::new(base, Arc::new(TableFiber(ms))))
    }

    pub fn fiber(&self, omega: &BasePoint) -> Result<UnimodularMatrix, DynamicsError> {
        UnimodularMatrix::new(self.fiber.matrix(omega))
            .map_err(|source| DynamicsError::Fiber { omega: *omega, source })
    }

    pub fn shift(&self, omega: &BasePoint, k: i64) -> BasePoint {
        shift(&self.base, omega, k)
    }

    pub fn max_fiber_norm(&self, samples: &[BasePoint]) -> f64 {
        samples.iter().map(|w| self.fiber.matrix(w).norm()).fold(1.0, f64::max)
    }

    fn check_n(&self, n: i64) -> Result<(), DynamicsError> {
        if n.unsigned_abs() as usize > self.max_iterate {
            return Err(DynamicsError::IterateLimit { n, max: self.max_iterate });
        }
        Ok(())
    }

    /// Raw products `[A⁰, A¹, …, Aᵏ]` in direction `dir`, stopping early past the norm cap.
    pub fn orbit_products(&self, omega: &BasePoint, k: usize, dir: Direction) -> Result<Vec<Mat2>, DynamicsError> {
        self.check_n(k as i64)?;
        let mut out = Vec::with_capacity(k + 1);
        let mut m = Mat2::identity();
        out.push(m);
        let mut w = *omega;
        for _ in 0..k {
            let a = match dir {
                Direction::Forward => {
                    let a = self.fiber(&w)?.into_inner();
                    w = step(&self.base, &w, Direction::Forward);
                    a
                }
                Direction::Backward => {
                    w = step(&self.base, &w, Direction::Backward);
                    self.fiber(&w)?.inverse().into_inner()
                }
            };
            m = a * m;
            if m.frobenius_sq().sqrt() > self.norm_cap || !m.is_finite() {
                break;
            }
            out.push(m);
        }
        Ok(out)
    }

    /// Propagates a vector along the orbit: `[Aⁿ(ω)v]` for `n = 0..=k` in direction `dir`.
    pub fn orbit_vector(&self, omega: &BasePoint, v: Vec2, k: usize, dir: Direction) -> Result<Vec<Vec2>, DynamicsError> {
        let mut out = Vec::with_capacity(k + 1);
        let mut x = v;
        out.push(x);
        let mut w = *omega;
        for _ in 0..k {
            x = match dir {
                Direction::Forward => {
                    let a = self.fiber(&w)?;
                    w = step(&self.base, &w, Direction::Forward);
                    a.apply(&x)
                }
                Direction::Backward => {
                    w = step(&self.base, &w, Direction::Backward);
                    self.fiber(&w)?.inverse().apply(&x)
                }
            };
            out.push(x);
        }
        Ok(out)
    }
}

/// `Aⁿ(ω)`: `A(Tⁿ⁻¹ω)⋯A(ω)` for `n > 0`, `I` for `n = 0`, `A(Tⁿω)⁻¹⋯A(T⁻¹ω)⁻¹` for `n < 0`.
pub fn iterate(cocycle: &CocycleSystem, omega: &BasePoint, n: i64) -> Result<UnimodularMatrix, DynamicsError> {
    cocycle.check_n(n)?;
    let dir = if n >= 0 { Direction::Forward } else { Direction::Backward };
    let mut m = Mat2::identity();
    let mut w = *omega;
    for s in 0..n.unsigned_abs() as usize {
        let a = match dir {
            Direction::Forward => {
                let a = cocycle.fiber(&w)?.into_inner();
                w = step(&cocycle.base, &w, Direction::Forward);
                a
            }
            Direction::Backward => {
                w = step(&cocycle.base, &w, Direction::Backward);
                cocycle.fiber(&w)?.inverse().into_inner()
            }
        };
        m = a * m;
        let norm = m.frobenius_sq().sqrt();
        if !(norm <= cocycle.norm_cap) {
            return Err(DynamicsError::Overflow { steps: s + 1, norm });
        }
    }
    Ok(UnimodularMatrix::trusted(m))
}

/// A product stored as a unit-norm factor times `exp(log_norm)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogScaled {
    pub unit: Mat2,
    pub log_norm: f64,
}

impl LogScaled {
    pub fn identity() -> Self {
        LogScaled { unit: Mat2::identity(), log_norm: 0.0 }
    }

    pub fn left_mul(&mut self, a: &Mat2) {
        let m = *a * self.unit;
        let s = m.norm();
        self.unit = m.scale((1.0 / s).into());
        self.log_norm += s.ln();
    }
}

/// Log-scaled `Aⁿ(ω)`; never overflows.
pub fn iterate_log_scaled(cocycle: &CocycleSystem, omega: &BasePoint, n: i64) -> Result<LogScaled, DynamicsError> {
    cocycle.check_n(n)?;
    let mut acc = LogScaled::identity();
    let mut w = *omega;
    for _ in 0..n.unsigned_abs() {
        if n > 0 {
            let a = cocycle.fiber(&w)?;
            w = step(&cocycle.base, &w, Direction::Forward);
            acc.left_mul(a.matrix());
        } else {
            w = step(&cocycle.base, &w, Direction::Backward);
            acc.left_mul(cocycle.fiber(&w)?.inverse().matrix());
        }
    }
    Ok(acc)
}
