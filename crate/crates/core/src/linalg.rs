//! Closed-form 2×2 complex linear algebra and the projective line.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Tolerance on `| |det| - 1 |` accepted by [`UnimodularMatrix::new`].
pub const UNIMODULAR_TOL: f64 = 1e-10;

/// Matrices with `‖A‖ <= 1 + DEGENERACY_TOL` have no well-defined singular directions.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("|det| = {modulus} is not 1 within tolerance")]
    NotUnimodular { modulus: f64 },
    #[error("zero vector has no projective class")]
    ZeroVector,
    #[error("operator norm {norm} too close to 1: singular directions undefined")]
    NearUnitary { norm: f64 },
    #[error("R = {r} outside [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub type Vec2 = [C64; 2];

pub fn vec_norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn inner(v: &Vec2, w: &Vec2) -> C64 {
    v[0].conj() * w[0] + v[1].conj() * w[1]
}

/// General 2×2 complex matrix, row major.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(f, "[[{}, {}], [{}, {}]]", m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

impl Mat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Mat2([[one, zero], [zero, one]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Mat2([[a, zero], [zero, d]])
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    /// Inverse via the adjugate. Caller guarantees `det != 0`.
    pub fn inverse(&self) -> Self {
        let m = &self.0;
        let d = self.det();
        Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest singular value from the closed-form eigenvalues of `A*A`.
    pub fn norm(&self) -> f64 {
        let (p, s, q) = self.gram();
        let half = 0.5 * (p - s);
        (0.5 * (p + s) + (half * half + q.norm_sqr()).sqrt()).sqrt()
    }

    /// `(H11, H22, H12)` of `H = A*A`.
    fn gram(&self) -> (f64, f64, C64) {
        let m = &self.0;
        let p = m[0][0].norm_sqr() + m[1][0].norm_sqr();
        let s = m[0][1].norm_sqr() + m[1][1].norm_sqr();
        let q = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
        (p, s, q)
    }

    /// Affine form of `v ↦ ‖Av‖²` on the Bloch sphere: `‖Av‖² = c + h·r` for unit `v ↔ r`.
    pub fn bloch_form(&self) -> (f64, [f64; 3]) {
        let (p, s, q) = self.gram();
        (0.5 * (p + s), [q.re, -q.im, 0.5 * (p - s)])
    }

    /// Direction of the top right singular vector (eigenvector of `A*A` for `‖A‖²`).
    pub(crate) fn top_right_singular(&self) -> Vec2 {
        let (p, s, q) = self.gram();
        let half = 0.5 * (p - s);
        let lam = 0.5 * (p + s) + (half * half + q.norm_sqr()).sqrt();
        let x1 = [q, C64::new(lam - p, 0.0)];
        let x2 = [C64::new(lam - s, 0.0), q.conj()];
        let (n1, n2) = (vec_norm(&x1), vec_norm(&x2));
        if n1 == 0.0 && n2 == 0.0 {
            return [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        }
        if n1 >= n2 {
            [x1[0] / n1, x1[1] / n1]
        } else {
            [x2[0] / n2, x2[1] / n2]
        }
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// A 2×2 complex matrix with `|det| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnimodularMatrix(Mat2);

impl UnimodularMatrix {
    pub fn new(m: Mat2) -> Result<Self, LinalgError> {
        Self::with_tolerance(m, UNIMODULAR_TOL)
    }

    /// The determinant check is relative to `‖A‖_F²/2`, the scale of its rounding error.
    pub fn with_tolerance(m: Mat2, tol: f64) -> Result<Self, LinalgError> {
        if !m.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let modulus = m.det().norm();
        let scale = (0.5 * m.frobenius_sq()).max(1.0);
        if (modulus - 1.0).abs() > tol * scale {
            return Err(LinalgError::NotUnimodular { modulus });
        }
        Ok(UnimodularMatrix(m))
    }

    pub fn identity() -> Self {
        UnimodularMatrix(Mat2::identity())
    }

    /// Products and inverses of unimodular matrices; no check performed.
    pub(crate) fn trusted(m: Mat2) -> Self {
        UnimodularMatrix(m)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn into_inner(self) -> Mat2 {
        self.0
    }

    pub fn det(&self) -> C64 {
        self.0.det()
    }

    pub fn inverse(&self) -> Self {
        UnimodularMatrix(self.0.inverse())
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        self.0.apply(v)
    }
}

impl Mul for UnimodularMatrix {
    type Output = UnimodularMatrix;
    fn mul(self, rhs: UnimodularMatrix) -> UnimodularMatrix {
        UnimodularMatrix(self.0 * rhs.0)
    }
}

/// A complex line in ℂ², stored as a unit representative with canonical phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    rep: Vec2,
}

impl ProjectivePoint {
    pub fn new(v: Vec2) -> Result<Self, LinalgError> {
        if !(v[0].re.is_finite() && v[0].im.is_finite() && v[1].re.is_finite() && v[1].im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let n = vec_norm(&v);
        if n == 0.0 {
            return Err(LinalgError::ZeroVector);
        }
        let lead = if v[0] != C64::new(0.0, 0.0) { v[0] } else { v[1] };
        let phase = lead.conj() / lead.norm();
        Ok(ProjectivePoint { rep: [v[0] * phase / n, v[1] * phase / n] })
    }

    /// `v = (cos θ, e^{iφ} sin θ)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let v = [C64::new(theta.cos(), 0.0), C64::from_polar(theta.sin(), phi)];
        ProjectivePoint::new(v).expect("unit vector")
    }

    /// Line whose Bloch vector is `r` (any nonzero direction).
    pub fn from_bloch(r: [f64; 3]) -> Self {
        let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let z = (r[2] / n).clamp(-1.0, 1.0);
        let a = z.acos();
        let phi = r[1].atan2(r[0]);
        ProjectivePoint::from_angles(0.5 * a, phi)
    }

    pub fn vector(&self) -> Vec2 {
        self.rep
    }

    /// Bloch vector `(2 Re v₁v̄₂, −2 Im v₁v̄₂, |v₁|² − |v₂|²)`.
    pub fn bloch(&self) -> [f64; 3] {
        let x = self.rep[0] * self.rep[1].conj();
        [2.0 * x.re, -2.0 * x.im, self.rep[0].norm_sqr() - self.rep[1].norm_sqr()]
    }

    pub fn image(&self, m: &Mat2) -> Result<Self, LinalgError> {
        ProjectivePoint::new(m.apply(&self.rep))
    }

    /// The orthogonal line.
    pub fn orthogonal(&self) -> Self {
        ProjectivePoint::new([-self.rep[1].conj(), self.rep[0].conj()]).expect("unit vector")
    }
}

pub fn operator_norm(a: &UnimodularMatrix) -> f64 {
    a.matrix().norm()
}

/// Angle in `[0, π/2]` between two lines, from `atan2(|v ∧ w|, |⟨v, w⟩|)`.
pub fn angle_distance(v: &ProjectivePoint, w: &ProjectivePoint) -> f64 {
    let (a, b) = (&v.rep, &w.rep);
    let wedge = (a[0] * b[1] - a[1] * b[0]).norm();
    wedge.atan2(inner(a, b).norm())
}

/// `‖A‖` together with the contracted line `S(A)` and expanded line `U(A)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularData {
    pub norm: f64,
    pub contracted: ProjectivePoint,
    pub expanded: ProjectivePoint,
}

pub fn singular_directions(a: &UnimodularMatrix) -> Result<SingularData, LinalgError> {
    let norm = operator_norm(a);
    if norm <= 1.0 + DEGENERACY_TOL {
        return Err(LinalgError::NearUnitary { norm });
    }
    let expanded = ProjectivePoint::new(a.matrix().top_right_singular())?;
    Ok(SingularData { norm, contracted: expanded.orthogonal(), expanded })
}

/// Bracket `[lower, (π/2)·lower]` for the angle between `S(A)` and any line `V` with `‖Av‖ = R‖v‖`.
pub fn contracted_angle_bounds(a: &UnimodularMatrix, r: f64) -> Result<(f64, f64), LinalgError> {
    let norm = operator_norm(a);
    if norm <= 1.0 + DEGENERACY_TOL {
        return Err(LinalgError::NearUnitary { norm });
    }
    let (lo, hi) = (1.0 / norm, norm);
    let slack = 1e-12 * norm;
    if !(r >= lo - slack && r <= hi + slack) {
        return Err(LinalgError::OutOfRange { r, lo, hi });
    }
    let ratio = ((r * r - lo * lo) / (hi * hi - lo * lo)).clamp(0.0, 1.0);
    let lower = ratio.sqrt();
    Ok((lower, std::f64::consts::FRAC_PI_2 * lower))
}

/// Mirror of [`contracted_angle_bounds`] for the angle to `U(A)`.
pub fn expanded_angle_bounds(a: &UnimodularMatrix, r: f64) -> Result<(f64, f64), LinalgError> {
    let norm = operator_norm(a);
    if norm <= 1.0 + DEGENERACY_TOL {
        return Err(LinalgError::NearUnitary { norm });
    }
    let (lo, hi) = (1.0 / norm, norm);
    let slack = 1e-12 * norm;
    if !(r >= lo - slack && r <= hi + slack) {
        return Err(LinalgError::OutOfRange { r, lo, hi });
    }
    let ratio = ((hi * hi - r * r) / (hi * hi - lo * lo)).clamp(0.0, 1.0);
    let lower = ratio.sqrt();
    Ok((lower, std::f64::consts::FRAC_PI_2 * lower))
}

/// Eigenvalues of a 2×2 matrix, larger modulus first.
pub fn eigenvalues(m: &Mat2) -> (C64, C64) {
    let t = m.trace();
    let d = m.det();
    let disc = (t * t - 4.0 * d).sqrt();
    let (r1, r2) = ((t + disc) * 0.5, (t - disc) * 0.5);
    let big = if r1.norm() >= r2.norm() { r1 } else { r2 };
    if big.norm() == 0.0 {
        return (big, big);
    }
    (big, d / big)
}
