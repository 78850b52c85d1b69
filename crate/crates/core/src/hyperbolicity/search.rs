use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dynamics::{BasePoint, CocycleSystem, Direction};
use crate::linalg::{vec_norm, ProjectivePoint, Vec2};
use crate::par::{self, Execution};

use super::HyperbolicityError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub epsilon: f64,
    pub slack: f64,
    /// Points per axis of the `(θ, φ)` grid on ℂℙ¹.
    pub projective_grid: usize,
    /// Ω grid density for circle rotations; periodic orbits use every point.
    pub omega_density: usize,
    /// Number of grid minima handed to local refinement.
    pub refine_starts: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            epsilon: 1e-2,
            slack: 1e-3,
            projective_grid: 64,
            omega_density: 32,
            refine_starts: 4,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDescription {
    pub omega_points: usize,
    pub projective_grid: usize,
    pub refine_starts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UHCertificate {
    pub n: usize,
    pub epsilon: f64,
    pub grid: GridDescription,
    pub min_max_growth: f64,
    /// `B = max ‖A(ω)‖` over the sampled Ω.
    pub max_fiber_norm: f64,
}

impl UHCertificate {
    pub fn margin(&self) -> f64 {
        self.min_max_growth - (1.0 + self.epsilon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedOrbitWitness {
    pub omega: BasePoint,
    pub v: Vec2,
    pub horizon: usize,
    pub sup_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SearchOutcome {
    Certificate(UHCertificate),
    Witness(BoundedOrbitWitness),
}

/// `max_{|n| ≤ N} ‖Aⁿ(ω)v‖²` as a max of affine functions `c + h·r` of the Bloch vector `r`.
#[derive(Clone, Debug)]
pub(crate) struct Pieces {
    c: Vec<f64>,
    h: Vec<[f64; 3]>,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm3(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn scale3(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn unit3(a: &[f64; 3]) -> [f64; 3] {
    scale3(a, 1.0 / norm3(a))
}

pub(crate) fn bloch_of_angles(theta: f64, phi: f64) -> [f64; 3] {
    let s = (2.0 * theta).sin();
    [s * phi.cos(), s * phi.sin(), (2.0 * theta).cos()]
}

impl Pieces {
    pub(crate) fn build(cocycle: &CocycleSystem, omega: &BasePoint, n: usize) -> Result<Self, HyperbolicityError> {
        let fwd = cocycle.orbit_products(omega, n, Direction::Forward)?;
        let bwd = cocycle.orbit_products(omega, n, Direction::Backward)?;
        let mut items: Vec<(f64, [f64; 3])> =
            fwd.iter().chain(bwd.iter().skip(1)).map(|m| m.bloch_form()).collect();
        // Largest possible value first, so running maxima exceed thresholds early.
        items.sort_by(|a, b| (b.0 + norm3(&b.1)).total_cmp(&(a.0 + norm3(&a.1))));
        Ok(Pieces { c: items.iter().map(|x| x.0).collect(), h: items.iter().map(|x| x.1).collect() })
    }

    pub(crate) fn len(&self) -> usize {
        self.c.len()
    }

    pub(crate) fn eval(&self, r: &[f64; 3]) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for (c, h) in self.c.iter().zip(&self.h) {
            m = m.max(c + dot(h, r));
        }
        m
    }

    /// Like [`Pieces::eval`] but returns early once the value exceeds `cut`.
    fn eval_cut(&self, r: &[f64; 3], cut: f64) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for (c, h) in self.c.iter().zip(&self.h) {
            m = m.max(c + dot(h, r));
            if m > cut {
                return m;
            }
        }
        m
    }

    fn value(&self, i: usize, r: &[f64; 3]) -> f64 {
        self.c[i] + dot(&self.h[i], r)
    }

    /// Exact minimum of the max over a small active set: vertices of the sphere arrangement.
    fn polish(&self, r0: [f64; 3]) -> (f64, [f64; 3]) {
        let mut best = (self.eval(&r0), r0);
        for _ in 0..4 {
            let m0 = best.0;
            let tau = 1e-3 * m0.max(1.0) + 1e-12;
            let mut active: Vec<(f64, usize)> = (0..self.len())
                .map(|i| (self.value(i, &best.1), i))
                .filter(|(v, _)| *v >= m0 - tau)
                .collect();
            active.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            active.truncate(10);
            let idx: Vec<usize> = active.iter().map(|x| x.1).collect();
            let mut cands: Vec<[f64; 3]> = Vec::new();
            for &i in &idx {
                if norm3(&self.h[i]) > 1e-14 {
                    cands.push(scale3(&unit3(&self.h[i]), -1.0));
                }
            }
            for a in 0..idx.len() {
                for b in a + 1..idx.len() {
                    if let Some(r) = self.pair_min(idx[a], idx[b]) {
                        cands.push(r);
                    }
                    for c in b + 1..idx.len() {
                        self.triple(idx[a], idx[b], idx[c], &mut cands);
                    }
                }
            }
            let prev = best.0;
            for r in cands {
                let v = self.eval(&r);
                if v < best.0 {
                    best = (v, r);
                }
            }
            if !(best.0 < prev - 1e-15 * prev.abs()) {
                break;
            }
        }
        best
    }

    /// Minimum of piece `i` on the circle where pieces `i` and `j` are equal.
    fn pair_min(&self, i: usize, j: usize) -> Option<[f64; 3]> {
        let w = sub(&self.h[i], &self.h[j]);
        let nw = norm3(&w);
        if nw < 1e-14 {
            return None;
        }
        let s = (self.c[j] - self.c[i]) / nw;
        if s.abs() > 1.0 {
            return None;
        }
        let m = scale3(&w, 1.0 / nw);
        let hi = &self.h[i];
        let hp = sub(hi, &scale3(&m, dot(hi, &m)));
        let rho = (1.0 - s * s).sqrt();
        let np = norm3(&hp);
        let dir = if np > 1e-14 {
            scale3(&hp, -1.0 / np)
        } else {
            let t = if m[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            unit3(&cross(&m, &t))
        };
        let r = [s * m[0] + rho * dir[0], s * m[1] + rho * dir[1], s * m[2] + rho * dir[2]];
        Some(r)
    }

    /// Points of the sphere where pieces `i`, `j`, `k` coincide.
    fn triple(&self, i: usize, j: usize, k: usize, out: &mut Vec<[f64; 3]>) {
        let w1 = sub(&self.h[i], &self.h[j]);
        let w2 = sub(&self.h[i], &self.h[k]);
        let b1 = self.c[j] - self.c[i];
        let b2 = self.c[k] - self.c[i];
        let d = cross(&w1, &w2);
        let nd2 = dot(&d, &d);
        if nd2 < 1e-24 {
            return;
        }
        let (g11, g12, g22) = (dot(&w1, &w1), dot(&w1, &w2), dot(&w2, &w2));
        let det = g11 * g22 - g12 * g12;
        let a = (b1 * g22 - b2 * g12) / det;
        let b = (b2 * g11 - b1 * g12) / det;
        let p0 = [a * w1[0] + b * w2[0], a * w1[1] + b * w2[1], a * w1[2] + b * w2[2]];
        let q = 1.0 - dot(&p0, &p0);
        if q < 0.0 {
            return;
        }
        let t = (q / nd2).sqrt();
        for sgn in [1.0, -1.0] {
            out.push([p0[0] + sgn * t * d[0], p0[1] + sgn * t * d[1], p0[2] + sgn * t * d[2]]);
        }
    }
}

/// Nelder–Mead in the plane; returns the best vertex and value.
pub(crate) fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: F, x0: [f64; 2], step: f64, max_iter: usize) -> ([f64; 2], f64) {
    let mut s = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut v = [f(s[0]), f(s[1]), f(s[2])];
    for _ in 0..max_iter {
        let mut ord = [0usize, 1, 2];
        ord.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        s = [s[ord[0]], s[ord[1]], s[ord[2]]];
        v = [v[ord[0]], v[ord[1]], v[ord[2]]];
        let size = (s[1][0] - s[0][0]).abs() + (s[1][1] - s[0][1]).abs() + (s[2][0] - s[0][0]).abs() + (s[2][1] - s[0][1]).abs();
        if v[2] - v[0] <= 1e-15 * v[0].abs().max(1.0) && size < 1e-10 || size < 1e-13 {
            break;
        }
        let cen = [(s[0][0] + s[1][0]) / 2.0, (s[0][1] + s[1][1]) / 2.0];
        let at = |t: f64| [cen[0] + t * (s[2][0] - cen[0]), cen[1] + t * (s[2][1] - cen[1])];
        let xr = at(-1.0);
        let fr = f(xr);
        if fr < v[0] {
            let xe = at(-2.0);
            let fe = f(xe);
            if fe < fr {
                s[2] = xe;
                v[2] = fe;
            } else {
                s[2] = xr;
                v[2] = fr;
            }
        } else if fr < v[1] {
            s[2] = xr;
            v[2] = fr;
        } else {
            let (xc, fc) = if fr < v[2] {
                let x = at(-0.5);
                (x, f(x))
            } else {
                let x = at(0.5);
                (x, f(x))
            };
            if fc < v[2].min(fr) {
                s[2] = xc;
                v[2] = fc;
            } else {
                for k in 1..3 {
                    s[k] = [(s[0][0] + s[k][0]) / 2.0, (s[0][1] + s[k][1]) / 2.0];
                    v[k] = f(s[k]);
                }
            }
        }
    }
    let mut b = 0;
    for k in 1..3 {
        if v[k] < v[b] {
            b = k;
        }
    }
    (s[b], v[b])
}

fn angles_of_bloch(r: &[f64; 3]) -> [f64; 2] {
    let n = norm3(r);
    [0.5 * (r[2] / n).clamp(-1.0, 1.0).acos(), r[1].atan2(r[0])]
}

/// Local refinement: Nelder–Mead in `(θ, φ)` followed by the exact active-set polish.
fn refine(pieces: &Pieces, r0: [f64; 3], step: f64) -> (f64, [f64; 3]) {
    let f = |x: [f64; 2]| pieces.eval(&bloch_of_angles(x[0], x[1]));
    let (x, _) = nelder_mead(f, angles_of_bloch(&r0), step, 400);
    let (x, _) = nelder_mead(f, x, step * 1e-2, 200);
    pieces.polish(bloch_of_angles(x[0], x[1]))
}

struct Grid {
    points: Vec<[f64; 3]>,
    spacing: f64,
}

fn projective_grid(g: usize) -> Grid {
    let g = g.max(2);
    let mut points = Vec::with_capacity(g * g);
    for i in 0..g {
        let theta = FRAC_PI_2 * i as f64 / (g - 1) as f64;
        for j in 0..g {
            let phi = 2.0 * PI * j as f64 / g as f64;
            points.push(bloch_of_angles(theta, phi));
        }
    }
    Grid { points, spacing: FRAC_PI_2 / (g - 1) as f64 }
}

/// Exact `max_{|n| ≤ N} ‖Aⁿ(ω)v‖` by propagating the vector.
pub fn sup_norm_along_orbit(cocycle: &CocycleSystem, omega: &BasePoint, v: &Vec2, n: usize) -> Result<f64, HyperbolicityError> {
    let nv = vec_norm(v);
    let unit = [v[0] / nv, v[1] / nv];
    let f = cocycle.orbit_vector(omega, unit, n, Direction::Forward)?;
    let b = cocycle.orbit_vector(omega, unit, n, Direction::Backward)?;
    Ok(f.iter().chain(b.iter()).map(vec_norm).fold(0.0, f64::max))
}

struct Best {
    value: f64,
    omega: usize,
    r: [f64; 3],
}

/// Minimizes `g(ω, V) = max_{|n| ≤ N} ‖Aⁿ(ω)v‖` over the sampled Ω × ℂℙ¹.
pub fn sacker_sell_search(cocycle: &CocycleSystem, n: usize, params: &SearchParams) -> Result<SearchOutcome, HyperbolicityError> {
    sacker_sell_search_with_hint(cocycle, n, params, None)
}

/// As [`sacker_sell_search`]; a previous witness, if given, is refined first and
/// accepted without a grid pass when it still satisfies the slack bound.
pub fn sacker_sell_search_with_hint(
    cocycle: &CocycleSystem,
    n: usize,
    params: &SearchParams,
    hint: Option<&BoundedOrbitWitness>,
) -> Result<SearchOutcome, HyperbolicityError> {
    let n = n.max(1);
    let grid = projective_grid(params.projective_grid);
    let omegas = cocycle.base.sample_points(params.omega_density);
    let desc = GridDescription {
        omega_points: omegas.len(),
        projective_grid: params.projective_grid,
        refine_starts: params.refine_starts,
    };
    let witness_sq = (1.0 + params.slack).powi(2);

    if let Some(h) = hint {
        let pieces = Pieces::build(cocycle, &h.omega, n)?;
        let r0 = ProjectivePoint::new(h.v)?.bloch();
        let (val, r) = refine(&pieces, r0, grid.spacing);
        if val <= witness_sq {
            if let Some(w) = make_witness(cocycle, &h.omega, &r, n, params.slack)? {
                return Ok(SearchOutcome::Witness(w));
            }
        }
    }

    let k = params.refine_starts.max(1);
    let per_omega = par::map_range(params.execution, omegas.len(), |wi| -> Result<(Pieces, Vec<(f64, usize)>), HyperbolicityError> {
        let pieces = Pieces::build(cocycle, &omegas[wi], n)?;
        let mut top: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let mut cut = f64::INFINITY;
        for (ci, r) in grid.points.iter().enumerate() {
            let v = pieces.eval_cut(r, cut);
            if v < cut || top.len() < k {
                let pos = top.partition_point(|x| x.0 <= v);
                top.insert(pos, (v, ci));
                top.truncate(k);
                if top.len() == k {
                    cut = top[k - 1].0;
                }
            }
        }
        Ok((pieces, top))
    });
    let mut built = Vec::with_capacity(per_omega.len());
    for r in per_omega {
        built.push(r?);
    }
    let mut starts: Vec<(f64, usize, usize)> = built
        .iter()
        .enumerate()
        .flat_map(|(wi, (_, top))| top.iter().map(move |&(v, ci)| (v, wi, ci)))
        .collect();
    starts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    starts.truncate(k);

    let refined = par::map(params.execution, &starts, |&(v, wi, ci)| {
        let (rv, r) = refine(&built[wi].0, grid.points[ci], grid.spacing);
        if rv < v {
            Best { value: rv, omega: wi, r }
        } else {
            Best { value: v, omega: wi, r: grid.points[ci] }
        }
    });
    let best = refined
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.omega.cmp(&b.omega)))
        .expect("at least one start");

    let min_max_growth = best.value.max(0.0).sqrt();
    if min_max_growth > 1.0 + params.epsilon {
        let max_fiber_norm = cocycle.max_fiber_norm(&omegas);
        return Ok(SearchOutcome::Certificate(UHCertificate {
            n,
            epsilon: params.epsilon,
            grid: desc,
            min_max_growth,
            max_fiber_norm,
        }));
    }
    let omega = omegas[best.omega];
    if best.value <= witness_sq {
        if let Some(w) = make_witness(cocycle, &omega, &best.r, n, params.slack)? {
            return Ok(SearchOutcome::Witness(w));
        }
    }
    Err(HyperbolicityError::Inconclusive {
        min_max_growth,
        n,
        omega,
        v: ProjectivePoint::from_bloch(best.r).vector(),
    })
}

fn make_witness(cocycle: &CocycleSystem, omega: &BasePoint, r: &[f64; 3], n: usize, slack: f64) -> Result<Option<BoundedOrbitWitness>, HyperbolicityError> {
    let v = ProjectivePoint::from_bloch(*r).vector();
    let sup_norm = sup_norm_along_orbit(cocycle, omega, &v, n)?;
    if sup_norm <= 1.0 + slack {
        Ok(Some(BoundedOrbitWitness { omega: *omega, v, horizon: n, sup_norm }))
    } else {
        Ok(None)
    }
}
