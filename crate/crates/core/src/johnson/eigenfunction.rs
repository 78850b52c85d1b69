use crate::cmv::{gz_matrices, solve_difference, SolutionPair, VerblunskySequence};
use crate::hyperbolicity::{sup_norm_along_orbit, BoundedOrbitWitness};
use crate::linalg::C64;

use super::{gz_cocycle, JohnsonError};

/// Generalized eigenfunction `u` on `[−2N, 2N+1]` from a bounded GZ orbit, `N` the witness horizon.
pub fn bounded_orbit_to_eigenfunction(
    seq: &VerblunskySequence,
    z: C64,
    witness: &BoundedOrbitWitness,
) -> Result<SolutionPair, JohnsonError> {
    let cocycle = gz_cocycle(seq, z)?;
    let n = witness.horizon as i64;
    let sup = sup_norm_along_orbit(&cocycle, &witness.omega, &witness.v, witness.horizon)?;
    if !(sup <= witness.sup_norm * (1.0 + 1e-9) + 1e-12) {
        return Err(JohnsonError::WitnessStale(format!("orbit sup-norm {sup} exceeds recorded {}", witness.sup_norm)));
    }
    let v = witness.v;
    let scale = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let init = (v[0] / scale, v[1] / scale);
    let solution = solve_difference(seq, &witness.omega, z, init, (-2 * n, 2 * n + 1))?;
    let mut p_norm: f64 = 1.0;
    for k in -n..=n {
        let (p, _) = gz_matrices(seq.alpha_at(&witness.omega, 2 * k)?, z)?;
        p_norm = p_norm.max(p.matrix().norm());
    }
    let sup_u = solution.sup_u();
    let bound = sup * p_norm * (1.0 + 1e-9);
    if !(sup_u <= bound) {
        return Err(JohnsonError::WitnessStale(format!("sup |u| = {sup_u} exceeds {bound}")));
    }
    let residual = solution.interior_residual();
    if !(residual < 1e-8 * sup_u) {
        return Err(JohnsonError::WitnessStale(format!("interior residual {residual:e} at sup |u| = {sup_u}")));
    }
    Ok(solution)
}
