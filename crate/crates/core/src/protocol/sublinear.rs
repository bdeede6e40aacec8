//! Covariant preparation at a sublinear rate: estimate the phase from N
//! copies, then emit M phase-shifted copies of the target. The output error
//! is governed by M times the single-copy shift error, so it vanishes as
//! M/N → 0.

use rand::Rng;

use crate::error::Result;
use crate::hamiltonian::HarmonicHamiltonian;
use crate::linalg::CMat;
use crate::state::{tensor_power, time_evolve, DensityMatrix};

use super::povm::iid_estimator_distribution;

/// One sampled run: the estimate drawn from ρ^⊗N and the prepared state
/// 𝒯_{t_est}(ρ′^⊗M). M = 0 yields the empty (scalar) state.
pub fn sublinear_prepare<R: Rng>(
    rho: &DensityMatrix,
    n_copies: usize,
    rho_prime: &DensityMatrix,
    m_copies: usize,
    h: &HarmonicHamiltonian,
    bins: usize,
    rng: &mut R,
) -> Result<(f64, DensityMatrix)> {
    if m_copies == 0 {
        return Ok((0.0, DensityMatrix::from_valid(CMat::identity(1, 1))));
    }
    let dist = iid_estimator_distribution(rho, h, n_copies, bins)?;
    let t_est = dist.sample(rng);
    let hm = h.copies(m_copies)?;
    let out = time_evolve(&tensor_power(rho_prime, m_copies)?, &hm, t_est)?;
    Ok((t_est, out))
}

/// Mean trace-norm error of `shots` sampled preparations against ρ′^⊗M.
pub fn sublinear_mean_error<R: Rng>(
    rho: &DensityMatrix,
    n_copies: usize,
    rho_prime: &DensityMatrix,
    m_copies: usize,
    h: &HarmonicHamiltonian,
    bins: usize,
    shots: usize,
    rng: &mut R,
) -> Result<f64> {
    if m_copies == 0 {
        return Ok(0.0);
    }
    let ideal = tensor_power(rho_prime, m_copies)?;
    let mut total = 0.0;
    for _ in 0..shots {
        let (_, out) = sublinear_prepare(rho, n_copies, rho_prime, m_copies, h, bins, rng)?;
        total += crate::state::trace_distance(&out, &ideal)?;
    }
    Ok(total / shots as f64)
}
