//! Gibbs states, the free-energy functional and its Rényi extension, and the
//! classical thermomajorization (Blackwell/Lorenz) order.
//!
//! Two free-energy conventions coexist on purpose: the dimensionless
//! F(ρ) = S(ρ‖ρ_Gibbs) and the energy-unit family F_α = (1/β)(S_α − ln Z).
//! Both induce the same ordering at fixed (H, β).

use serde::{Deserialize, Serialize};

use crate::error::{CgpoError, Result};
use crate::hamiltonian::HarmonicHamiltonian;
use crate::linalg::{eigh, CMat, SUPPORT_EPS};
use crate::state::DensityMatrix;

/// Extended Rényi order parameter, including the infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Alpha {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl Alpha {
    pub fn finite(x: f64) -> Self {
        Alpha::Finite(x)
    }
}

/// Probability vector, normalized to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDistribution {
    probs: Vec<f64>,
}

impl ClassicalDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(CgpoError::InvalidDistribution("empty".into()));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(CgpoError::InvalidDistribution(
                "entries must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CgpoError::InvalidDistribution(format!(
                "sums to {total}, not 1 within 1e-12"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn from_state_diagonal(state: &DensityMatrix) -> Result<Self> {
        let mut d = state.diagonal_probs();
        for p in d.iter_mut() {
            *p = p.max(0.0);
        }
        let total: f64 = d.iter().sum();
        Self::new(d.iter().map(|p| p / total).collect())
    }
}

/// Thermal state e^{−βH}/Z as a density matrix (diagonal, full rank for
/// finite β). Large β is handled by shifting to the ground-state energy.
pub fn gibbs_state(h: &HarmonicHamiltonian, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() {
        return Err(CgpoError::InvalidArgument("beta must be finite".into()));
    }
    Ok(DensityMatrix::from_valid(CMat::from_diagonal(
        &nalgebra::DVector::from_iterator(
            h.dim(),
            gibbs_probs(h, beta)
                .into_iter()
                .map(|p| num_complex::Complex64::new(p, 0.0)),
        ),
    )))
}

/// Gibbs weights e^{−βE_i}/Z without overflow at large β.
pub fn gibbs_probs(h: &HarmonicHamiltonian, beta: f64) -> Vec<f64> {
    let energies = h.energies();
    let shift = energies
        .iter()
        .map(|&e| -beta * e)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = energies.iter().map(|&e| (-beta * e - shift).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// Partition function ln Z = ln Σ e^{−βE_i}, evaluated stably.
pub fn ln_partition(h: &HarmonicHamiltonian, beta: f64) -> f64 {
    let energies = h.energies();
    let shift = energies
        .iter()
        .map(|&e| -beta * e)
        .fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = energies.iter().map(|&e| (-beta * e - shift).exp()).sum();
    shift + s.ln()
}

/// Quantum relative entropy S(ρ‖σ) = Tr[ρ ln ρ − ρ ln σ].
///
/// Returns +∞ when the support of ρ is not contained in the support of σ
/// (support membership decided at eigenvalue threshold 1e-10).
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(CgpoError::DimensionMismatch(format!(
            "{} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let (rvals, _) = eigh(rho.matrix());
    let mut s: f64 = 0.0;
    for &p in rvals.iter() {
        if p > SUPPORT_EPS {
            s += p * p.ln();
        }
    }
    let (svals, svecs) = eigh(sigma.matrix());
    for (k, &q) in svals.iter().enumerate() {
        let v = svecs.column(k);
        // ⟨v|ρ|v⟩: weight of ρ along this eigendirection of σ.
        let mut w = 0.0;
        let rv = rho.matrix() * v;
        for (a, b) in v.iter().zip(rv.iter()) {
            w += (a.conj() * b).re;
        }
        if q > SUPPORT_EPS {
            s -= w * q.ln();
        } else if w > SUPPORT_EPS {
            return Ok(f64::INFINITY);
        }
    }
    Ok(s.max(0.0))
}

/// Free energy F(ρ) = S(ρ‖ρ_Gibbs); zero exactly at the Gibbs state.
pub fn free_energy(rho: &DensityMatrix, h: &HarmonicHamiltonian, beta: f64) -> Result<f64> {
    relative_entropy(rho, &gibbs_state(h, beta)?)
}

/// Classical KL divergence, used as the α = 1 limit.
fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            s += pi * (pi / qi).ln();
        }
    }
    s.max(0.0)
}

/// Rényi α-divergence S_α(p‖q) = sgn(α)/(α−1) · ln Σ p_i^α / q_i^{α−1},
/// with the α ∈ {0, 1, ±∞} cases defined through their limits.
pub fn renyi_divergence(
    p: &ClassicalDistribution,
    q: &ClassicalDistribution,
    alpha: Alpha,
) -> Result<f64> {
    if p.len() != q.len() {
        return Err(CgpoError::DimensionMismatch(format!(
            "{} vs {}",
            p.len(),
            q.len()
        )));
    }
    let pv = p.probs();
    let qv = q.probs();
    // q must be strictly positive wherever it matters; zero q on the support
    // of p sends the divergence to +infinity for alpha >= 0.
    let value = match alpha {
        Alpha::Finite(a) if !a.is_finite() => {
            return Err(CgpoError::InvalidArgument("alpha must be finite or ±∞".into()))
        }
        Alpha::Finite(a) if (a - 1.0).abs() < 1e-12 => kl_divergence(pv, qv),
        Alpha::Finite(a) if a.abs() < 1e-12 => {
            // Right limit α → 0⁺: −ln Σ_{i: p_i>0} q_i.
            let mass: f64 = pv
                .iter()
                .zip(qv.iter())
                .filter(|(&pi, _)| pi > 0.0)
                .map(|(_, &qi)| qi)
                .sum();
            if mass <= 0.0 {
                f64::INFINITY
            } else {
                (-mass.ln()).max(0.0)
            }
        }
        Alpha::Finite(a) => {
            let mut sum = 0.0f64;
            for (&pi, &qi) in pv.iter().zip(qv.iter()) {
                if a > 0.0 && a < 1.0 {
                    // p^α q^{1−α}: zero p or q contributes nothing.
                    if pi > 0.0 && qi > 0.0 {
                        sum += pi.powf(a) * qi.powf(1.0 - a);
                    }
                } else if a > 1.0 {
                    if pi > 0.0 {
                        if qi <= 0.0 {
                            return Ok(f64::INFINITY);
                        }
                        sum += pi.powf(a) * qi.powf(1.0 - a);
                    }
                } else {
                    // a < 0: zeros of p blow up.
                    if qi > 0.0 {
                        if pi <= 0.0 {
                            return Ok(f64::INFINITY);
                        }
                        sum += pi.powf(a) * qi.powf(1.0 - a);
                    }
                }
            }
            if !sum.is_finite() || sum <= 0.0 {
                return Err(CgpoError::InvalidArgument(format!(
                    "Rényi sum degenerate ({sum}) at alpha {a}"
                )));
            }
            let v = a.signum() / (a - 1.0) * sum.ln();
            if v.is_nan() {
                return Err(CgpoError::InvalidArgument(
                    "NaN-producing Rényi input".into(),
                ));
            }
            v.max(0.0)
        }
        Alpha::PlusInfinity => {
            let mut m = 0.0f64;
            for (&pi, &qi) in pv.iter().zip(qv.iter()) {
                if pi > 0.0 {
                    if qi <= 0.0 {
                        return Ok(f64::INFINITY);
                    }
                    m = m.max(pi / qi);
                }
            }
            m.ln().max(0.0)
        }
        Alpha::MinusInfinity => {
            let mut m = 0.0f64;
            for (&pi, &qi) in pv.iter().zip(qv.iter()) {
                if qi > 0.0 {
                    if pi <= 0.0 {
                        return Ok(f64::INFINITY);
                    }
                    m = m.max(qi / pi);
                }
            }
            m.ln().max(0.0)
        }
    };
    Ok(value)
}

/// Extended free energy F_α(p) = (1/β)(S_α(p‖p_Gibbs) − ln Z).
pub fn extended_free_energy(
    p: &ClassicalDistribution,
    h: &HarmonicHamiltonian,
    beta: f64,
    alpha: Alpha,
) -> Result<f64> {
    if beta == 0.0 {
        return Err(CgpoError::InvalidArgument(
            "infinite-temperature extended free energy undefined".into(),
        ));
    }
    if p.len() != h.dim() {
        return Err(CgpoError::DimensionMismatch(format!(
            "distribution {} vs Hamiltonian {}",
            p.len(),
            h.dim()
        )));
    }
    let q = ClassicalDistribution::new(gibbs_probs(h, beta))?;
    let s = renyi_divergence(p, &q, alpha)?;
    Ok((s - ln_partition(h, beta)) / beta)
}

/// Piecewise-linear majorization curve of a distribution pair.
///
/// Breakpoints are (Σ p*, Σ q*) after the joint sort ascending in p_i/q_i;
/// ties in the ratio are merged into single segments, so the curve is concave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzCurve {
    breakpoints: Vec<(f64, f64)>,
}

impl LorenzCurve {
    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Curve height at abscissa x by linear interpolation.
    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.breakpoints;
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        for w in pts.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if x <= x1 {
                if x1 - x0 <= 0.0 {
                    // Vertical segment: the curve jumps; take the upper value.
                    return y1.max(y0);
                }
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        1.0
    }

    /// Slopes are nonincreasing within the given tolerance.
    pub fn is_concave(&self, tol: f64) -> bool {
        let mut prev_slope = f64::INFINITY;
        for w in self.breakpoints.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let dx = x1 - x0;
            if dx <= 0.0 {
                // Vertical rise only allowed as the first segment.
                if x0 > 0.0 || x1 > 0.0 {
                    return false;
                }
                continue;
            }
            let slope = (y1 - y0) / dx;
            if slope > prev_slope + tol {
                return false;
            }
            prev_slope = slope;
        }
        true
    }
}

/// Lorenz curve of (p, q); q must be strictly positive.
pub fn lorenz_curve(p: &ClassicalDistribution, q: &ClassicalDistribution) -> Result<LorenzCurve> {
    if p.len() != q.len() {
        return Err(CgpoError::DimensionMismatch(format!(
            "{} vs {}",
            p.len(),
            q.len()
        )));
    }
    if q.probs().iter().any(|&qi| qi <= 0.0) {
        return Err(CgpoError::InvalidDistribution(
            "reference distribution must be strictly positive".into(),
        ));
    }
    let mut ratios: Vec<(f64, f64, f64)> = p
        .probs()
        .iter()
        .zip(q.probs().iter())
        .map(|(&pi, &qi)| (pi / qi, pi, qi))
        .collect();
    ratios.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // Merge equal-ratio entries before accumulating.
    let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(ratios.len());
    for (r, pi, qi) in ratios {
        match merged.last_mut() {
            Some((r0, p0, q0)) if (r - *r0).abs() <= 1e-12 * r0.abs().max(1.0) => {
                *p0 += pi;
                *q0 += qi;
            }
            _ => merged.push((r, pi, qi)),
        }
    }

    let mut breakpoints = Vec::with_capacity(merged.len() + 1);
    breakpoints.push((0.0, 0.0));
    let (mut cx, mut cy) = (0.0, 0.0);
    for (_, pi, qi) in merged {
        cx += pi;
        cy += qi;
        breakpoints.push((cx.min(1.0), cy.min(1.0)));
    }
    // Pin the endpoint against roundoff.
    if let Some(last) = breakpoints.last_mut() {
        *last = (1.0, 1.0);
    }
    Ok(LorenzCurve { breakpoints })
}

/// Thermomajorization verdict: does curve(p, q) dominate curve(p′, q) at every
/// breakpoint of both curves (tolerance 1e-12)?
pub fn thermomajorizes(
    p: &ClassicalDistribution,
    p_prime: &ClassicalDistribution,
    q: &ClassicalDistribution,
) -> Result<bool> {
    Ok(thermomajorization_margin(p, p_prime, q)? >= -1e-12)
}

/// Minimum of curve(p,q) − curve(p′,q) over the union of breakpoints.
/// Nonnegative means p thermomajorizes p′.
pub fn thermomajorization_margin(
    p: &ClassicalDistribution,
    p_prime: &ClassicalDistribution,
    q: &ClassicalDistribution,
) -> Result<f64> {
    let ca = lorenz_curve(p, q)?;
    let cb = lorenz_curve(p_prime, q)?;
    let mut xs: Vec<f64> = ca
        .breakpoints()
        .iter()
        .chain(cb.breakpoints().iter())
        .map(|&(x, _)| x)
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let mut margin = f64::INFINITY;
    for x in xs {
        margin = margin.min(ca.eval(x) - cb.eval(x));
    }
    Ok(margin)
}

/// Free energy of a classical distribution against the Gibbs weights of (H, β)
/// in the dimensionless convention (α = 1 relative entropy).
pub fn classical_free_energy(
    p: &ClassicalDistribution,
    h: &HarmonicHamiltonian,
    beta: f64,
) -> Result<f64> {
    let q = gibbs_probs(h, beta);
    Ok(kl_divergence(p.probs(), &q))
}

/// Column-stochastic matrix preserving a fixed distribution; the classical
/// face of a Gibbs-preserving channel.
pub fn is_gibbs_stochastic(t: &CMat, q: &[f64], tol: f64) -> bool {
    let d = q.len();
    if t.nrows() != d || t.ncols() != d {
        return false;
    }
    for j in 0..d {
        let mut col = 0.0;
        for i in 0..d {
            let e = t[(i, j)];
            if e.im.abs() > tol || e.re < -tol {
                return false;
            }
            col += e.re;
        }
        if (col - 1.0).abs() > tol {
            return false;
        }
    }
    for i in 0..d {
        let mut fixed = 0.0;
        for j in 0..d {
            fixed += t[(i, j)].re * q[j];
        }
        if (fixed - q[i]).abs() > tol {
            return false;
        }
    }
    true
}

/// Apply a column-stochastic matrix to a distribution.
pub fn apply_stochastic(t: &CMat, p: &ClassicalDistribution) -> Result<ClassicalDistribution> {
    let d = p.len();
    if t.ncols() != d {
        return Err(CgpoError::DimensionMismatch(format!(
            "matrix {} vs distribution {}",
            t.ncols(),
            d
        )));
    }
    let mut out = vec![0.0; t.nrows()];
    for i in 0..t.nrows() {
        for j in 0..d {
            out[i] += t[(i, j)].re * p.probs()[j];
        }
    }
    let total: f64 = out.iter().sum();
    ClassicalDistribution::new(out.iter().map(|x| x.max(0.0) / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paper_hamiltonian() -> HarmonicHamiltonian {
        HarmonicHamiltonian::new(3.0f64.ln(), vec![0, 1]).unwrap()
    }

    fn random_distribution(dim: usize, rng: &mut ChaCha8Rng) -> ClassicalDistribution {
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        ClassicalDistribution::new(raw.iter().map(|x| x / total).collect()).unwrap()
    }

    #[test]
    fn gibbs_state_of_reference_qubit() {
        let h = paper_hamiltonian();
        let g = gibbs_state(&h, 1.0).unwrap();
        assert_relative_eq!(g.entry(0, 0).re, 0.75, epsilon = 1e-14);
        assert_relative_eq!(g.entry(1, 1).re, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn gibbs_limits() {
        let h = HarmonicHamiltonian::qubit(1.0);
        let hot = gibbs_state(&h, 0.0).unwrap();
        assert_relative_eq!(hot.entry(0, 0).re, 0.5, epsilon = 1e-14);
        let cold = gibbs_state(&h, 1e6).unwrap();
        assert_relative_eq!(cold.entry(0, 0).re, 1.0, epsilon = 1e-12);
        assert!(cold.entry(1, 1).re.abs() < 1e-12);
        assert!(cold.entry(1, 1).re.is_finite());
    }

    #[test]
    fn relative_entropy_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = DensityMatrix::from_valid(linalg::random_density_matrix(3, &mut rng));
        assert!(relative_entropy(&rho, &rho).unwrap() < 1e-10);
        // Rank-deficient sigma, full-rank rho.
        let sigma = DensityMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(relative_entropy(&rho, &sigma).unwrap(), f64::INFINITY);
    }

    #[test]
    fn relative_entropy_additive_over_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let r1 = DensityMatrix::from_valid(linalg::random_density_matrix(2, &mut rng));
            let r2 = DensityMatrix::from_valid(linalg::random_density_matrix(2, &mut rng));
            let s1 = DensityMatrix::from_valid(linalg::random_density_matrix(2, &mut rng));
            let s2 = DensityMatrix::from_valid(linalg::random_density_matrix(2, &mut rng));
            let lhs = relative_entropy(
                &crate::state::tensor(&r1, &r2).unwrap(),
                &crate::state::tensor(&s1, &s2).unwrap(),
            )
            .unwrap();
            let rhs =
                relative_entropy(&r1, &s1).unwrap() + relative_entropy(&r2, &s2).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn free_energy_reference_values() {
        let h = paper_hamiltonian();
        let rho = DensityMatrix::diagonal(&[3.0 / 200.0, 197.0 / 200.0]).unwrap();
        let f_rho = free_energy(&rho, &h, 1.0).unwrap();
        assert!((f_rho - 1.291).abs() < 1e-3, "F(rho) = {f_rho}");
        let plus = DensityMatrix::plus_state();
        let f_plus = free_energy(&plus, &h, 1.0).unwrap();
        assert!((f_plus - 0.836).abs() < 1e-3, "F(plus) = {f_plus}");
        let gibbs = gibbs_state(&h, 1.0).unwrap();
        assert!(free_energy(&gibbs, &h, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn free_energy_additive_over_tensor_powers() {
        let h = paper_hamiltonian();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = DensityMatrix::from_valid(linalg::random_density_matrix(2, &mut rng));
        let f1 = free_energy(&rho, &h, 1.0).unwrap();
        for k in 2..=4usize {
            let hk = h.copies(k).unwrap();
            let rk = crate::state::tensor_power(&rho, k).unwrap();
            let fk = free_energy(&rk, &hk, 1.0).unwrap();
            assert!((fk - k as f64 * f1).abs() < 1e-8, "k={k}: {fk} vs {}", k as f64 * f1);
        }
    }

    #[test]
    fn renyi_matches_kl_at_one_and_handles_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = random_distribution(4, &mut rng);
            let q = random_distribution(4, &mut rng);
            let direct = kl_divergence(p.probs(), q.probs());
            let at_one = renyi_divergence(&p, &q, Alpha::finite(1.0)).unwrap();
            assert!((direct - at_one).abs() < 1e-9);
            // α → 1 continuity.
            let near_one = renyi_divergence(&p, &q, Alpha::finite(1.0 + 1e-7)).unwrap();
            assert!((near_one - at_one).abs() < 1e-5);
            assert!(renyi_divergence(&p, &p, Alpha::finite(2.0)).unwrap() < 1e-12);
            assert!(renyi_divergence(&p, &p, Alpha::PlusInfinity).unwrap() < 1e-12);
            assert!(renyi_divergence(&p, &p, Alpha::MinusInfinity).unwrap() < 1e-12);
        }
    }

    #[test]
    fn renyi_infinity_max_ratio() {
        let p = ClassicalDistribution::new(vec![0.9, 0.1]).unwrap();
        let q = ClassicalDistribution::new(vec![0.5, 0.5]).unwrap();
        let inf = renyi_divergence(&p, &q, Alpha::PlusInfinity).unwrap();
        assert_relative_eq!(inf, 1.8f64.ln(), epsilon = 1e-12);
        // Cross-check against a large finite order.
        let big = renyi_divergence(&p, &q, Alpha::finite(100.0)).unwrap();
        assert!((big - inf).abs() < 0.02, "{big} vs {inf}");
        assert!(big <= inf + 1e-12);
    }

    #[test]
    fn extended_free_energy_reference_arithmetic() {
        let h = paper_hamiltonian();
        let p = ClassicalDistribution::new(vec![3.0 / 200.0, 197.0 / 200.0]).unwrap();
        let rho = DensityMatrix::diagonal(&[3.0 / 200.0, 197.0 / 200.0]).unwrap();
        let lhs = extended_free_energy(&p, &h, 1.0, Alpha::finite(1.0)).unwrap();
        let rhs = free_energy(&rho, &h, 1.0).unwrap() - (4.0f64 / 3.0).ln();
        assert!((lhs - rhs).abs() < 1e-10);
        // Gibbs input gives −(1/β) ln Z for every α.
        let q = ClassicalDistribution::new(gibbs_probs(&h, 1.0)).unwrap();
        for alpha in [
            Alpha::finite(-2.0),
            Alpha::finite(0.5),
            Alpha::finite(2.0),
            Alpha::PlusInfinity,
        ] {
            let f = extended_free_energy(&q, &h, 1.0, alpha).unwrap();
            assert!((f + (4.0f64 / 3.0).ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn extended_free_energy_rejects_beta_zero() {
        let h = paper_hamiltonian();
        let p = ClassicalDistribution::new(vec![0.5, 0.5]).unwrap();
        assert!(extended_free_energy(&p, &h, 0.0, Alpha::finite(1.0)).is_err());
    }

    #[test]
    fn lorenz_curve_shapes() {
        // Identical pair: diagonal with merged breakpoints.
        let u = ClassicalDistribution::new(vec![0.5, 0.5]).unwrap();
        let straight = lorenz_curve(&u, &u).unwrap();
        assert_eq!(straight.breakpoints().len(), 2);
        assert_eq!(straight.breakpoints()[0], (0.0, 0.0));
        assert_eq!(straight.breakpoints()[1], (1.0, 1.0));

        // Hand-constructed two-point curve.
        let p = ClassicalDistribution::new(vec![1.0, 0.0]).unwrap();
        let c = lorenz_curve(&p, &u).unwrap();
        assert_eq!(c.breakpoints().len(), 3);
        let bp = c.breakpoints();
        assert!((bp[1].0 - 0.0).abs() < 1e-15 && (bp[1].1 - 0.5).abs() < 1e-15);
        assert_eq!(bp[2], (1.0, 1.0));
    }

    #[test]
    fn lorenz_concavity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let p = random_distribution(5, &mut rng);
            let q = random_distribution(5, &mut rng);
            assert!(lorenz_curve(&p, &q).unwrap().is_concave(1e-12));
        }
    }

    #[test]
    fn thermomajorization_verdicts() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = random_distribution(4, &mut rng);
        let p = random_distribution(4, &mut rng);
        // Reflexive.
        assert!(thermomajorizes(&p, &p, &q).unwrap());
        // Everything reaches the reference.
        assert!(thermomajorizes(&p, &q, &q).unwrap());
        // The reference reaches nothing else.
        assert!(!thermomajorizes(&q, &p, &q).unwrap());
    }

    #[test]
    fn classical_free_energy_matches_renyi_one_on_diagonals() {
        let h = paper_hamiltonian();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_distribution(2, &mut rng);
            let q = ClassicalDistribution::new(gibbs_probs(&h, 1.0)).unwrap();
            let a = classical_free_energy(&p, &h, 1.0).unwrap();
            let b = renyi_divergence(&p, &q, Alpha::finite(1.0)).unwrap();
            assert!((a - b).abs() < 1e-10);
            // And matches the quantum functional on the diagonal embedding.
            let rho = DensityMatrix::diagonal(p.probs()).unwrap();
            let c = free_energy(&rho, &h, 1.0).unwrap();
            assert!((a - c).abs() < 1e-10);
        }
    }
}
