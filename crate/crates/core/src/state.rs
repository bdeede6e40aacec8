//! Density matrices and the operations the error calculus is built on:
//! composition, reduction, time evolution and three distance measures.

use num_complex::Complex64;

use crate::error::{CgpoError, Result};
use crate::hamiltonian::{CompositeLabel, HarmonicHamiltonian};
use crate::linalg::{
    self, eigvalsh, hermitize, kron, max_abs, sqrtm_psd, trace_norm_hermitian, CMat,
};

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const EIGENVALUE_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;

/// Default cap on the total Hilbert-space dimension of composed states.
pub const DEFAULT_DIM_BUDGET: usize = 4096;

/// Dimension budget, overridable through `CGPO_KIT_MAX_DIM`.
pub fn dim_budget() -> usize {
    std::env::var("CGPO_KIT_MAX_DIM")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_DIM_BUDGET)
}

pub(crate) fn check_dim_budget(dim: usize) -> Result<()> {
    let budget = dim_budget();
    if dim > budget {
        return Err(CgpoError::DimensionBudget {
            requested: dim,
            budget,
        });
    }
    Ok(())
}

/// Hermitian, positive-semidefinite, unit-trace complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Validates all three invariants (Hermiticity 1e-12, eigenvalues ≥ −1e-10,
    /// trace within 1e-10 of one).
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(CgpoError::InvalidState(format!(
                "expected a nonempty square matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm = linalg::hermiticity_defect(&mat);
        if herm > HERMITICITY_TOL {
            return Err(CgpoError::InvalidState(format!(
                "Hermiticity defect {herm:.3e} exceeds {HERMITICITY_TOL:.0e}"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(CgpoError::InvalidState(format!(
                "trace {tr} is not 1 within {TRACE_TOL:.0e}"
            )));
        }
        let min_eig = linalg::min_eigenvalue(&mat);
        if min_eig < -EIGENVALUE_TOL {
            return Err(CgpoError::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e} below -{EIGENVALUE_TOL:.0e}"
            )));
        }
        Ok(Self {
            mat: hermitize(&mat),
        })
    }

    /// Construction path for internal operations that preserve the invariants
    /// algebraically (unitary conjugation, Kronecker products, partial traces).
    pub(crate) fn from_valid(mat: CMat) -> Self {
        Self {
            mat: hermitize(&mat),
        }
    }

    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(CgpoError::InvalidState("zero vector".into()));
        }
        let d = amplitudes.len();
        let mat = CMat::from_fn(d, d, |i, j| {
            amplitudes[i] * amplitudes[j].conj() / (norm * norm)
        });
        Ok(Self { mat })
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let mat = CMat::from_fn(probs.len(), probs.len(), |i, j| {
            if i == j {
                Complex64::new(probs[i], 0.0)
            } else {
                linalg::C_ZERO
            }
        });
        Self::new(mat)
    }

    /// |+⟩⟨+| on a qubit.
    pub fn plus_state() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::pure(&[h, h]).expect("|+> is a valid state")
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_valid(linalg::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    pub fn diagonal_probs(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.mat)
    }
}

/// Kronecker composition of two states.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let dim = a.dim() * b.dim();
    check_dim_budget(dim)?;
    Ok(DensityMatrix::from_valid(kron(a.matrix(), b.matrix())))
}

/// n-fold tensor power ρ^⊗n.
pub fn tensor_power(a: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(CgpoError::InvalidArgument(
            "tensor power needs n >= 1".into(),
        ));
    }
    let dim = a.dim().checked_pow(n as u32).ok_or(CgpoError::DimensionBudget {
        requested: usize::MAX,
        budget: dim_budget(),
    })?;
    check_dim_budget(dim)?;
    let mut out = a.clone();
    for _ in 1..n {
        out = tensor(&out, a)?;
    }
    Ok(out)
}

/// Reduced state on the named subsystems, tracing out the rest.
pub fn partial_trace(
    state: &DensityMatrix,
    label: &CompositeLabel,
    keep: &[&str],
) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(CgpoError::InvalidArgument(
            "keep set must be nonempty".into(),
        ));
    }
    let dims = label.factor_dims();
    if label.total_dim() != state.dim() {
        return Err(CgpoError::DimensionMismatch(format!(
            "label dim {} vs state dim {}",
            label.total_dim(),
            state.dim()
        )));
    }
    let mut keep_idx: Vec<usize> = Vec::with_capacity(keep.len());
    for name in keep {
        keep_idx.push(label.index_of(name)?);
    }
    keep_idx.sort_unstable();
    keep_idx.dedup();
    Ok(DensityMatrix::from_valid(partial_trace_matrix(
        state.matrix(),
        &dims,
        &keep_idx,
    )))
}

/// Partial trace on a raw (not necessarily unit-trace) operator.
///
/// `keep` holds factor positions into `dims`, sorted ascending. The kept
/// factors stay in their original relative order.
pub fn partial_trace_matrix(mat: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let d_keep: usize = keep_dims.iter().product();
    let d_traced: usize = traced_dims.iter().product();

    // Strides of each factor in the full composite index (row-major).
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }

    // Expand a flat index over a factor subset into the full composite index.
    let expand = |flat: usize, positions: &[usize], pdims: &[usize]| -> usize {
        let mut rem = flat;
        let mut idx = 0usize;
        for k in (0..positions.len()).rev() {
            let d = pdims[k];
            idx += (rem % d) * strides[positions[k]];
            rem /= d;
        }
        idx
    };

    let mut out = CMat::zeros(d_keep, d_keep);
    for kr in 0..d_keep {
        let base_r = expand(kr, keep, &keep_dims);
        for kc in 0..d_keep {
            let base_c = expand(kc, keep, &keep_dims);
            let mut acc = linalg::C_ZERO;
            for t in 0..d_traced {
                let off = expand(t, &traced, &traced_dims);
                acc += mat[(base_r + off, base_c + off)];
            }
            out[(kr, kc)] = acc;
        }
    }
    out
}

/// Marginal onto copy `i` (0-based) of an n-fold product space, all factors
/// sharing dimension `d`.
pub fn single_copy_marginal(mat: &CMat, d: usize, n: usize, i: usize) -> CMat {
    let dims = vec![d; n];
    partial_trace_matrix(mat, &dims, &[i])
}

/// Heisenberg conjugation e^{−iHt} ρ e^{iHt} for a diagonal Hamiltonian.
pub fn time_evolve(state: &DensityMatrix, h: &HarmonicHamiltonian, t: f64) -> Result<DensityMatrix> {
    if h.dim() != state.dim() {
        return Err(CgpoError::DimensionMismatch(format!(
            "Hamiltonian dim {} vs state dim {}",
            h.dim(),
            state.dim()
        )));
    }
    Ok(DensityMatrix::from_valid(evolve_matrix(
        state.matrix(),
        h,
        t,
    )))
}

/// Same conjugation on a raw operator.
pub fn evolve_matrix(mat: &CMat, h: &HarmonicHamiltonian, t: f64) -> CMat {
    let d = mat.nrows();
    let mut out = mat.clone();
    for r in 0..d {
        for c in 0..d {
            let omega = h.mode_of(r, c);
            if omega != 0 {
                let phase = Complex64::from_polar(1.0, -(omega as f64) * h.delta() * t);
                out[(r, c)] *= phase;
            }
        }
    }
    out
}

/// Trace distance |a − b|₁ (no 1/2 factor: orthogonal pure states are at 2).
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(CgpoError::DimensionMismatch(format!(
            "{} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(trace_norm_hermitian(&(a.matrix() - b.matrix())))
}

/// Square-root fidelity F(a,b) = Tr√(√a b √a), clamped to [0,1].
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(CgpoError::DimensionMismatch(format!(
            "{} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let sa = sqrtm_psd(a.matrix());
    let inner = &sa * b.matrix() * &sa;
    let vals = eigvalsh(&inner);
    // Clip eigenvalues at the relative noise floor: sqrt amplifies junk of
    // size 1e-16 into 1e-8 contributions, which ruins near-unit fidelities
    // of rank-deficient states.
    let floor = vals.iter().copied().fold(0.0, f64::max) * 1e-14;
    let f: f64 = vals
        .iter()
        .map(|&x| if x > floor { x.sqrt() } else { 0.0 })
        .sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Bures distance b(a,b) = √(1 − F(a,b)).
pub fn bures_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    Ok((1.0 - fidelity(a, b)?).max(0.0).sqrt())
}

/// Largest ratio b²(ρ, 𝒯_t ρ)/t² over a small-time grid; the constant C in
/// the shift-error bound b²(ρ, 𝒯_t ρ) ≤ C t².
pub fn fit_shift_constant(rho: &DensityMatrix, h: &HarmonicHamiltonian) -> Result<f64> {
    let mut c: f64 = 0.0;
    for k in 1..=20 {
        let t = 1e-3 * k as f64 * h.period() / 20.0;
        let shifted = time_evolve(rho, h, t)?;
        let b = bures_distance(rho, &shifted)?;
        c = c.max(b * b / (t * t));
    }
    Ok(c)
}

/// Max-magnitude difference, for exactness checks.
pub fn max_entry_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    max_abs(&(a.matrix() - b.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paper_qubit() -> DensityMatrix {
        DensityMatrix::diagonal(&[3.0 / 200.0, 197.0 / 200.0]).unwrap()
    }

    fn gibbs_diag() -> DensityMatrix {
        DensityMatrix::diagonal(&[0.75, 0.25]).unwrap()
    }

    fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
        DensityMatrix::from_valid(linalg::random_density_matrix(dim, rng))
    }

    #[test]
    fn constructor_rejects_bad_inputs() {
        // Non-Hermitian.
        let mut m = linalg::identity(2);
        m[(0, 1)] = Complex64::new(0.5, 0.0);
        m[(0, 0)] = Complex64::new(0.5, 0.0);
        m[(1, 1)] = Complex64::new(0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        // Wrong trace.
        assert!(DensityMatrix::new(linalg::identity(2)).is_err());
        // Negative eigenvalue.
        let neg = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => Complex64::new(1.5, 0.0),
            (1, 1) => Complex64::new(-0.5, 0.0),
            _ => linalg::C_ZERO,
        });
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn tensor_of_gibbs_pair_is_product_of_weights() {
        let g = gibbs_diag();
        let gg = tensor(&g, &g).unwrap();
        let expect = [9.0 / 16.0, 3.0 / 16.0, 3.0 / 16.0, 1.0 / 16.0];
        for (i, &p) in expect.iter().enumerate() {
            assert_relative_eq!(gg.entry(i, i).re, p, max_relative = 1e-14);
        }
        assert_relative_eq!(gg.matrix().trace().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn tensor_then_partial_trace_recovers_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = random_state(3, &mut rng);
        let b = random_state(2, &mut rng);
        let ab = tensor(&a, &b).unwrap();
        let q3 = HarmonicHamiltonian::new(1.0, vec![0, 1, 2]).unwrap();
        let q2 = HarmonicHamiltonian::qubit(1.0);
        let label =
            CompositeLabel::new(vec![("A".into(), q3), ("B".into(), q2)]).unwrap();
        let back = partial_trace(&ab, &label, &["A"]).unwrap();
        assert!(max_entry_distance(&a, &back) < 1e-13);
        let back_b = partial_trace(&ab, &label, &["B"]).unwrap();
        assert!(max_entry_distance(&b, &back_b) < 1e-13);
    }

    #[test]
    fn bell_state_marginal_is_maximally_mixed() {
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[
            Complex64::new(half, 0.0),
            linalg::C_ZERO,
            linalg::C_ZERO,
            Complex64::new(half, 0.0),
        ])
        .unwrap();
        let q = HarmonicHamiltonian::qubit(1.0);
        let label = CompositeLabel::copies("Q", &q, 2).unwrap();
        for keep in [["Q1"], ["Q2"]] {
            let m = partial_trace(&bell, &label, &keep).unwrap();
            assert!(max_entry_distance(&m, &DensityMatrix::maximally_mixed(2)) < 1e-14);
        }
    }

    #[test]
    fn partial_trace_matches_bruteforce_contraction_on_three_copies() {
        // Independent oracle: contract indices directly from the definition.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_state(8, &mut rng); // 3 qubits entangled
        let d = 2usize;
        let keep = 1usize; // middle copy
        let oracle = {
            let mut out = CMat::zeros(d, d);
            for r in 0..d {
                for c in 0..d {
                    let mut acc = linalg::C_ZERO;
                    for a in 0..d {
                        for b in 0..d {
                            let row = a * 4 + r * 2 + b;
                            let col = a * 4 + c * 2 + b;
                            acc += rho.matrix()[(row, col)];
                        }
                    }
                    out[(r, c)] = acc;
                }
            }
            out
        };
        let got = single_copy_marginal(rho.matrix(), 2, 3, keep);
        assert!(max_abs(&(got - oracle)) < 1e-14);
    }

    #[test]
    fn time_evolution_identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = HarmonicHamiltonian::new(0.7, vec![0, 1, 3]).unwrap();
        let rho = random_state(3, &mut rng);
        // t = 0.
        assert!(max_entry_distance(&rho, &time_evolve(&rho, &h, 0.0).unwrap()) < 1e-15);
        // Full period.
        let per = time_evolve(&rho, &h, h.period()).unwrap();
        assert!(max_entry_distance(&rho, &per) < 1e-12);
        // Diagonal states are stationary.
        let diag = DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let moved = time_evolve(&diag, &h, 0.37).unwrap();
        assert!(max_entry_distance(&diag, &moved) < 1e-15);
    }

    #[test]
    fn unitarity_preserves_spectrum_and_purity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = HarmonicHamiltonian::new(1.3, vec![0, 2, 3]).unwrap();
        let rho = random_state(3, &mut rng);
        for k in 0..8 {
            let t = 0.31 * k as f64;
            let evolved = time_evolve(&rho, &h, t).unwrap();
            assert!((evolved.matrix().trace().re - 1.0).abs() < 1e-12);
            assert!((evolved.purity() - rho.purity()).abs() < 1e-12);
            let mut ev0 = rho.eigenvalues();
            let mut ev1 = evolved.eigenvalues();
            ev0.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ev1.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (x, y) in ev0.iter().zip(ev1.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_distance_basics() {
        let rho = paper_qubit();
        assert_eq!(trace_distance(&rho, &rho).unwrap(), 0.0);
        let e0 = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let e1 = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        assert_relative_eq!(trace_distance(&e0, &e1).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn fidelity_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let rho = random_state(3, &mut rng);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
        let e0 = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let e1 = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        assert!(fidelity(&e0, &e1).unwrap() < 1e-12);
        assert!(bures_distance(&rho, &rho).unwrap() < 1e-7);
    }

    #[test]
    fn fidelity_multiplicative_under_tensor_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let a = random_state(2, &mut rng);
            let b = random_state(2, &mut rng);
            let f = fidelity(&a, &b).unwrap();
            for m in 2..=5 {
                let am = tensor_power(&a, m).unwrap();
                let bm = tensor_power(&b, m).unwrap();
                let fm = fidelity(&am, &bm).unwrap();
                assert!(
                    (fm - f.powi(m as i32)).abs() < 1e-10,
                    "m={m}: {fm} vs {}",
                    f.powi(m as i32)
                );
            }
        }
    }

    #[test]
    fn trace_norm_bures_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..200 {
            let a = random_state(3, &mut rng);
            let b = random_state(3, &mut rng);
            let t = trace_distance(&a, &b).unwrap();
            let bu = bures_distance(&a, &b).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&bu));
            assert!(t <= 2.0 * std::f64::consts::SQRT_2 * bu + 1e-9);
        }
    }

    #[test]
    fn shift_error_bound_with_fitted_constant() {
        let h1 = HarmonicHamiltonian::new(1.0986122886681098, vec![0, 1]).unwrap();
        let rho = DensityMatrix::plus_state();
        let c = fit_shift_constant(&rho, &h1).unwrap();
        assert!(c > 0.0);
        for m in 1..=4usize {
            let hm = h1.copies(m).unwrap();
            let rm = tensor_power(&rho, m).unwrap();
            for k in 1..=6 {
                let t = 0.05 * k as f64;
                let lhs = bures_distance(&rm, &time_evolve(&rm, &hm, t).unwrap()).unwrap();
                // Exactness of the multiplicativity route:
                let b1 = bures_distance(&rho, &time_evolve(&rho, &h1, t).unwrap()).unwrap();
                let via_single = (1.0 - (1.0 - b1 * b1).powi(m as i32)).max(0.0).sqrt();
                assert!((lhs - via_single).abs() < 1e-9);
                // Bound with the fitted constant (small-t regime).
                let bound = (1.0 - (1.0 - c * t * t).max(0.0).powi(m as i32)).max(0.0).sqrt();
                assert!(lhs <= bound + 1e-9, "m={m} t={t}: {lhs} > {bound}");
            }
        }
    }

    #[test]
    fn dimension_budget_enforced() {
        let big = DensityMatrix::maximally_mixed(80);
        let err = tensor(&big, &big).unwrap_err();
        assert!(matches!(err, CgpoError::DimensionBudget { .. }));
    }
}
