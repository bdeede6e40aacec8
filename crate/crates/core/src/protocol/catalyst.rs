//! Compile a marginal many-copy conversion into a correlated-catalyst
//! conversion.
//!
//! Given a map Λ on n copies with output marginals close to the target, the
//! catalyst mixes staircase blocks ρ^⊗(k−1) ⊗ τ_{n−k} against an n-state
//! label register (trivial Hamiltonian), where τ_i is the marginal of
//! τ = Λ(ρ^⊗n) on its first i factors. Applying Λ only on label n and then
//! cycling the label restores the catalyst marginal exactly — an algebraic
//! identity, not an approximation — while the system marginal becomes the
//! uniform mixture of the single-copy marginals of τ.

use crate::channel::{apply, QuantumChannel};
use crate::error::{CgpoError, Result};
use crate::linalg::{max_abs, CMat};
use crate::state::{
    check_dim_budget, partial_trace_matrix, single_copy_marginal, tensor_power, DensityMatrix,
};

/// Dimension of the catalyst register: d^(n−1) system copies times an n-state
/// label.
pub fn catalyst_dimension(d: usize, n: usize) -> usize {
    d.pow((n - 1) as u32) * n
}

/// Correlated catalyst in label-block form: block k (1-based) is
/// ρ^⊗(k−1) ⊗ τ_{n−k} on S^⊗(n−1), carried with weight 1/n.
#[derive(Debug, Clone)]
pub struct CatalystState {
    n: usize,
    sys_dim: usize,
    blocks: Vec<CMat>,
}

impl CatalystState {
    pub fn copies(&self) -> usize {
        self.n
    }

    /// Total Hilbert-space dimension d^(n−1)·n.
    pub fn dim(&self) -> usize {
        catalyst_dimension(self.sys_dim, self.n)
    }

    pub fn block(&self, k: usize) -> &CMat {
        &self.blocks[k - 1]
    }

    /// Materialize the catalyst as a density matrix on S^⊗(n−1) ⊗ R with the
    /// label register last.
    pub fn to_density_matrix(&self) -> DensityMatrix {
        let ds = self.sys_dim.pow((self.n - 1) as u32);
        let n = self.n;
        let mut mat = CMat::zeros(ds * n, ds * n);
        for (kb, block) in self.blocks.iter().enumerate() {
            for r in 0..ds {
                for c in 0..ds {
                    mat[(r * n + kb, c * n + kb)] = block[(r, c)] / n as f64;
                }
            }
        }
        DensityMatrix::from_valid(mat)
    }
}

/// Outcome of one compile-and-run: the catalyst, the joint output state in
/// block form, and the verification numbers.
#[derive(Debug, Clone)]
pub struct CatalystRun {
    pub catalyst: CatalystState,
    /// Max-entry deviation of the post-conversion catalyst marginal from the
    /// original catalyst. Zero up to roundoff by construction.
    pub restoration_error: f64,
    /// System output Tr_C[τ_joint] = (1/n) Σ_k Tr_{\k}[Λ(ρ^⊗n)].
    pub system_output: DensityMatrix,
    /// Single-copy marginals of τ = Λ(ρ^⊗n), for per-copy error reports.
    pub tau_marginals: Vec<DensityMatrix>,
    /// Joint output on S^⊗n ⊗ R in label-block form (block k, weight 1/n).
    pub joint_blocks: Vec<CMat>,
}

impl CatalystRun {
    /// |Tr_C[τ_joint] − target|₁.
    pub fn conversion_error(&self, target: &DensityMatrix) -> Result<f64> {
        crate::state::trace_distance(&self.system_output, target)
    }

    /// max_i |Tr_{\i}[Λ(ρ^⊗n)] − target|₁.
    pub fn max_marginal_error(&self, target: &DensityMatrix) -> Result<f64> {
        let mut worst = 0.0f64;
        for m in &self.tau_marginals {
            worst = worst.max(crate::state::trace_distance(m, target)?);
        }
        Ok(worst)
    }

    /// Joint state materialized on S^⊗n ⊗ R (label last).
    pub fn joint_density_matrix(&self) -> DensityMatrix {
        let n = self.joint_blocks.len();
        let ds = self.joint_blocks[0].nrows();
        let mut mat = CMat::zeros(ds * n, ds * n);
        for (kb, block) in self.joint_blocks.iter().enumerate() {
            for r in 0..ds {
                for c in 0..ds {
                    mat[(r * n + kb, c * n + kb)] = block[(r, c)] / n as f64;
                }
            }
        }
        DensityMatrix::from_valid(mat)
    }
}

/// Build the catalyst for `lambda` (a map on n copies) and run the
/// conversion once, verifying exact catalyst restoration.
///
/// The returned run reinterprets the joint output so that the *last* system
/// factor is the converted system and everything else is the catalyst.
pub fn build_catalyst(lambda: &QuantumChannel, rho: &DensityMatrix) -> Result<CatalystRun> {
    let d = rho.dim();
    let dn = lambda.dim_in();
    if lambda.dim_out() != dn {
        return Err(CgpoError::DimensionMismatch(
            "catalyst compilation needs a square many-copy map".into(),
        ));
    }
    // Infer n from d^n = dim_in.
    let mut n = 0usize;
    let mut acc = 1usize;
    while acc < dn {
        acc *= d;
        n += 1;
    }
    if acc != dn || n == 0 {
        return Err(CgpoError::DimensionMismatch(format!(
            "map dimension {dn} is not a power of the system dimension {d}"
        )));
    }
    check_dim_budget(d.pow(n as u32) * n)?;

    let rho_n = tensor_power(rho, n)?;
    let tau = apply(lambda, &rho_n)?;

    // Marginals of τ on its first i factors; index 0 is the empty factor.
    let dims = vec![d; n];
    let mut tau_first: Vec<Option<CMat>> = vec![None; n + 1];
    for i in 1..=n {
        let keep: Vec<usize> = (0..i).collect();
        tau_first[i] = Some(partial_trace_matrix(tau.matrix(), &dims, &keep));
    }
    let tau_marginals: Vec<DensityMatrix> = (0..n)
        .map(|i| DensityMatrix::from_valid(single_copy_marginal(tau.matrix(), d, n, i)))
        .collect();

    let kron_pow_or_scalar = |m: &CMat, k: usize| -> CMat {
        if k == 0 {
            CMat::identity(1, 1)
        } else {
            crate::linalg::kron_pow(m, k)
        }
    };
    let kron_scalar_aware = |a: &CMat, b: &CMat| -> CMat {
        if a.nrows() == 1 && a[(0, 0)].re == 1.0 && a[(0, 0)].im == 0.0 {
            b.clone()
        } else if b.nrows() == 1 && b[(0, 0)].re == 1.0 && b[(0, 0)].im == 0.0 {
            a.clone()
        } else {
            crate::linalg::kron(a, b)
        }
    };

    // Catalyst blocks on S^⊗(n−1): ρ^⊗(k−1) ⊗ τ_{n−k}, k = 1..n.
    let mut c_blocks = Vec::with_capacity(n);
    for k in 1..=n {
        let left = kron_pow_or_scalar(rho.matrix(), k - 1);
        let right = match n - k {
            0 => CMat::identity(1, 1),
            i => tau_first[i].clone().unwrap(),
        };
        c_blocks.push(kron_scalar_aware(&left, &right));
    }
    let catalyst = CatalystState {
        n,
        sys_dim: d,
        blocks: c_blocks.clone(),
    };

    // Joint input ρ ⊗ c: block k is ρ^⊗k ⊗ τ_{n−k} on S^⊗n. Apply Λ on the
    // label-n block, then cycle labels k → k+1 (n → 1).
    let mut post: Vec<CMat> = Vec::with_capacity(n);
    for k in 1..=n {
        if k == n {
            post.push(tau.matrix().clone());
        } else {
            let left = kron_pow_or_scalar(rho.matrix(), k);
            let right = tau_first[n - k].clone().unwrap();
            post.push(kron_scalar_aware(&left, &right));
        }
    }
    let mut joint_blocks: Vec<CMat> = vec![CMat::zeros(dn, dn); n];
    for k in 1..=n {
        let new_label = if k == n { 1 } else { k + 1 };
        joint_blocks[new_label - 1] = post[k - 1].clone();
    }

    // Verification: tracing out the last system factor from each block must
    // reproduce the catalyst block with the same label.
    let mut restoration_error = 0.0f64;
    for k in 1..=n {
        let keep: Vec<usize> = (0..n - 1).collect();
        let reduced = if n == 1 {
            CMat::identity(1, 1).scale(joint_blocks[k - 1].trace().re)
        } else {
            partial_trace_matrix(&joint_blocks[k - 1], &dims, &keep)
        };
        restoration_error = restoration_error.max(max_abs(&(reduced - &catalyst.blocks[k - 1])));
    }

    // System output: keep only the last system factor, average over labels.
    let mut sys = CMat::zeros(d, d);
    for block in &joint_blocks {
        sys += single_copy_marginal(block, d, n, n - 1);
    }
    let system_output = DensityMatrix::from_valid(sys.scale(1.0 / n as f64));

    Ok(CatalystRun {
        catalyst,
        restoration_error,
        system_output,
        tau_marginals,
        joint_blocks,
    })
}
