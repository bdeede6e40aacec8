//! Dense complex linear algebra helpers shared by every module.
//!
//! Everything here is built on a single primitive: the Hermitian
//! eigendecomposition of `nalgebra`'s `SymmetricEigen`. Matrix functions
//! (square root, absolute value, positive part) all go through it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Eigenvalue threshold below which a direction counts as outside the support.
pub const SUPPORT_EPS: f64 = 1e-10;

pub fn cmat_zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// (A + A†)/2, forcing exact Hermiticity.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace_re(a: &CMat) -> f64 {
    a.trace().re
}

/// Hilbert-Schmidt inner product ⟨A,B⟩ = Tr[A†B].
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with real eigenvalues in the order
/// produced by the QR iteration and eigenvectors as matrix columns. The input
/// is symmetrized first so roundoff in the anti-Hermitian part cannot leak in.
pub fn eigh(a: &CMat) -> (DVector<f64>, CMat) {
    let h = hermitize(a);
    let se = h.symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

/// Eigenvalues only (ascending).
pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    let (vals, _) = eigh(a);
    let mut v: Vec<f64> = vals.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

/// Apply a real function to the eigenvalues of a Hermitian matrix.
pub fn hermitian_fn(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(a);
    let dim = a.nrows();
    let mut out = cmat_zeros(dim, dim);
    for (k, &lam) in vals.iter().enumerate() {
        let flam = f(lam);
        if flam == 0.0 {
            continue;
        }
        let v = vecs.column(k);
        for r in 0..dim {
            let vr = v[r] * Complex64::new(flam, 0.0);
            for c in 0..dim {
                out[(r, c)] += vr * v[c].conj();
            }
        }
    }
    out
}

/// Principal square root of a PSD matrix; tiny negative eigenvalues are clipped.
pub fn sqrtm_psd(a: &CMat) -> CMat {
    hermitian_fn(a, |x| if x > 0.0 { x.sqrt() } else { 0.0 })
}

/// Projection onto the PSD cone (negative eigenvalues clipped to zero).
pub fn psd_projection(a: &CMat) -> CMat {
    hermitian_fn(a, |x| x.max(0.0))
}

/// Trace norm |A|₁ = Σ|λᵢ| of a Hermitian matrix.
pub fn trace_norm_hermitian(a: &CMat) -> f64 {
    eigvalsh(a).iter().map(|x| x.abs()).sum()
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_all(mats: &[&CMat]) -> CMat {
    assert!(!mats.is_empty());
    let mut out = mats[0].clone();
    for m in &mats[1..] {
        out = out.kronecker(m);
    }
    out
}

/// n-fold Kronecker power.
pub fn kron_pow(a: &CMat, n: usize) -> CMat {
    assert!(n >= 1, "kron_pow needs n >= 1");
    let mut out = a.clone();
    for _ in 1..n {
        out = out.kronecker(a);
    }
    out
}

// ---------------------------------------------------------------------------
// Random matrix generators (Ginibre-based)
// ---------------------------------------------------------------------------

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; avoids pulling in rand_distr for one distribution.
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn random_ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(standard_normal(rng), standard_normal(rng))
    })
}

/// Haar-distributed unitary via QR of a Ginibre matrix.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let g = random_ginibre(dim, dim, rng);
    let qr = g.qr();
    let r_diag: Vec<Complex64> = (0..dim).map(|i| qr.r()[(i, i)]).collect();
    let mut q = qr.q();
    for (j, d) in r_diag.iter().enumerate() {
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C_ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random density matrix from the Hilbert-Schmidt ensemble (G G† normalized).
pub fn random_density_matrix<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let g = random_ginibre(dim, dim, rng);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m.scale(1.0 / t)
}

/// Random pure state projector.
pub fn random_pure_state<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let v = random_ginibre(dim, 1, rng);
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let v = v.scale(1.0 / n);
    &v * v.adjoint()
}
