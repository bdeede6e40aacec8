//! Quantum channels in Choi form and the two defining property checks:
//! Gibbs preservation and covariance.
//!
//! Choi convention, used everywhere: J = Σ_{ij} E(|i⟩⟨j|) ⊗ |i⟩⟨j| with the
//! output factor first, so the composite row index is a·d_in + i.
//!
//! Covariance is checked structurally through coherence modes. For harmonic
//! spectra, E commutes with e^{−iHt}·e^{iHt} for every real t exactly when
//! each input mode-ω basis element maps into output mode ω, i.e. when the
//! Choi matrix vanishes off the grading ω(a,i) = n_out(a) − n_in(i). The
//! sampled-t check is kept as an independent cross-validation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{CgpoError, Result};
use crate::hamiltonian::HarmonicHamiltonian;
use crate::linalg::{self, identity, kron, max_abs, min_eigenvalue, trace_norm_hermitian, CMat};
use crate::state::{check_dim_budget, evolve_matrix, DensityMatrix};
use crate::thermo::gibbs_state;

/// Completely positive trace-preserving map between harmonic systems.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    dim_in: usize,
    dim_out: usize,
    choi: CMat,
    h_in: HarmonicHamiltonian,
    h_out: HarmonicHamiltonian,
}

pub const CP_TOL: f64 = 1e-9;
pub const TP_TOL: f64 = 1e-9;

/// Boolean verdict plus the violating norm and a short witness description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub pass: bool,
    pub violation: f64,
    pub witness: Option<String>,
}

impl CheckReport {
    fn new(pass: bool, violation: f64, witness: Option<String>) -> Self {
        Self {
            pass,
            violation,
            witness,
        }
    }
}

impl QuantumChannel {
    /// Wraps a Choi matrix, validating complete positivity (PSD to 1e-9) and
    /// trace preservation (partial trace over the output equals the identity).
    pub fn from_choi(
        choi: CMat,
        h_in: HarmonicHamiltonian,
        h_out: HarmonicHamiltonian,
    ) -> Result<Self> {
        let ch = Self::from_choi_unchecked(choi, h_in, h_out)?;
        let cp = ch.cp_defect();
        if cp > CP_TOL {
            return Err(CgpoError::InvalidChannel(format!(
                "Choi matrix not PSD: defect {cp:.3e}"
            )));
        }
        let tp = ch.tp_defect();
        if tp > TP_TOL {
            return Err(CgpoError::InvalidChannel(format!(
                "not trace preserving: defect {tp:.3e}"
            )));
        }
        Ok(ch)
    }

    /// Shape checks only; used by the feasibility solver on its own iterates.
    pub fn from_choi_unchecked(
        choi: CMat,
        h_in: HarmonicHamiltonian,
        h_out: HarmonicHamiltonian,
    ) -> Result<Self> {
        let dim_in = h_in.dim();
        let dim_out = h_out.dim();
        let d = dim_in * dim_out;
        if choi.nrows() != d || choi.ncols() != d {
            return Err(CgpoError::DimensionMismatch(format!(
                "Choi is {}x{}, expected {d}x{d}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            choi,
            h_in,
            h_out,
        })
    }

    /// Channel from Kraus operators; requires completeness Σ K†K = I to 1e-9.
    pub fn from_kraus(
        operators: &[CMat],
        h_in: HarmonicHamiltonian,
        h_out: HarmonicHamiltonian,
    ) -> Result<Self> {
        let dim_in = h_in.dim();
        let dim_out = h_out.dim();
        if operators.is_empty() {
            return Err(CgpoError::InvalidChannel("no Kraus operators".into()));
        }
        for k in operators {
            if k.nrows() != dim_out || k.ncols() != dim_in {
                return Err(CgpoError::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {dim_out}x{dim_in}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let mut completeness = CMat::zeros(dim_in, dim_in);
        for k in operators {
            completeness += k.adjoint() * k;
        }
        let defect = max_abs(&(completeness - identity(dim_in)));
        if defect > 1e-9 {
            return Err(CgpoError::InvalidChannel(format!(
                "incomplete Kraus set: Σ K†K − I has defect {defect:.3e}"
            )));
        }
        let d = dim_in * dim_out;
        let mut choi = CMat::zeros(d, d);
        for k in operators {
            // vec(K) in the (out, in) composite ordering.
            let v = CMat::from_fn(d, 1, |ai, _| {
                let a = ai / dim_in;
                let i = ai % dim_in;
                k[(a, i)]
            });
            choi += &v * v.adjoint();
        }
        Self::from_choi(choi, h_in, h_out)
    }

    /// Identity channel on a system.
    pub fn identity_channel(h: &HarmonicHamiltonian) -> Self {
        let ops = vec![identity(h.dim())];
        Self::from_kraus(&ops, h.clone(), h.clone()).expect("identity is CPTP")
    }

    /// Unitary conjugation by e^{−iHt}.
    pub fn phase_shift_channel(h: &HarmonicHamiltonian, t: f64) -> Self {
        let d = h.dim();
        let u = CMat::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, -h.energy(i) * t)
            } else {
                linalg::C_ZERO
            }
        });
        Self::from_kraus(&[u], h.clone(), h.clone()).expect("phase shift is CPTP")
    }

    /// Discards the input and emits the Gibbs state of (H_out, β).
    pub fn replace_with_gibbs(
        h_in: &HarmonicHamiltonian,
        h_out: &HarmonicHamiltonian,
        beta: f64,
    ) -> Result<Self> {
        let gamma = gibbs_state(h_out, beta)?;
        let choi = kron(gamma.matrix(), &identity(h_in.dim()));
        Self::from_choi(choi, h_in.clone(), h_out.clone())
    }

    /// Pinching to the energy eigenbasis modes (full dephasing).
    pub fn dephasing_channel(h: &HarmonicHamiltonian) -> Self {
        let d = h.dim();
        // Kraus projectors onto groups of equal level.
        let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, &n) in h.levels().iter().enumerate() {
            groups.entry(n).or_default().push(i);
        }
        let ops: Vec<CMat> = groups
            .values()
            .map(|idx| {
                CMat::from_fn(d, d, |r, c| {
                    if r == c && idx.contains(&r) {
                        linalg::C_ONE
                    } else {
                        linalg::C_ZERO
                    }
                })
            })
            .collect();
        Self::from_kraus(&ops, h.clone(), h.clone()).expect("pinching is CPTP")
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn h_in(&self) -> &HarmonicHamiltonian {
        &self.h_in
    }

    pub fn h_out(&self) -> &HarmonicHamiltonian {
        &self.h_out
    }

    /// Apply to a raw operator (not necessarily a state): E(X)_{ab} = Σ X_ij J_{(a,i),(b,j)}.
    pub fn apply_to_operator(&self, x: &CMat) -> CMat {
        let din = self.dim_in;
        let dout = self.dim_out;
        let mut out = CMat::zeros(dout, dout);
        for a in 0..dout {
            for b in 0..dout {
                let mut acc = linalg::C_ZERO;
                for i in 0..din {
                    let row = a * din + i;
                    for j in 0..din {
                        acc += x[(i, j)] * self.choi[(row, b * din + j)];
                    }
                }
                out[(a, b)] = acc;
            }
        }
        out
    }

    /// Negative-eigenvalue defect of the Choi matrix (0 when PSD).
    pub fn cp_defect(&self) -> f64 {
        (-min_eigenvalue(&self.choi)).max(0.0)
    }

    /// Max-entry defect of Tr_out[J] − I.
    pub fn tp_defect(&self) -> f64 {
        let mut tr = CMat::zeros(self.dim_in, self.dim_in);
        for i in 0..self.dim_in {
            for j in 0..self.dim_in {
                let mut acc = linalg::C_ZERO;
                for a in 0..self.dim_out {
                    acc += self.choi[(a * self.dim_in + i, a * self.dim_in + j)];
                }
                tr[(i, j)] = acc;
            }
        }
        max_abs(&(tr - identity(self.dim_in)))
    }

    /// Worst Choi entry magnitude off the covariance grading
    /// ω(a,i) = n_out(a) − n_in(i).
    pub fn covariance_defect(&self) -> f64 {
        let din = self.dim_in;
        let lin = self.h_in.levels();
        let lout = self.h_out.levels();
        let mut worst = 0.0f64;
        for r in 0..self.choi.nrows() {
            let (a, i) = (r / din, r % din);
            let omega_r = lout[a] - lin[i];
            for c in 0..self.choi.ncols() {
                let (b, j) = (c / din, c % din);
                if lout[b] - lin[j] != omega_r {
                    worst = worst.max(self.choi[(r, c)].norm());
                }
            }
        }
        worst
    }

    /// Trace-norm defect |E(Gibbs_in) − Gibbs_out|₁ at inverse temperature β.
    pub fn gp_defect(&self, beta: f64) -> Result<f64> {
        let gin = gibbs_state(&self.h_in, beta)?;
        let gout = gibbs_state(&self.h_out, beta)?;
        let image = self.apply_to_operator(gin.matrix());
        Ok(trace_norm_hermitian(&(image - gout.matrix())))
    }
}

/// Apply a channel to a state.
pub fn apply(ch: &QuantumChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != ch.dim_in {
        return Err(CgpoError::DimensionMismatch(format!(
            "state dim {} vs channel input {}",
            rho.dim(),
            ch.dim_in
        )));
    }
    Ok(DensityMatrix::from_valid(
        ch.apply_to_operator(rho.matrix()),
    ))
}

/// Composition a ∘ b (apply b first).
pub fn compose(a: &QuantumChannel, b: &QuantumChannel) -> Result<QuantumChannel> {
    if b.dim_out != a.dim_in {
        return Err(CgpoError::DimensionMismatch(format!(
            "compose: inner dims {} vs {}",
            b.dim_out, a.dim_in
        )));
    }
    let din = b.dim_in;
    let dout = a.dim_out;
    let mut choi = CMat::zeros(dout * din, dout * din);
    for i in 0..din {
        for j in 0..din {
            let e_ij = CMat::from_fn(din, din, |r, c| {
                if r == i && c == j {
                    linalg::C_ONE
                } else {
                    linalg::C_ZERO
                }
            });
            let y = a.apply_to_operator(&b.apply_to_operator(&e_ij));
            for p in 0..dout {
                for q in 0..dout {
                    choi[(p * din + i, q * din + j)] = y[(p, q)];
                }
            }
        }
    }
    QuantumChannel::from_choi_unchecked(choi, b.h_in.clone(), a.h_out.clone())
}

/// Tensor product of two channels acting on side-by-side systems.
pub fn tensor_channels(a: &QuantumChannel, b: &QuantumChannel) -> Result<QuantumChannel> {
    let din = a.dim_in * b.dim_in;
    let dout = a.dim_out * b.dim_out;
    check_dim_budget(din.max(dout))?;
    let h_in = HarmonicHamiltonian::tensor_sum(&[&a.h_in, &b.h_in])?;
    let h_out = HarmonicHamiltonian::tensor_sum(&[&a.h_out, &b.h_out])?;
    let d = din * dout;
    let mut choi = CMat::zeros(d, d);
    for r1 in 0..a.choi.nrows() {
        let (a1, i1) = (r1 / a.dim_in, r1 % a.dim_in);
        for c1 in 0..a.choi.ncols() {
            let (b1, j1) = (c1 / a.dim_in, c1 % a.dim_in);
            let x = a.choi[(r1, c1)];
            if x.norm_sqr() == 0.0 {
                continue;
            }
            for r2 in 0..b.choi.nrows() {
                let (a2, i2) = (r2 / b.dim_in, r2 % b.dim_in);
                let row = (a1 * b.dim_out + a2) * din + (i1 * b.dim_in + i2);
                for c2 in 0..b.choi.ncols() {
                    let (b2, j2) = (c2 / b.dim_in, c2 % b.dim_in);
                    let col = (b1 * b.dim_out + b2) * din + (j1 * b.dim_in + j2);
                    choi[(row, col)] += x * b.choi[(r2, c2)];
                }
            }
        }
    }
    QuantumChannel::from_choi_unchecked(choi, h_in, h_out)
}

/// n-fold tensor power of a channel.
pub fn channel_power(ch: &QuantumChannel, n: usize) -> Result<QuantumChannel> {
    if n == 0 {
        return Err(CgpoError::InvalidArgument("channel power needs n >= 1".into()));
    }
    let mut out = ch.clone();
    for _ in 1..n {
        out = tensor_channels(&out, ch)?;
    }
    Ok(out)
}

/// Kraus operators recovered from the Choi eigendecomposition.
pub fn kraus_from_choi(ch: &QuantumChannel) -> Vec<CMat> {
    let (vals, vecs) = linalg::eigh(ch.choi());
    let din = ch.dim_in;
    let dout = ch.dim_out;
    let mut ops = Vec::new();
    for (k, &lam) in vals.iter().enumerate() {
        if lam <= 1e-12 {
            continue;
        }
        let s = lam.sqrt();
        let col = vecs.column(k);
        ops.push(CMat::from_fn(dout, din, |a, i| {
            col[a * din + i] * Complex64::new(s, 0.0)
        }));
    }
    ops
}

/// CPTP verdict with the worst of the CP and TP defects.
pub fn is_cptp(ch: &QuantumChannel, tol: f64) -> CheckReport {
    let cp = ch.cp_defect();
    let tp = ch.tp_defect();
    let violation = cp.max(tp);
    let witness = if cp >= tp {
        "smallest Choi eigenvalue"
    } else {
        "partial trace of Choi vs identity"
    };
    CheckReport::new(violation <= tol, violation, Some(witness.to_string()))
}

/// Gibbs-preservation verdict; the violation is |E(Gibbs) − Gibbs|₁.
pub fn is_gibbs_preserving(ch: &QuantumChannel, beta: f64, tol: f64) -> Result<CheckReport> {
    let v = ch.gp_defect(beta)?;
    Ok(CheckReport::new(
        v <= tol,
        v,
        Some("trace distance of the Gibbs image".to_string()),
    ))
}

/// Structural covariance verdict; the violation is the worst off-mode Choi entry.
pub fn is_covariant(ch: &QuantumChannel, tol: f64) -> CheckReport {
    let v = ch.covariance_defect();
    CheckReport::new(v <= tol, v, Some("worst off-mode Choi entry".to_string()))
}

/// Definitional covariance check sampled over t ∈ {k·τ_per/grid}: compares
/// E(𝒯_t ρ) with 𝒯_t E(ρ) on basis states plus a deterministic pseudo-random
/// batch. Cross-validation for `is_covariant`, not a replacement.
pub fn is_covariant_sampled(ch: &QuantumChannel, grid: usize, tol: f64) -> Result<CheckReport> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0c0ffee);
    let mut worst = 0.0f64;
    let period = ch.h_in.period();
    let mut probes: Vec<CMat> = Vec::new();
    for i in 0..ch.dim_in.min(4) {
        let mut e = CMat::zeros(ch.dim_in, ch.dim_in);
        e[(i, i)] = linalg::C_ONE;
        probes.push(e);
    }
    for _ in 0..4 {
        probes.push(linalg::random_density_matrix(ch.dim_in, &mut rng));
    }
    for k in 0..grid {
        let t = period * k as f64 / grid as f64;
        for rho in &probes {
            let lhs = ch.apply_to_operator(&evolve_matrix(rho, &ch.h_in, t));
            let rhs = evolve_matrix(&ch.apply_to_operator(rho), &ch.h_out, t);
            worst = worst.max(trace_norm_hermitian(&(lhs - rhs)));
        }
    }
    Ok(CheckReport::new(
        worst <= tol,
        worst,
        Some(format!("sampled over {grid} times")),
    ))
}

/// Coherence-mode decomposition of an operator: block ω collects the entries
/// (i,j) with n_i − n_j = ω.
#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    modes: BTreeMap<i64, CMat>,
    dim: usize,
}

impl ModeDecomposition {
    pub fn modes(&self) -> &BTreeMap<i64, CMat> {
        &self.modes
    }

    pub fn block(&self, omega: i64) -> Option<&CMat> {
        self.modes.get(&omega)
    }

    /// Σ_ω block(ω); exact partition of the entries.
    pub fn reconstruct(&self) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for m in self.modes.values() {
            out += m;
        }
        out
    }

    /// Largest entry magnitude over all ω ≠ 0 blocks.
    pub fn off_mode_leakage(&self) -> f64 {
        self.modes
            .iter()
            .filter(|(&omega, _)| omega != 0)
            .map(|(_, m)| max_abs(m))
            .fold(0.0, f64::max)
    }
}

pub fn mode_decompose(op: &CMat, h: &HarmonicHamiltonian) -> Result<ModeDecomposition> {
    let d = h.dim();
    if op.nrows() != d || op.ncols() != d {
        return Err(CgpoError::DimensionMismatch(format!(
            "operator {}x{} vs Hamiltonian dim {d}",
            op.nrows(),
            op.ncols()
        )));
    }
    let mut modes: BTreeMap<i64, CMat> = BTreeMap::new();
    for i in 0..d {
        for j in 0..d {
            let omega = h.mode_of(i, j);
            let entry = op[(i, j)];
            if entry.norm_sqr() == 0.0 {
                continue;
            }
            modes
                .entry(omega)
                .or_insert_with(|| CMat::zeros(d, d))[(i, j)] = entry;
        }
    }
    Ok(ModeDecomposition { modes, dim: d })
}

/// True when all ω ≠ 0 blocks vanish to within `tol`.
pub fn is_incoherent(rho: &DensityMatrix, h: &HarmonicHamiltonian, tol: f64) -> Result<bool> {
    Ok(mode_decompose(rho.matrix(), h)?.off_mode_leakage() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{max_entry_distance, time_evolve, trace_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit_h() -> HarmonicHamiltonian {
        HarmonicHamiltonian::new(3.0f64.ln(), vec![0, 1]).unwrap()
    }

    fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
        DensityMatrix::from_valid(linalg::random_density_matrix(dim, rng))
    }

    /// Random CPTP channel from a Haar isometry with `env` Kraus terms.
    pub(crate) fn random_cptp(
        h_in: &HarmonicHamiltonian,
        h_out: &HarmonicHamiltonian,
        env: usize,
        rng: &mut ChaCha8Rng,
    ) -> QuantumChannel {
        let din = h_in.dim();
        let dout = h_out.dim();
        let u = linalg::random_unitary(dout * env, rng);
        // Isometry V: |i⟩ → Σ columns; K_e = ⟨e| V.
        let ops: Vec<CMat> = (0..env)
            .map(|e| {
                CMat::from_fn(dout, din, |a, i| u[(a * env + e, i)])
            })
            .collect();
        // Normalize completeness exactly enough: Σ K†K = V†V = I requires the
        // first din columns of a unitary, which the construction provides.
        QuantumChannel::from_kraus(&ops, h_in.clone(), h_out.clone()).unwrap()
    }

    #[test]
    fn identity_and_replace_channels() {
        let h = qubit_h();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rho = random_state(2, &mut rng);
        let id = QuantumChannel::identity_channel(&h);
        assert!(max_entry_distance(&apply(&id, &rho).unwrap(), &rho) < 1e-14);

        let repl = QuantumChannel::replace_with_gibbs(&h, &h, 1.0).unwrap();
        let out = apply(&repl, &rho).unwrap();
        let gibbs = gibbs_state(&h, 1.0).unwrap();
        assert!(max_entry_distance(&out, &gibbs) < 1e-14);
        let gp = is_gibbs_preserving(&repl, 1.0, 1e-9).unwrap();
        assert!(gp.pass && gp.violation < 1e-12);
    }

    #[test]
    fn phase_shift_matches_time_evolution() {
        let h = HarmonicHamiltonian::new(0.9, vec![0, 1, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let rho = random_state(3, &mut rng);
            let t = 0.77;
            let ch = QuantumChannel::phase_shift_channel(&h, t);
            let via_channel = apply(&ch, &rho).unwrap();
            let direct = time_evolve(&rho, &h, t).unwrap();
            assert!(max_entry_distance(&via_channel, &direct) < 1e-12);
        }
    }

    #[test]
    fn compose_inverse_phase_shifts_is_identity() {
        let h = qubit_h();
        let fwd = QuantumChannel::phase_shift_channel(&h, 0.31);
        let bwd = QuantumChannel::phase_shift_channel(&h, -0.31);
        let comp = compose(&fwd, &bwd).unwrap();
        let id = QuantumChannel::identity_channel(&h);
        assert!(max_abs(&(comp.choi() - id.choi())) < 1e-12);
    }

    #[test]
    fn compose_agrees_with_sequential_application() {
        let h = qubit_h();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let a = random_cptp(&h, &h, 2, &mut rng);
        let b = random_cptp(&h, &h, 2, &mut rng);
        let ab = compose(&a, &b).unwrap();
        for _ in 0..5 {
            let rho = random_state(2, &mut rng);
            let lhs = apply(&ab, &rho).unwrap();
            let rhs = apply(&a, &apply(&b, &rho).unwrap()).unwrap();
            assert!(max_entry_distance(&lhs, &rhs) < 1e-10);
        }
    }

    #[test]
    fn composition_associativity() {
        let h = qubit_h();
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let a = random_cptp(&h, &h, 2, &mut rng);
        let b = random_cptp(&h, &h, 2, &mut rng);
        let c = random_cptp(&h, &h, 2, &mut rng);
        let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
        let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
        assert!(max_abs(&(left.choi() - right.choi())) < 1e-10);
    }

    #[test]
    fn tensor_channels_product_structure() {
        let h = qubit_h();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lam = random_cptp(&h, &h, 2, &mut rng);
        let pair = tensor_channels(&lam, &lam).unwrap();
        let r1 = random_state(2, &mut rng);
        let r2 = random_state(2, &mut rng);
        let joint = crate::state::tensor(&r1, &r2).unwrap();
        let lhs = apply(&pair, &joint).unwrap();
        let rhs = crate::state::tensor(&apply(&lam, &r1).unwrap(), &apply(&lam, &r2).unwrap())
            .unwrap();
        assert!(max_entry_distance(&lhs, &rhs) < 1e-12);

        // Folding tensor_channels matches channel_power.
        let folded = channel_power(&lam, 2).unwrap();
        assert!(max_abs(&(folded.choi() - pair.choi())) < 1e-10);
    }

    #[test]
    fn kraus_choi_round_trip() {
        let h = qubit_h();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let ch = random_cptp(&h, &h, 3, &mut rng);
        let ops = kraus_from_choi(&ch);
        let back = QuantumChannel::from_kraus(&ops, h.clone(), h.clone()).unwrap();
        assert!(max_abs(&(back.choi() - ch.choi())) < 1e-10);
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let h = qubit_h();
        let half = identity(2).scale(0.5);
        assert!(QuantumChannel::from_kraus(&[half], h.clone(), h).is_err());
    }

    #[test]
    fn gp_check_flags_ground_state_replacement() {
        let h = qubit_h();
        let ground = CMat::from_fn(2, 2, |i, j| {
            if i == 0 && j == 0 {
                linalg::C_ONE
            } else {
                linalg::C_ZERO
            }
        });
        let choi = kron(&ground, &identity(2));
        let ch = QuantumChannel::from_choi(choi, h.clone(), h.clone()).unwrap();
        let report = is_gibbs_preserving(&ch, 1.0, 1e-9).unwrap();
        assert!(!report.pass);
        // |γ − |0⟩⟨0||₁ with γ = diag(3/4, 1/4) is 1/4 + 1/4.
        assert!((report.violation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mode_decomposition_partition() {
        let h = HarmonicHamiltonian::new(1.0, vec![0, 1, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let op = linalg::hermitize(&linalg::random_ginibre(3, 3, &mut rng));
        let dec = mode_decompose(&op, &h).unwrap();
        assert!(max_abs(&(dec.reconstruct() - &op)) < 1e-14);
        for (&omega, block) in dec.modes() {
            if let Some(conj) = dec.block(-omega) {
                assert!(max_abs(&(block.adjoint() - conj)) < 1e-14);
            }
        }
        // Diagonal operator: only the ω = 0 block.
        let diag = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new(1.0 / 3.0, 0.0)
            } else {
                linalg::C_ZERO
            }
        });
        let ddec = mode_decompose(&diag, &h).unwrap();
        assert_eq!(ddec.modes().len(), 1);
        assert!(ddec.block(0).is_some());
        // |0⟩⟨1| sits at ω = −1.
        let mut e01 = CMat::zeros(3, 3);
        e01[(0, 1)] = linalg::C_ONE;
        let edec = mode_decompose(&e01, &h).unwrap();
        assert_eq!(edec.modes().len(), 1);
        assert!(edec.block(-1).is_some());
    }

    #[test]
    fn incoherence_checks() {
        let h = qubit_h();
        let gibbs = gibbs_state(&h, 1.0).unwrap();
        assert!(is_incoherent(&gibbs, &h, 1e-12).unwrap());
        let plus = DensityMatrix::plus_state();
        assert!(!is_incoherent(&plus, &h, 1e-12).unwrap());
        // Pinching makes everything incoherent.
        let deph = QuantumChannel::dephasing_channel(&h);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let rho = random_state(2, &mut rng);
            let out = apply(&deph, &rho).unwrap();
            assert!(is_incoherent(&out, &h, 1e-14).unwrap());
        }
    }

    #[test]
    fn covariance_verdicts() {
        let h = qubit_h();
        // Phase shifts are covariant with zero leakage.
        let shift = QuantumChannel::phase_shift_channel(&h, 0.4);
        let rep = is_covariant(&shift, 1e-12);
        assert!(rep.pass && rep.violation < 1e-15);
        // Dephasing is covariant.
        assert!(is_covariant(&QuantumChannel::dephasing_channel(&h), 1e-12).pass);
        // Hadamard conjugation on a nondegenerate qubit is not.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let had = CMat::from_fn(2, 2, |i, j| {
            let v = match (i, j) {
                (1, 1) => -s,
                _ => s,
            };
            Complex64::new(v, 0.0)
        });
        let ch = QuantumChannel::from_kraus(&[had], h.clone(), h.clone()).unwrap();
        let rep = is_covariant(&ch, 1e-8);
        assert!(!rep.pass && rep.violation > 0.1);
        // Structural and sampled checks agree on these.
        assert!(is_covariant_sampled(&shift, 16, 1e-9).unwrap().pass);
        assert!(!is_covariant_sampled(&ch, 16, 1e-9).unwrap().pass);
    }

    #[test]
    fn quantum_data_processing_under_cptp() {
        let h = qubit_h();
        let mut rng = ChaCha8Rng::seed_from_u64(90);
        for _ in 0..20 {
            let ch = random_cptp(&h, &h, 2, &mut rng);
            let rho = random_state(2, &mut rng);
            let sigma = random_state(2, &mut rng);
            let before = crate::thermo::relative_entropy(&rho, &sigma).unwrap();
            let after = crate::thermo::relative_entropy(
                &apply(&ch, &rho).unwrap(),
                &apply(&ch, &sigma).unwrap(),
            )
            .unwrap();
            if before.is_finite() {
                assert!(after <= before + 1e-7, "{after} > {before}");
            }
        }
    }

    #[test]
    fn trace_distance_contraction_sanity() {
        let h = qubit_h();
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let ch = random_cptp(&h, &h, 2, &mut rng);
        let a = random_state(2, &mut rng);
        let b = random_state(2, &mut rng);
        let before = trace_distance(&a, &b).unwrap();
        let after = trace_distance(&apply(&ch, &a).unwrap(), &apply(&ch, &b).unwrap()).unwrap();
        assert!(after <= before + 1e-10);
    }
}
