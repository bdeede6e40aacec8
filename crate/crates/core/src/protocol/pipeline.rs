//! The estimation/shift sandwich: wrap a Gibbs-preserving many-copy map with
//! two independent covariant time estimations and the matching phase shifts.
//!
//! N input copies split into ν working sets of `set_size` copies (the A part)
//! and two estimation blocks B₁, B₂. The time estimated from B₁ un-rotates
//! the A part before the inner map, the one from B₂ re-rotates afterwards.
//! Two independent estimators are essential: reusing one correlates the two
//! shifts and breaks covariance, which `EstimatorWiring::Reused` demonstrates.
//!
//! The continuous estimator integral is discretized to the POVM bins. The
//! resulting finite mixture is still exactly covariant provided the bin count
//! exceeds the combined level span of the A part and either estimation block,
//! because the bin-phase sums then cancel cross-mode terms identically.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_power, QuantumChannel};
use crate::error::{CgpoError, Result};
use crate::hamiltonian::HarmonicHamiltonian;
use crate::linalg::{self, CMat};
use crate::state::{check_dim_budget, evolve_matrix, tensor_power, time_evolve, DensityMatrix};

use super::povm::{iid_estimator_distribution, PhasePovm};

/// Exact-mode cap: building the full Choi matrix is limited to d^N ≤ 64.
pub const EXACT_MODE_MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorWiring {
    /// Two disjoint estimation blocks, each consumed once.
    Independent,
    /// One fresh estimate drives both shifts (t¹ = t²). Measured fact: the
    /// resulting channel is still exactly covariant, because the single
    /// estimate co-rotates with the input and cancels out of both shifts.
    /// What does break covariance is a *stale* estimate that was not
    /// measured on the rotated input; see `stale_estimate_sandwich`.
    Reused,
}

/// Copy-count bookkeeping of the sandwich protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Total input copies N.
    pub total_copies: usize,
    /// Fraction of copies consumed by the two estimation blocks.
    pub delta: f64,
    /// Copies per working set.
    pub set_size: usize,
    /// POVM bins per period.
    pub bins: usize,
    /// Target trace-norm error of the inner map (used by the driver).
    pub lambda_error: f64,
    /// Target conversion error (used by the driver).
    pub accept_error: f64,
    pub wiring: EstimatorWiring,
}

impl PipelineParams {
    pub fn desk_default() -> Self {
        Self {
            total_copies: 4,
            delta: 0.5,
            set_size: 2,
            bins: 8,
            lambda_error: 0.1,
            accept_error: 0.05,
            wiring: EstimatorWiring::Independent,
        }
    }
}

/// Derived block sizes: ν sets of `set_size` copies plus the two estimation
/// blocks. Floor rounding on ν, remainder pushed into the estimation blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineLayout {
    pub nu: usize,
    pub a_copies: usize,
    pub b1_copies: usize,
    pub b2_copies: usize,
}

impl PipelineLayout {
    pub fn from_params(p: &PipelineParams) -> Result<Self> {
        if p.total_copies == 0 || p.set_size == 0 {
            return Err(CgpoError::InvalidArgument(
                "copy counts must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&p.delta) {
            return Err(CgpoError::InvalidArgument(format!(
                "estimation fraction {} outside [0, 1)",
                p.delta
            )));
        }
        let working = ((1.0 - p.delta) * p.total_copies as f64).floor() as usize;
        let nu = working / p.set_size;
        if nu == 0 {
            return Err(CgpoError::InvalidArgument(
                "no room for a working set; lower delta or set_size".into(),
            ));
        }
        let a_copies = nu * p.set_size;
        let leftover = p.total_copies - a_copies;
        let b1 = leftover.div_ceil(2);
        let b2 = leftover - b1;
        if b1 == 0 || b2 == 0 {
            return Err(CgpoError::InvalidArgument(format!(
                "estimation blocks need at least one copy each, got {b1} and {b2}"
            )));
        }
        Ok(Self {
            nu,
            a_copies,
            b1_copies: b1,
            b2_copies: b2,
        })
    }
}

/// The assembled protocol for one inner map Λ on `set_size` copies.
#[derive(Debug, Clone)]
pub struct Pipeline {
    h_single: HarmonicHamiltonian,
    params: PipelineParams,
    layout: PipelineLayout,
    lambda: QuantumChannel,
    lambda_nu: QuantumChannel,
    povm1: PhasePovm,
    povm2: PhasePovm,
}

/// Smallest bin count making the discretized sandwich exactly covariant.
pub fn minimal_bins(h_single: &HarmonicHamiltonian, layout: &PipelineLayout) -> usize {
    let span = h_single.level_span() as usize;
    let b_max = layout.b1_copies.max(layout.b2_copies);
    span * (layout.a_copies + b_max) + 1
}

impl Pipeline {
    /// `lambda` must act on `set_size` copies of the single system and be
    /// Gibbs preserving; the POVMs are calibrated on `reference`^⊗b.
    pub fn new(
        lambda: &QuantumChannel,
        h_single: &HarmonicHamiltonian,
        params: PipelineParams,
        reference: &DensityMatrix,
    ) -> Result<Self> {
        let layout = PipelineLayout::from_params(&params)?;
        let hs = h_single.copies(params.set_size)?;
        if lambda.dim_in() != hs.dim() || lambda.dim_out() != hs.dim() {
            return Err(CgpoError::DimensionMismatch(format!(
                "inner map acts on {}→{}, expected {} for {} copies",
                lambda.dim_in(),
                lambda.dim_out(),
                hs.dim(),
                params.set_size
            )));
        }
        let need = minimal_bins(h_single, &layout);
        if params.bins < need {
            return Err(CgpoError::InvalidArgument(format!(
                "bin count {} too small for exact covariance; need at least {need}",
                params.bins
            )));
        }
        if reference.dim() != h_single.dim() {
            return Err(CgpoError::DimensionMismatch(
                "reference state must live on the single system".into(),
            ));
        }
        let h_b1 = h_single.copies(layout.b1_copies)?;
        let h_b2 = h_single.copies(layout.b2_copies)?;
        let ref1 = tensor_power(reference, layout.b1_copies)?;
        let ref2 = tensor_power(reference, layout.b2_copies)?;
        let povm1 = PhasePovm::new(&h_b1, params.bins, &ref1)?;
        let povm2 = PhasePovm::new(&h_b2, params.bins, &ref2)?;
        let lambda_nu = channel_power(lambda, layout.nu)?;
        Ok(Self {
            h_single: h_single.clone(),
            params,
            layout,
            lambda: lambda.clone(),
            lambda_nu,
            povm1,
            povm2,
        })
    }

    pub fn layout(&self) -> &PipelineLayout {
        &self.layout
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    pub fn povm1(&self) -> &PhasePovm {
        &self.povm1
    }

    pub fn povm2(&self) -> &PhasePovm {
        &self.povm2
    }

    pub fn h_in(&self) -> Result<HarmonicHamiltonian> {
        self.h_single.copies(self.params.total_copies)
    }

    pub fn h_out(&self) -> Result<HarmonicHamiltonian> {
        self.h_single.copies(self.layout.a_copies)
    }

    /// Build the full channel on N copies as an explicit Choi matrix, summing
    /// over bin pairs with both failure branches resolved uniformly.
    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let d = self.h_single.dim();
        let n = self.params.total_copies;
        let din: usize = d.pow(n as u32);
        if din > EXACT_MODE_MAX_DIM {
            return Err(CgpoError::DimensionBudget {
                requested: din,
                budget: EXACT_MODE_MAX_DIM,
            });
        }
        let da: usize = d.pow(self.layout.a_copies as u32);
        let db1: usize = d.pow(self.layout.b1_copies as u32);
        let db2: usize = d.pow(self.layout.b2_copies as u32);
        check_dim_budget(din * da)?;

        let h_a = self.h_single.copies(self.layout.a_copies)?;
        let h_out = self.h_out()?;
        let bins = self.params.bins;

        // Resolved instrument effects for the two blocks.
        let m1: Vec<CMat> = (0..bins).map(|k| self.povm1.resolved_effect(k)).collect();
        let m2: Vec<CMat> = (0..bins).map(|k| self.povm2.resolved_effect(k)).collect();

        // Λ^⊗ν images of the A-part basis elements, then rotated per k2.
        // y_rot[xa][ya][k2] = 𝒯_{t_{k2}}(Λ^ν(|xa⟩⟨ya|)).
        let mut y_rot: Vec<Vec<Vec<CMat>>> = Vec::with_capacity(da);
        for xa in 0..da {
            let mut row = Vec::with_capacity(da);
            for ya in 0..da {
                let mut basis = CMat::zeros(da, da);
                basis[(xa, ya)] = linalg::C_ONE;
                let image = self.lambda_nu.apply_to_operator(&basis);
                let mut per_bin = Vec::with_capacity(bins);
                for k2 in 0..bins {
                    let t2 = self.povm2.bin_time(k2);
                    per_bin.push(evolve_matrix(&image, &h_out, t2));
                }
                row.push(per_bin);
            }
            y_rot.push(row);
        }

        // Input composite index: (A, B1, B2) with A slowest.
        let mut choi = CMat::zeros(da * din, da * din);
        for x in 0..din {
            let xa = x / (db1 * db2);
            let xb1 = (x / db2) % db1;
            let xb2 = x % db2;
            for y in 0..din {
                let ya = y / (db1 * db2);
                let yb1 = (y / db2) % db1;
                let yb2 = y % db2;
                // Phase of 𝒯_{−t_{k1}} on the A-part basis element.
                let omega_a = h_a.levels()[xa] - h_a.levels()[ya];
                let mut out = CMat::zeros(da, da);
                match self.params.wiring {
                    EstimatorWiring::Independent => {
                        for (k1, eff1) in m1.iter().enumerate() {
                            // ⟨y_B1|M'_{k1}|x_B1⟩ times the A-part phase.
                            let w1 = eff1[(yb1, xb1)]
                                * Complex64::from_polar(
                                    1.0,
                                    omega_a as f64
                                        * self.h_single.delta()
                                        * self.povm1.bin_time(k1),
                                );
                            if w1.norm_sqr() < 1e-60 {
                                continue;
                            }
                            for (k2, eff2) in m2.iter().enumerate() {
                                let w = w1 * eff2[(yb2, xb2)];
                                if w.norm_sqr() < 1e-60 {
                                    continue;
                                }
                                out += y_rot[xa][ya][k2].scale_complex(w);
                            }
                        }
                    }
                    EstimatorWiring::Reused => {
                        // One estimate drives both shifts; B2 is discarded.
                        if xb2 == yb2 {
                            for (k1, eff1) in m1.iter().enumerate() {
                                let w = eff1[(yb1, xb1)]
                                    * Complex64::from_polar(
                                        1.0,
                                        omega_a as f64
                                            * self.h_single.delta()
                                            * self.povm1.bin_time(k1),
                                    );
                                if w.norm_sqr() < 1e-60 {
                                    continue;
                                }
                                out += y_rot[xa][ya][k1].scale_complex(w);
                            }
                        }
                    }
                }
                for p in 0..da {
                    for q in 0..da {
                        choi[(p * din + x, q * din + y)] = out[(p, q)];
                    }
                }
            }
        }
        QuantumChannel::from_choi_unchecked(choi, self.h_in()?, h_out)
    }

    /// Sample one run on the i.i.d. input ρ^⊗N: estimates from both blocks
    /// and the resulting per-set output 𝒯_{t₂}(Λ(𝒯_{−t₁}(ρ^⊗s))).
    pub fn sample_set_output<R: Rng>(
        &self,
        rho: &DensityMatrix,
        rng: &mut R,
    ) -> Result<(f64, f64, DensityMatrix)> {
        let d1 = iid_estimator_distribution(
            rho,
            &self.h_single,
            self.layout.b1_copies,
            self.params.bins,
        )?;
        let t1 = d1.sample(rng);
        let t2 = match self.params.wiring {
            EstimatorWiring::Independent => {
                let d2 = iid_estimator_distribution(
                    rho,
                    &self.h_single,
                    self.layout.b2_copies,
                    self.params.bins,
                )?;
                d2.sample(rng)
            }
            EstimatorWiring::Reused => t1,
        };
        let hs = self.h_single.copies(self.params.set_size)?;
        let input = tensor_power(rho, self.params.set_size)?;
        let rotated = time_evolve(&input, &hs, -t1)?;
        let mapped = crate::channel::apply(&self.lambda, &rotated)?;
        let output = time_evolve(&mapped, &hs, t2)?;
        Ok((t1, t2, output))
    }

    /// Exact per-set input of the inner map: ζ = Σ_k P(k|ρ^⊗b₁) 𝒯_{−t_k}(ρ^⊗s).
    pub fn exact_zeta(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let hs = self.h_single.copies(self.params.set_size)?;
        let input = tensor_power(rho, self.params.set_size)?;
        let ref1 = tensor_power(rho, self.layout.b1_copies)?;
        let dist = self.povm1.distribution(&ref1)?;
        let mut acc = CMat::zeros(input.dim(), input.dim());
        for (k, &p) in dist.probs().iter().enumerate() {
            let t = self.povm1.bin_time(k);
            acc += time_evolve(&input, &hs, -t)?.matrix().scale(p);
        }
        Ok(DensityMatrix::from_valid(acc))
    }

    /// Exact per-set output: Σ_{k2} P(k2|ρ^⊗b₂) 𝒯_{t_{k2}}(Λ(ζ)).
    pub fn exact_set_output(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let hs = self.h_single.copies(self.params.set_size)?;
        let zeta = self.exact_zeta(rho)?;
        let mapped = crate::channel::apply(&self.lambda, &zeta)?;
        let ref2 = tensor_power(rho, self.layout.b2_copies)?;
        let dist = self.povm2.distribution(&ref2)?;
        let mut acc = CMat::zeros(mapped.dim(), mapped.dim());
        for (k, &p) in dist.probs().iter().enumerate() {
            let t = self.povm2.bin_time(k);
            acc += time_evolve(&mapped, &hs, t)?.matrix().scale(p);
        }
        Ok(DensityMatrix::from_valid(acc))
    }
}

/// The genuinely broken wiring: drive both shifts from a frozen estimator
/// distribution recorded earlier (so it does not co-rotate with the input).
/// The result Σ_k P̄(k)·𝒯_{t_k}∘Λ∘𝒯_{−t_k} is a plain mixture of conjugated
/// maps and is not covariant unless Λ already was.
pub fn stale_estimate_sandwich(
    lambda: &QuantumChannel,
    h_set: &HarmonicHamiltonian,
    stale: &super::povm::EstimatorDistribution,
) -> Result<QuantumChannel> {
    if lambda.dim_in() != h_set.dim() || lambda.dim_out() != h_set.dim() {
        return Err(CgpoError::DimensionMismatch(
            "inner map must act on the set system".into(),
        ));
    }
    let d = h_set.dim();
    let mut choi = CMat::zeros(d * d, d * d);
    for (k, &p) in stale.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let t = stale.bin_time(k);
        let fwd = QuantumChannel::phase_shift_channel(h_set, t);
        let bwd = QuantumChannel::phase_shift_channel(h_set, -t);
        let branch = crate::channel::compose(&fwd, &crate::channel::compose(lambda, &bwd)?)?;
        choi += branch.choi().scale(p);
    }
    QuantumChannel::from_choi_unchecked(choi, h_set.clone(), h_set.clone())
}

trait ScaleComplex {
    fn scale_complex(&self, w: Complex64) -> CMat;
}

impl ScaleComplex for CMat {
    fn scale_complex(&self, w: Complex64) -> CMat {
        self.map(|z| z * w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply, is_covariant, is_gibbs_preserving};
    use crate::feasibility::random_gp_channel;
    use crate::state::trace_distance;
    use crate::thermo::gibbs_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit_h() -> HarmonicHamiltonian {
        HarmonicHamiltonian::new(3.0f64.ln(), vec![0, 1]).unwrap()
    }

    fn desk_pipeline(seed: u64, wiring: EstimatorWiring) -> Pipeline {
        let h = qubit_h();
        let lam1 = random_gp_channel(&h, 1.0, seed, false).unwrap();
        let lambda = channel_power(&lam1, 2).unwrap();
        let params = PipelineParams {
            wiring,
            ..PipelineParams::desk_default()
        };
        Pipeline::new(&lambda, &h, params, &DensityMatrix::plus_state()).unwrap()
    }

    #[test]
    fn layout_rounding() {
        let p = PipelineParams::desk_default();
        let layout = PipelineLayout::from_params(&p).unwrap();
        assert_eq!(
            layout,
            PipelineLayout {
                nu: 1,
                a_copies: 2,
                b1_copies: 1,
                b2_copies: 1
            }
        );
        // N = 9, δ = 0.4, s = 2 → working 5 → ν = 2, A = 4, B = (3, 2).
        let p9 = PipelineParams {
            total_copies: 9,
            delta: 0.4,
            set_size: 2,
            ..PipelineParams::desk_default()
        };
        let l9 = PipelineLayout::from_params(&p9).unwrap();
        assert_eq!(l9.nu, 2);
        assert_eq!(l9.a_copies, 4);
        assert_eq!(l9.b1_copies, 3);
        assert_eq!(l9.b2_copies, 2);
    }

    #[test]
    fn requires_enough_bins() {
        let h = qubit_h();
        let lam1 = random_gp_channel(&h, 1.0, 0, false).unwrap();
        let lambda = channel_power(&lam1, 2).unwrap();
        let params = PipelineParams {
            bins: 3,
            ..PipelineParams::desk_default()
        };
        let err = Pipeline::new(&lambda, &h, params, &DensityMatrix::plus_state()).unwrap_err();
        assert!(format!("{err}").contains("need at least 4"));
    }

    #[test]
    fn pipeline_is_gibbs_preserving_exactly() {
        let pipe = desk_pipeline(1, EstimatorWiring::Independent);
        let ch = pipe.to_channel().unwrap();
        let gp = is_gibbs_preserving(&ch, 1.0, 1e-10).unwrap();
        assert!(gp.pass, "gp violation {}", gp.violation);
        // Directly: 𝒩(Gibbs^⊗N) = Gibbs^⊗sets.
        let h = qubit_h();
        let gin = tensor_power(&gibbs_state(&h, 1.0).unwrap(), 4).unwrap();
        let gout = tensor_power(&gibbs_state(&h, 1.0).unwrap(), 2).unwrap();
        let img = apply(&ch, &gin).unwrap();
        assert!(trace_distance(&img, &gout).unwrap() < 1e-10);
    }

    #[test]
    fn pipeline_is_covariant_structurally_and_on_a_grid() {
        let pipe = desk_pipeline(2, EstimatorWiring::Independent);
        let ch = pipe.to_channel().unwrap();
        let cov = is_covariant(&ch, 1e-9);
        assert!(cov.pass, "leakage {}", cov.violation);

        let h4 = qubit_h().copies(4).unwrap();
        let h2 = qubit_h().copies(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let period = qubit_h().period();
        for trial in 0..3 {
            let sigma = DensityMatrix::from_valid(linalg::random_density_matrix(16, &mut rng));
            for k in 0..8 {
                let t = period * (k as f64 + 0.37) / 8.0;
                let lhs = apply(&ch, &time_evolve(&sigma, &h4, t).unwrap()).unwrap();
                let rhs = time_evolve(&apply(&ch, &sigma).unwrap(), &h2, t).unwrap();
                let dist = trace_distance(&lhs, &rhs).unwrap();
                assert!(dist < 1e-9, "trial {trial} k {k}: {dist}");
            }
        }
    }

    #[test]
    fn fresh_reuse_stays_covariant_but_stale_estimates_leak() {
        // A fresh estimate reused for both shifts still cancels out: the
        // channel keeps exact covariance.
        let pipe = desk_pipeline(3, EstimatorWiring::Reused);
        let ch = pipe.to_channel().unwrap();
        let cov = is_covariant(&ch, 1e-12);
        assert!(cov.pass, "fresh reuse leaked {}", cov.violation);

        // A stale estimate that does not co-rotate with the input is the
        // correlation that actually breaks covariance.
        let h = qubit_h();
        let h2 = h.copies(2).unwrap();
        let lam1 = random_gp_channel(&h, 1.0, 3, false).unwrap();
        let lambda = channel_power(&lam1, 2).unwrap();
        let stale = crate::protocol::povm::iid_estimator_distribution(
            &DensityMatrix::plus_state(),
            &h,
            1,
            8,
        )
        .unwrap();
        let bad = stale_estimate_sandwich(&lambda, &h2, &stale).unwrap();
        let leak = is_covariant(&bad, 1e-9);
        assert!(!leak.pass, "stale estimate should leak");
        assert!(leak.violation > 1e-3, "leakage {}", leak.violation);
    }

    #[test]
    fn sample_mode_matches_exact_mixture_in_expectation() {
        let pipe = desk_pipeline(4, EstimatorWiring::Independent);
        let rho = DensityMatrix::plus_state();
        let exact = pipe.exact_set_output(&rho).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut acc = CMat::zeros(4, 4);
        let shots = 4000;
        for _ in 0..shots {
            let (_, _, out) = pipe.sample_set_output(&rho, &mut rng).unwrap();
            acc += out.matrix();
        }
        let mean = DensityMatrix::from_valid(acc.scale(1.0 / shots as f64));
        let dist = trace_distance(&mean, &exact).unwrap();
        assert!(dist < 0.08, "Monte-Carlo mean off by {dist}");
    }
}
