//! Covariant phase (time) estimation on harmonic systems.
//!
//! The measurement discretizes one period into L bins. Each effect is a
//! rotated copy of (1/L)|e⟩⟨e|, where |e⟩ sums one normalized uniform
//! superposition per distinct total energy. With L larger than the level
//! span, the bin sum telescopes to the projector onto those superpositions,
//! so M_fail = I − Σ_k M_k is itself PSD and invariant under every time
//! shift. Conjugating the input by a bin multiple of the period permutes the
//! effects exactly, which is the covariance the sandwich protocol needs.
//!
//! The failure outcome resolves to a uniformly random bin, keeping the
//! overall estimation channel covariant.

use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeMap;

use crate::error::{CgpoError, Result};
use crate::hamiltonian::HarmonicHamiltonian;
use crate::linalg::{self, identity, max_abs, CMat};
use crate::state::DensityMatrix;

/// Discretized covariant time measurement: L rotated effects plus a failure
/// effect, calibrated so the circular mean on a reference state is zero.
#[derive(Debug, Clone)]
pub struct PhasePovm {
    h_total: HarmonicHamiltonian,
    bins: usize,
    origin: f64,
    effects: Vec<CMat>,
    fail: CMat,
}

/// Distribution of the time estimate over the bins of one period, with the
/// failure branch already resolved as uniform.
#[derive(Debug, Clone)]
pub struct EstimatorDistribution {
    period: f64,
    probs: Vec<f64>,
    failure_prob: f64,
}

/// Wrap a time difference into (−period/2, period/2].
pub fn wrap_time(dt: f64, period: f64) -> f64 {
    let mut x = dt % period;
    if x <= -period / 2.0 {
        x += period;
    } else if x > period / 2.0 {
        x -= period;
    }
    x
}

impl EstimatorDistribution {
    pub fn new(period: f64, probs: Vec<f64>, failure_prob: f64) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CgpoError::InvalidDistribution(format!(
                "estimator probabilities sum to {total}"
            )));
        }
        if probs.iter().any(|&p| p < -1e-12) {
            return Err(CgpoError::InvalidDistribution(
                "negative estimator probability".into(),
            ));
        }
        Ok(Self {
            period,
            probs: probs.iter().map(|&p| p.max(0.0)).collect(),
            failure_prob,
        })
    }

    pub fn bins(&self) -> usize {
        self.probs.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn failure_prob(&self) -> f64 {
        self.failure_prob
    }

    pub fn bin_time(&self, k: usize) -> f64 {
        self.period * k as f64 / self.bins() as f64
    }

    pub fn support(&self) -> Vec<f64> {
        (0..self.bins()).map(|k| self.bin_time(k)).collect()
    }

    /// Circular mean in [0, period), via the phase of the first moment.
    pub fn circular_mean(&self) -> f64 {
        let l = self.bins() as f64;
        let mut moment = Complex64::new(0.0, 0.0);
        for (k, &p) in self.probs.iter().enumerate() {
            moment += Complex64::from_polar(p, std::f64::consts::TAU * k as f64 / l);
        }
        if moment.norm() < 1e-15 {
            return 0.0;
        }
        let mut t = moment.arg() / std::f64::consts::TAU * self.period;
        if t < 0.0 {
            t += self.period;
        }
        t
    }

    /// Variance of the wrapped signed difference from the circular mean.
    pub fn circular_variance(&self) -> f64 {
        let mean = self.circular_mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let d = wrap_time(self.bin_time(k) - mean, self.period);
                p * d * d
            })
            .sum()
    }

    /// Draw one estimate.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random_range(0.0..1.0);
        let mut acc = 0.0;
        for (k, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return self.bin_time(k);
            }
        }
        self.bin_time(self.bins() - 1)
    }

    /// Distribution with the bins cyclically shifted by `j` (time +j·period/L).
    pub fn shifted_bins(&self, j: usize) -> Self {
        let l = self.bins();
        let mut probs = vec![0.0; l];
        for (k, &p) in self.probs.iter().enumerate() {
            probs[(k + j) % l] = p;
        }
        Self {
            period: self.period,
            probs,
            failure_prob: self.failure_prob,
        }
    }
}

/// Indices of the computational basis grouped by level, ascending in level.
fn level_groups(h: &HarmonicHamiltonian) -> BTreeMap<i64, Vec<usize>> {
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &n) in h.levels().iter().enumerate() {
        groups.entry(n).or_default().push(i);
    }
    groups
}

impl PhasePovm {
    /// Build the L-bin covariant measurement, calibrating the time origin so
    /// the circular mean on `reference` vanishes.
    ///
    /// Requires L > (max level − min level), so the cross-energy phase sums
    /// cancel exactly and completeness holds algebraically.
    pub fn new(
        h_total: &HarmonicHamiltonian,
        bins: usize,
        reference: &DensityMatrix,
    ) -> Result<Self> {
        let span = h_total.level_span() as usize;
        if bins <= span {
            return Err(CgpoError::InvalidArgument(format!(
                "bin count {bins} too small for level span {span}; need at least {}",
                span + 1
            )));
        }
        if reference.dim() != h_total.dim() {
            return Err(CgpoError::DimensionMismatch(format!(
                "reference dim {} vs Hamiltonian {}",
                reference.dim(),
                h_total.dim()
            )));
        }
        let mut povm = Self::with_origin(h_total, bins, 0.0)?;
        // Calibrate: shifting the origin by the current mean moves the mean
        // to zero (exactly in the generic single-frequency case, to fixed
        // point otherwise).
        for _ in 0..64 {
            let mean = povm.distribution(reference)?.circular_mean();
            let wrapped = wrap_time(mean, h_total.period());
            if wrapped.abs() < 1e-12 {
                break;
            }
            povm = Self::with_origin(h_total, bins, povm.origin + wrapped)?;
        }
        Ok(povm)
    }

    /// Uncalibrated construction with a fixed time origin.
    pub fn with_origin(h_total: &HarmonicHamiltonian, bins: usize, origin: f64) -> Result<Self> {
        let span = h_total.level_span() as usize;
        if bins <= span {
            return Err(CgpoError::InvalidArgument(format!(
                "bin count {bins} too small for level span {span}; need at least {}",
                span + 1
            )));
        }
        let d = h_total.dim();
        let groups = level_groups(h_total);
        // |e⟩ = Σ_E |ê_E⟩ with |ê_E⟩ the normalized uniform superposition of
        // the level-E basis states.
        let mut e = vec![Complex64::new(0.0, 0.0); d];
        for idx in groups.values() {
            let w = 1.0 / (idx.len() as f64).sqrt();
            for &i in idx {
                e[i] = Complex64::new(w, 0.0);
            }
        }
        let period = h_total.period();
        let l = bins as f64;
        let mut effects = Vec::with_capacity(bins);
        let mut sum = CMat::zeros(d, d);
        for k in 0..bins {
            let t = period * k as f64 / l + origin;
            let mut m = CMat::zeros(d, d);
            for r in 0..d {
                let phase_r = Complex64::from_polar(1.0, -h_total.energy(r) * t);
                let vr = phase_r * e[r];
                for c in 0..d {
                    let phase_c = Complex64::from_polar(1.0, -h_total.energy(c) * t);
                    m[(r, c)] = vr * (phase_c * e[c]).conj() / Complex64::new(l, 0.0);
                }
            }
            sum += &m;
            effects.push(m);
        }
        let fail = identity(d) - sum;
        Ok(Self {
            h_total: h_total.clone(),
            bins,
            origin,
            effects,
            fail,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn h_total(&self) -> &HarmonicHamiltonian {
        &self.h_total
    }

    pub fn effect(&self, k: usize) -> &CMat {
        &self.effects[k]
    }

    pub fn fail_effect(&self) -> &CMat {
        &self.fail
    }

    /// Effect with the failure branch folded in uniformly: M_k + M_fail/L.
    pub fn resolved_effect(&self, k: usize) -> CMat {
        &self.effects[k] + self.fail.scale(1.0 / self.bins as f64)
    }

    pub fn bin_time(&self, k: usize) -> f64 {
        self.h_total.period() * k as f64 / self.bins as f64
    }

    /// Σ_k M_k + M_fail − I, which should vanish to machine precision.
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = self.fail.clone();
        for m in &self.effects {
            sum += m;
        }
        max_abs(&(sum - identity(self.h_total.dim())))
    }

    /// Worst PSD defect over all effects including the failure effect.
    pub fn positivity_defect(&self) -> f64 {
        let mut worst: f64 = (-linalg::min_eigenvalue(&self.fail)).max(0.0);
        for m in &self.effects {
            worst = worst.max((-linalg::min_eigenvalue(m)).max(0.0));
        }
        worst
    }

    /// Exact distribution of the estimate on a state, failure resolved as
    /// a uniformly random bin.
    pub fn distribution(&self, state: &DensityMatrix) -> Result<EstimatorDistribution> {
        if state.dim() != self.h_total.dim() {
            return Err(CgpoError::DimensionMismatch(format!(
                "state dim {} vs POVM dim {}",
                state.dim(),
                self.h_total.dim()
            )));
        }
        let mut probs = Vec::with_capacity(self.bins);
        for m in &self.effects {
            probs.push(linalg::hs_inner(m, state.matrix()).re.max(0.0));
        }
        let fail = linalg::hs_inner(&self.fail, state.matrix()).re.max(0.0);
        let l = self.bins as f64;
        for p in probs.iter_mut() {
            *p += fail / l;
        }
        let total: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= total;
        }
        EstimatorDistribution::new(self.h_total.period(), probs, fail)
    }

    /// Draw one estimate from a state.
    pub fn sample<R: Rng>(&self, state: &DensityMatrix, rng: &mut R) -> Result<f64> {
        Ok(self.distribution(state)?.sample(rng))
    }
}

// ---------------------------------------------------------------------------
// Fast path for i.i.d. inputs ρ^⊗m: the estimator distribution only needs the
// Gram matrix of ρ^⊗m between the uniform energy superpositions, which is a
// coefficient extraction from the m-th power of a bivariate polynomial whose
// site kernel is ρ itself. Cost is polynomial in m, so m = 64 is cheap.
// ---------------------------------------------------------------------------

/// Gram matrix G[E][E'] = ⟨ê_E|ρ^⊗m|ê_E'⟩ over total-level offsets
/// E ∈ {0, …, m·span}.
fn iid_gram(rho: &DensityMatrix, h: &HarmonicHamiltonian, m: usize) -> (Vec<Vec<Complex64>>, Vec<f64>) {
    let d = h.dim();
    let n_min = *h.levels().iter().min().unwrap();
    let span = h.level_span() as usize;
    let size = m * span + 1;

    // Site kernel: entries of ρ indexed by (row level offset, col level offset).
    let mut kernel = vec![vec![Complex64::new(0.0, 0.0); span + 1]; span + 1];
    for a in 0..d {
        for b in 0..d {
            let s = (h.levels()[a] - n_min) as usize;
            let t = (h.levels()[b] - n_min) as usize;
            kernel[s][t] += rho.entry(a, b);
        }
    }
    // Degeneracy counts per total offset: power of the diagonal counts.
    let mut ones = vec![0.0f64; span + 1];
    for a in 0..d {
        ones[(h.levels()[a] - n_min) as usize] += 1.0;
    }

    // coeff[s][t] of the m-th power, built by repeated small convolutions.
    let mut coeff = vec![vec![Complex64::new(0.0, 0.0); size]; size];
    coeff[0][0] = Complex64::new(1.0, 0.0);
    let mut counts = vec![0.0f64; size];
    counts[0] = 1.0;
    let mut cur = 0usize; // current max degree
    for _ in 0..m {
        let mut next = vec![vec![Complex64::new(0.0, 0.0); size]; size];
        for s in 0..=cur {
            for t in 0..=cur {
                let c = coeff[s][t];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                for (ds, krow) in kernel.iter().enumerate() {
                    for (dt, &kv) in krow.iter().enumerate() {
                        if kv.norm_sqr() == 0.0 {
                            continue;
                        }
                        next[s + ds][t + dt] += c * kv;
                    }
                }
            }
        }
        coeff = next;
        let mut next_counts = vec![0.0f64; size];
        for (s, &c) in counts.iter().enumerate().take(cur + 1) {
            if c == 0.0 {
                continue;
            }
            for (ds, &o) in ones.iter().enumerate() {
                if o != 0.0 {
                    next_counts[s + ds] += c * o;
                }
            }
        }
        counts = next_counts;
        cur += span;
    }

    let mut gram = vec![vec![Complex64::new(0.0, 0.0); size]; size];
    for s in 0..size {
        if counts[s] <= 0.0 {
            continue;
        }
        for t in 0..size {
            if counts[t] <= 0.0 {
                continue;
            }
            gram[s][t] = coeff[s][t] / Complex64::new((counts[s] * counts[t]).sqrt(), 0.0);
        }
    }
    (gram, counts)
}

/// Estimator distribution on ρ^⊗m without materializing the m-copy space,
/// identical to the explicit `PhasePovm` path (including calibration).
pub fn iid_estimator_distribution(
    rho: &DensityMatrix,
    h: &HarmonicHamiltonian,
    m: usize,
    bins: usize,
) -> Result<EstimatorDistribution> {
    let span_total = m * h.level_span() as usize;
    if bins <= span_total {
        return Err(CgpoError::InvalidArgument(format!(
            "bin count {bins} too small for total level span {span_total}; need at least {}",
            span_total + 1
        )));
    }
    if rho.dim() != h.dim() {
        return Err(CgpoError::DimensionMismatch(format!(
            "state dim {} vs Hamiltonian {}",
            rho.dim(),
            h.dim()
        )));
    }
    let (gram, counts) = iid_gram(rho, h, m);
    let size = gram.len();
    let period = h.period();
    let delta = h.delta();
    let l = bins as f64;
    let success: f64 = (0..size).map(|s| gram[s][s].re).sum();
    let fail = (1.0 - success).max(0.0);

    let distribution_at = |origin: f64| -> EstimatorDistribution {
        let mut probs = Vec::with_capacity(bins);
        for k in 0..bins {
            let t = period * k as f64 / l + origin;
            let mut acc = 0.0f64;
            for s in 0..size {
                if counts[s] <= 0.0 {
                    continue;
                }
                acc += gram[s][s].re;
                for tt in (s + 1)..size {
                    if counts[tt] <= 0.0 {
                        continue;
                    }
                    // e^{i(E_s − E_t)Δ(t)}·G[s][t] + conjugate.
                    let phase =
                        Complex64::from_polar(1.0, (s as f64 - tt as f64) * delta * t);
                    acc += 2.0 * (phase * gram[s][tt]).re;
                }
            }
            probs.push((acc / l).max(0.0) + fail / l);
        }
        let total: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= total;
        }
        EstimatorDistribution::new(period, probs, fail).expect("normalized by construction")
    };

    let mut origin = 0.0f64;
    let mut dist = distribution_at(origin);
    for _ in 0..64 {
        let mean = wrap_time(dist.circular_mean(), period);
        if mean.abs() < 1e-12 {
            break;
        }
        origin += mean;
        dist = distribution_at(origin);
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{tensor_power, time_evolve};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit_h() -> HarmonicHamiltonian {
        HarmonicHamiltonian::new(3.0f64.ln(), vec![0, 1]).unwrap()
    }

    #[test]
    fn completeness_and_positivity() {
        let h = qubit_h();
        let plus = DensityMatrix::plus_state();
        let povm = PhasePovm::new(&h, 4, &plus).unwrap();
        assert!(povm.completeness_defect() < 1e-12);
        assert!(povm.positivity_defect() < 1e-12);
        // Two copies.
        let h2 = h.copies(2).unwrap();
        let ref2 = tensor_power(&plus, 2).unwrap();
        let povm2 = PhasePovm::new(&h2, 8, &ref2).unwrap();
        assert!(povm2.completeness_defect() < 1e-12);
        assert!(povm2.positivity_defect() < 1e-12);
    }

    #[test]
    fn rejects_too_few_bins() {
        let h = qubit_h().copies(3).unwrap();
        let r = DensityMatrix::maximally_mixed(8);
        let err = PhasePovm::new(&h, 3, &r).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("need at least 4"), "{msg}");
    }

    #[test]
    fn calibrated_mean_is_zero_on_reference() {
        let h = qubit_h().copies(2).unwrap();
        let plus2 = tensor_power(&DensityMatrix::plus_state(), 2).unwrap();
        let povm = PhasePovm::new(&h, 8, &plus2).unwrap();
        let mean = povm.distribution(&plus2).unwrap().circular_mean();
        assert!(wrap_time(mean, h.period()).abs() < 1e-10, "mean {mean}");
    }

    #[test]
    fn bin_covariance_is_exact() {
        let h = qubit_h().copies(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kappa = DensityMatrix::from_valid(linalg::random_density_matrix(4, &mut rng));
        let povm = PhasePovm::new(&h, 8, &kappa).unwrap();
        let base = povm.distribution(&kappa).unwrap();
        for j in [1usize, 3, 7] {
            let tau = j as f64 * h.period() / 8.0;
            let shifted_state = time_evolve(&kappa, &h, tau).unwrap();
            let shifted = povm.distribution(&shifted_state).unwrap();
            let expected = base.shifted_bins(j);
            for k in 0..8 {
                assert!(
                    (shifted.probs()[k] - expected.probs()[k]).abs() < 1e-13,
                    "bin {k} shift {j}"
                );
            }
        }
    }

    #[test]
    fn mean_shifts_with_input_phase() {
        let h = qubit_h();
        let plus = DensityMatrix::plus_state();
        let povm = PhasePovm::new(&h, 16, &plus).unwrap();
        let base_mean = povm.distribution(&plus).unwrap().circular_mean();
        for j in [2usize, 5, 11] {
            let tau = j as f64 * h.period() / 16.0;
            let shifted = time_evolve(&plus, &h, tau).unwrap();
            let mean = povm.distribution(&shifted).unwrap().circular_mean();
            let diff = wrap_time(mean - base_mean - tau, h.period());
            assert!(diff.abs() < 1e-9, "shift {j}: residual {diff}");
        }
    }

    #[test]
    fn incoherent_input_gives_uniform_distribution() {
        let h = qubit_h();
        let gibbs = crate::thermo::gibbs_state(&h, 1.0).unwrap();
        let povm = PhasePovm::with_origin(&h, 8, 0.0).unwrap();
        let dist = povm.distribution(&gibbs).unwrap();
        for &p in dist.probs() {
            assert!((p - 1.0 / 8.0).abs() < 1e-13);
        }
        // Maximal circular variance: equals the uniform benchmark.
        let uniform = EstimatorDistribution::new(h.period(), vec![1.0 / 8.0; 8], 0.0).unwrap();
        assert!((dist.circular_variance() - uniform.circular_variance()).abs() < 1e-12);
    }

    #[test]
    fn failure_probability_below_one_for_coherent_states() {
        let h = qubit_h();
        let plus = DensityMatrix::plus_state();
        let povm = PhasePovm::new(&h, 4, &plus).unwrap();
        let dist = povm.distribution(&plus).unwrap();
        assert!(dist.failure_prob() < 1e-12); // |+⟩ lies in the span of |ê_E⟩
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mixed = DensityMatrix::from_valid(linalg::random_density_matrix(2, &mut rng));
        let d2 = povm.distribution(&mixed).unwrap();
        assert!(d2.failure_prob() < 1.0);
    }

    #[test]
    fn iid_path_matches_explicit_povm() {
        let h = qubit_h();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in [1usize, 2, 3] {
            let rho = DensityMatrix::from_valid(linalg::random_density_matrix(2, &mut rng));
            let hm = h.copies(m).unwrap();
            let rm = tensor_power(&rho, m).unwrap();
            let bins = 2 * m + 2;
            let explicit = PhasePovm::new(&hm, bins, &rm)
                .unwrap()
                .distribution(&rm)
                .unwrap();
            let fast = iid_estimator_distribution(&rho, &h, m, bins).unwrap();
            assert!((explicit.failure_prob() - fast.failure_prob()).abs() < 1e-11);
            for k in 0..bins {
                assert!(
                    (explicit.probs()[k] - fast.probs()[k]).abs() < 1e-10,
                    "m={m} k={k}: {} vs {}",
                    explicit.probs()[k],
                    fast.probs()[k]
                );
            }
        }
    }

    #[test]
    fn variance_decreases_with_copies() {
        let h = qubit_h();
        let plus = DensityMatrix::plus_state();
        let v4 = iid_estimator_distribution(&plus, &h, 4, 128)
            .unwrap()
            .circular_variance();
        let v16 = iid_estimator_distribution(&plus, &h, 16, 128)
            .unwrap()
            .circular_variance();
        let v64 = iid_estimator_distribution(&plus, &h, 64, 128)
            .unwrap()
            .circular_variance();
        assert!(v16 < v4 / 2.0, "v4 {v4} v16 {v16}");
        assert!(v64 < v16 / 2.0, "v16 {v16} v64 {v64}");
    }
}
