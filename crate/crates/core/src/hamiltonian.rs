//! Harmonic Hamiltonians: diagonal energies whose level spacings are integer
//! multiples of a base unit Δ, so every state is periodic with τ_per = 2π/Δ.

use serde::{Deserialize, Serialize};

use crate::error::{CgpoError, Result};

/// Diagonal Hamiltonian with energies E_i = n_i·Δ for integers n_i.
///
/// When the system has more than one distinct level, the gcd of all pairwise
/// level differences must be 1, i.e. Δ is the maximal spacing unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicHamiltonian {
    delta: f64,
    levels: Vec<i64>,
    beta_default: Option<f64>,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl HarmonicHamiltonian {
    pub fn new(delta: f64, levels: Vec<i64>) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(CgpoError::InvalidHamiltonian(format!(
                "base spacing must be positive and finite, got {delta}"
            )));
        }
        if levels.is_empty() {
            return Err(CgpoError::InvalidHamiltonian("empty level list".into()));
        }
        let mut g = 0i64;
        for i in 0..levels.len() {
            for j in (i + 1)..levels.len() {
                g = gcd(g, levels[i] - levels[j]);
            }
        }
        // g == 0 means a single distinct level; the gcd condition is vacuous.
        if g > 1 {
            return Err(CgpoError::InvalidHamiltonian(format!(
                "level differences share a factor {g}; the spacing unit is not maximal"
            )));
        }
        Ok(Self {
            delta,
            levels,
            beta_default: None,
        })
    }

    /// Hamiltonian with every level degenerate at zero (a label register).
    pub fn trivial(dim: usize, delta: f64) -> Self {
        Self {
            delta,
            levels: vec![0; dim],
            beta_default: None,
        }
    }

    /// Qubit with levels (0, 1): E = (0, Δ).
    pub fn qubit(delta: f64) -> Self {
        Self::new(delta, vec![0, 1]).expect("qubit levels are valid")
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta_default = Some(beta);
        self
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn levels(&self) -> &[i64] {
        &self.levels
    }

    pub fn beta_default(&self) -> Option<f64> {
        self.beta_default
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.levels[i] as f64 * self.delta
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|&n| n as f64 * self.delta).collect()
    }

    /// Shortest common period τ_per = 2π/Δ of time evolution.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.delta
    }

    pub fn level_span(&self) -> i64 {
        let max = self.levels.iter().max().copied().unwrap_or(0);
        let min = self.levels.iter().min().copied().unwrap_or(0);
        max - min
    }

    /// Mode index of the matrix entry |i⟩⟨j|: ω = n_i − n_j.
    pub fn mode_of(&self, i: usize, j: usize) -> i64 {
        self.levels[i] - self.levels[j]
    }

    /// Hamiltonian of a composite system: levels add under tensor embedding.
    ///
    /// Factor ordering matches Kronecker-product index ordering (first factor
    /// varies slowest). All factors must share the same Δ.
    pub fn tensor_sum(factors: &[&HarmonicHamiltonian]) -> Result<Self> {
        if factors.is_empty() {
            return Err(CgpoError::InvalidHamiltonian("no factors".into()));
        }
        let delta = factors[0].delta;
        for f in factors {
            if (f.delta - delta).abs() > 1e-12 * delta.abs() {
                return Err(CgpoError::InvalidHamiltonian(
                    "factors have different base spacings".into(),
                ));
            }
        }
        let mut levels = vec![0i64];
        for f in factors {
            let mut next = Vec::with_capacity(levels.len() * f.dim());
            for &acc in &levels {
                for &n in &f.levels {
                    next.push(acc + n);
                }
            }
            levels = next;
        }
        Ok(Self {
            delta,
            levels,
            beta_default: factors[0].beta_default,
        })
    }

    /// m-fold copy of this Hamiltonian.
    pub fn copies(&self, m: usize) -> Result<Self> {
        let refs: Vec<&HarmonicHamiltonian> = std::iter::repeat(self).take(m.max(1)).collect();
        Self::tensor_sum(&refs)
    }
}

/// Named tensor factorization of a composite system.
#[derive(Debug, Clone)]
pub struct CompositeLabel {
    factors: Vec<(String, HarmonicHamiltonian)>,
}

impl CompositeLabel {
    pub fn new(factors: Vec<(String, HarmonicHamiltonian)>) -> Result<Self> {
        if factors.is_empty() {
            return Err(CgpoError::InvalidArgument("empty composite label".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (name, _) in &factors {
            if !seen.insert(name.clone()) {
                return Err(CgpoError::InvalidArgument(format!(
                    "duplicate subsystem name {name}"
                )));
            }
        }
        Ok(Self { factors })
    }

    /// n copies of one system, named `prefix1..prefixN`.
    pub fn copies(prefix: &str, h: &HarmonicHamiltonian, n: usize) -> Result<Self> {
        Self::new(
            (1..=n)
                .map(|k| (format!("{prefix}{k}"), h.clone()))
                .collect(),
        )
    }

    pub fn factors(&self) -> &[(String, HarmonicHamiltonian)] {
        &self.factors
    }

    pub fn factor_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, h)| h.dim()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|(_, h)| h.dim()).product()
    }

    pub fn total_hamiltonian(&self) -> Result<HarmonicHamiltonian> {
        let refs: Vec<&HarmonicHamiltonian> = self.factors.iter().map(|(_, h)| h).collect();
        HarmonicHamiltonian::tensor_sum(&refs)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| CgpoError::UnknownSubsystem(name.to_string()))
    }
}
