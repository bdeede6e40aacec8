//! JSON wire formats for states, Hamiltonians, channels and solver outcomes.
//!
//! Matrices split into real and imaginary parts: {"dim", "re", "im"}.
//! Unknown keys are rejected everywhere, so configs fail loudly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::QuantumChannel;
use crate::error::{CgpoError, Result};
use crate::feasibility::{FeasStatus, FeasibilityOutcome, FeasibilityProblem, Residuals};
use crate::hamiltonian::HarmonicHamiltonian;
use crate::linalg::CMat;
use crate::state::DensityMatrix;
use crate::thermo::LorenzCurve;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_cmat(m: &CMat) -> Self {
        let dim = m.nrows();
        let re = (0..dim)
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)].re).collect())
            .collect();
        let im = (0..dim)
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)].im).collect())
            .collect();
        Self { dim, re, im }
    }

    pub fn to_cmat(&self) -> Result<CMat> {
        let d = self.dim;
        if self.re.len() != d || self.im.len() != d {
            return Err(CgpoError::InvalidArgument(format!(
                "matrix rows {} / {} do not match dim {d}",
                self.re.len(),
                self.im.len()
            )));
        }
        for row in self.re.iter().chain(self.im.iter()) {
            if row.len() != d {
                return Err(CgpoError::InvalidArgument(
                    "ragged matrix row in JSON".into(),
                ));
            }
        }
        Ok(CMat::from_fn(d, d, |r, c| {
            Complex64::new(self.re[r][c], self.im[r][c])
        }))
    }

    pub fn from_state(state: &DensityMatrix) -> Self {
        Self::from_cmat(state.matrix())
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_cmat()?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianJson {
    pub delta: f64,
    pub levels: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl HamiltonianJson {
    pub fn from_hamiltonian(h: &HarmonicHamiltonian) -> Self {
        Self {
            delta: h.delta(),
            levels: h.levels().to_vec(),
            beta: h.beta_default(),
        }
    }

    pub fn to_hamiltonian(&self) -> Result<HarmonicHamiltonian> {
        let h = HarmonicHamiltonian::new(self.delta, self.levels.clone())?;
        Ok(match self.beta {
            Some(b) => h.with_beta(b),
            None => h,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub choi_re: Vec<Vec<f64>>,
    pub choi_im: Vec<Vec<f64>>,
    pub levels_in: Vec<i64>,
    pub levels_out: Vec<i64>,
    pub delta: f64,
}

impl ChannelJson {
    pub fn from_channel(ch: &QuantumChannel) -> Self {
        let d = ch.choi().nrows();
        Self {
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            choi_re: (0..d)
                .map(|r| (0..d).map(|c| ch.choi()[(r, c)].re).collect())
                .collect(),
            choi_im: (0..d)
                .map(|r| (0..d).map(|c| ch.choi()[(r, c)].im).collect())
                .collect(),
            levels_in: ch.h_in().levels().to_vec(),
            levels_out: ch.h_out().levels().to_vec(),
            delta: ch.h_in().delta(),
        }
    }

    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let d = self.dim_in * self.dim_out;
        let mj = MatrixJson {
            dim: d,
            re: self.choi_re.clone(),
            im: self.choi_im.clone(),
        };
        let h_in = HarmonicHamiltonian::new(self.delta, self.levels_in.clone())?;
        let h_out = HarmonicHamiltonian::new(self.delta, self.levels_out.clone())?;
        QuantumChannel::from_choi(mj.to_cmat()?, h_in, h_out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityProblemJson {
    pub rho_in: MatrixJson,
    pub target: MatrixJson,
    pub hamiltonian: HamiltonianJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian_out: Option<HamiltonianJson>,
    pub beta: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub require_covariance: bool,
    #[serde(default)]
    pub restrict_diagonal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl FeasibilityProblemJson {
    pub fn to_problem(&self) -> Result<FeasibilityProblem> {
        let h = self.hamiltonian.to_hamiltonian()?;
        let mut p = FeasibilityProblem::new(
            self.rho_in.to_state()?,
            self.target.to_state()?,
            &h,
            self.beta,
        )
        .with_epsilon(self.epsilon)
        .with_covariance(self.require_covariance)
        .with_diagonal_restriction(self.restrict_diagonal);
        if let Some(h_out) = &self.hamiltonian_out {
            p = p.with_output_system(&h_out.to_hamiltonian()?);
        }
        if let Some(iters) = self.max_iters {
            p = p.with_max_iters(iters);
        }
        if let Some(tol) = self.tol {
            p = p.with_tol(tol);
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityOutcomeJson {
    pub status: FeasStatus,
    pub iterations: usize,
    pub residuals: Residuals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_verdict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelJson>,
}

impl FeasibilityOutcomeJson {
    pub fn from_outcome(out: &FeasibilityOutcome) -> Self {
        Self {
            status: out.status,
            iterations: out.iterations,
            residuals: out.residuals.clone(),
            oracle_verdict: out.oracle_verdict,
            channel: out.channel.as_ref().map(ChannelJson::from_channel),
        }
    }
}

/// CSV rendering of a Lorenz curve: header plus one x,y pair per row.
pub fn lorenz_curve_csv(curve: &LorenzCurve) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in curve.breakpoints() {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{gibbs_state, lorenz_curve, ClassicalDistribution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn state_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = DensityMatrix::from_valid(crate::linalg::random_density_matrix(3, &mut rng));
        let json = serde_json::to_string(&MatrixJson::from_state(&rho)).unwrap();
        let back: MatrixJson = serde_json::from_str(&json).unwrap();
        let state = back.to_state().unwrap();
        assert!(crate::state::max_entry_distance(&rho, &state) < 1e-15);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = r#"{"delta": 1.0, "levels": [0, 1], "spin": 2}"#;
        assert!(serde_json::from_str::<HamiltonianJson>(bad).is_err());
    }

    #[test]
    fn channel_round_trip() {
        let h = HarmonicHamiltonian::new(3.0f64.ln(), vec![0, 1]).unwrap();
        let ch = crate::feasibility::random_gp_channel(&h, 1.0, 7, false).unwrap();
        let json = serde_json::to_string(&ChannelJson::from_channel(&ch)).unwrap();
        let back: ChannelJson = serde_json::from_str(&json).unwrap();
        let ch2 = back.to_channel().unwrap();
        assert!(crate::linalg::max_abs(&(ch.choi() - ch2.choi())) < 1e-15);
    }

    #[test]
    fn lorenz_csv_rows() {
        let h = HarmonicHamiltonian::new(3.0f64.ln(), vec![0, 1]).unwrap();
        let q = ClassicalDistribution::from_state_diagonal(&gibbs_state(&h, 1.0).unwrap()).unwrap();
        let p = ClassicalDistribution::new(vec![1.0, 0.0]).unwrap();
        let csv = lorenz_curve_csv(&lorenz_curve(&p, &q).unwrap());
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines[0], "x,y");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with('1'));
    }
}
