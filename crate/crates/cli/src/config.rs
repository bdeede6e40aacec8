//! Config documents for each subcommand. Unknown keys are rejected so typos
//! fail before any computation starts.

use anyhow::{bail, Context};
use serde::Deserialize;

use cgpo_core::schema::{ChannelJson, FeasibilityProblemJson, HamiltonianJson, MatrixJson};
use cgpo_core::{DensityMatrix, HarmonicHamiltonian};

/// System block; omitted fields fall back to the built-in reference system
/// E = (0, ln 3), β = 1.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default)]
    pub levels: Option<Vec<i64>>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

impl SystemConfig {
    pub fn hamiltonian(&self) -> anyhow::Result<HarmonicHamiltonian> {
        let delta = self.delta.unwrap_or(3.0f64.ln());
        let levels = self.levels.clone().unwrap_or_else(|| vec![0, 1]);
        Ok(HarmonicHamiltonian::new(delta, levels)?)
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(1.0)
    }
}

/// A state given inline as a matrix or by preset name.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Preset(String),
    Inline(MatrixJson),
}

impl StateSpec {
    pub fn resolve(&self) -> anyhow::Result<DensityMatrix> {
        match self {
            StateSpec::Inline(m) => Ok(m.to_state()?),
            StateSpec::Preset(name) => match name.as_str() {
                "paper-qubit-rho" => {
                    Ok(DensityMatrix::diagonal(&[3.0 / 200.0, 197.0 / 200.0])?)
                }
                "plus-state" => Ok(DensityMatrix::plus_state()),
                "maximally-mixed" => Ok(DensityMatrix::maximally_mixed(2)),
                "gibbs" => Ok(cgpo_core::gibbs_state(
                    &HarmonicHamiltonian::new(3.0f64.ln(), vec![0, 1])?,
                    1.0,
                )?),
                other => bail!(
                    "unknown state preset '{other}' (known: paper-qubit-rho, plus-state, \
                     maximally-mixed, gibbs)"
                ),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeEnergyConfig {
    #[serde(default)]
    pub system: SystemConfig,
    pub state: StateSpec,
    /// Extended free-energy orders to evaluate on the diagonal (optional).
    #[serde(default)]
    pub alpha_grid: Vec<f64>,
    #[serde(default)]
    pub include_infinite_orders: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermomajorizeConfig {
    #[serde(default)]
    pub system: SystemConfig,
    pub p: Vec<f64>,
    pub p_prime: Vec<f64>,
    /// Write the two Lorenz curves as CSV next to the report.
    #[serde(default)]
    pub export_curves: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckChannelConfig {
    pub channel: ChannelJson,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Also run the sampled-time covariance cross-check on this grid.
    #[serde(default)]
    pub sampled_grid: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityConfig {
    pub problem: FeasibilityProblemJson,
    /// Embed the witness channel in the report (can be large).
    #[serde(default)]
    pub include_witness: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PhaseEstMode {
    ExactDistribution,
    Sample,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseEstConfig {
    #[serde(default)]
    pub system: SystemConfig,
    pub state: StateSpec,
    pub copies: Vec<usize>,
    pub bins: usize,
    pub mode: PhaseEstMode,
    #[serde(default)]
    pub shots: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub total_copies: usize,
    pub delta: f64,
    pub set_size: usize,
    pub bins: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSpec {
    /// Seed for a random Gibbs-preserving single-copy map, tensored up to
    /// the set size.
    #[serde(default)]
    pub random_gp_seed: Option<u64>,
    /// Or a full channel on the set system.
    #[serde(default)]
    pub channel: Option<ChannelJson>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub system: SystemConfig,
    pub state: StateSpec,
    pub params: PipelineSection,
    pub lambda: LambdaSpec,
    /// Number of grid points for the covariance residual series.
    #[serde(default)]
    pub covariance_grid: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalystConfig {
    #[serde(default)]
    pub system: SystemConfig,
    pub state: StateSpec,
    pub target: StateSpec,
    pub copies: usize,
    pub lambda: LambdaSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceConfig {
    #[serde(default)]
    pub scan_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvertConfig {
    #[serde(default)]
    pub system: SystemConfig,
    pub state: StateSpec,
    pub target: StateSpec,
    #[serde(default)]
    pub compile_copies: Option<usize>,
    #[serde(default)]
    pub bisection_steps: Option<usize>,
}

pub fn parse<T: serde::de::DeserializeOwned>(raw: &str, command: &str) -> anyhow::Result<T> {
    serde_json::from_str(raw).with_context(|| format!("invalid config for {command}"))
}

pub fn hamiltonian_json(h: &HarmonicHamiltonian) -> HamiltonianJson {
    HamiltonianJson::from_hamiltonian(h)
}
