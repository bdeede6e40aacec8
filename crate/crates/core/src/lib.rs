//! Numerical toolkit for covariant Gibbs-preserving quantum operations:
//! free-energy monotones, thermomajorization, channel property checkers, a
//! convex-feasibility search for (covariant) Gibbs-preserving channels, a
//! covariant phase-estimation/phase-shift sandwich, and a compiler from
//! marginal many-copy conversions to correlated-catalyst conversions.

pub mod channel;
pub mod error;
pub mod feasibility;
pub mod hamiltonian;
pub mod linalg;
pub mod protocol;
pub mod reference_case;
pub mod schema;
pub mod state;
pub mod thermo;

pub use channel::{
    apply, channel_power, compose, is_covariant, is_covariant_sampled, is_cptp, is_incoherent,
    is_gibbs_preserving, kraus_from_choi, mode_decompose, tensor_channels, CheckReport,
    ModeDecomposition, QuantumChannel,
};
pub use error::{CgpoError, Result};
pub use feasibility::{
    blackwell_oracle, find_cgpo, find_gpo, random_gp_channel, random_gp_stochastic, FeasStatus,
    FeasibilityOutcome, FeasibilityProblem, Residuals,
};
pub use hamiltonian::{CompositeLabel, HarmonicHamiltonian};
pub use linalg::{CMat, CVec};
pub use protocol::{
    build_catalyst, catalyst_dimension, correlated_catalytic_convert, iid_estimator_distribution,
    single_shot_cgpo_floor, sublinear_mean_error, sublinear_prepare, CatalystRun, CatalystState,
    ConvertBudget, ConvertReport, EstimatorDistribution, EstimatorWiring, PhasePovm, Pipeline,
    PipelineLayout, PipelineParams,
};
pub use state::{
    bures_distance, dim_budget, fidelity, partial_trace, tensor, tensor_power, time_evolve,
    trace_distance, DensityMatrix,
};
pub use reference_case::{run_witness_checks, ReferenceCase, WitnessReport};
pub use thermo::{
    extended_free_energy, free_energy, gibbs_probs, gibbs_state, lorenz_curve, relative_entropy,
    renyi_divergence, thermomajorizes, Alpha, ClassicalDistribution, LorenzCurve,
};
