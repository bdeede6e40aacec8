//! Constructive protocols: covariant phase estimation, the sublinear-rate
//! preparation, the estimation/shift sandwich, and the catalyst compiler.

pub mod catalyst;
pub mod driver;
pub mod pipeline;
pub mod povm;
pub mod sublinear;

pub use catalyst::{build_catalyst, catalyst_dimension, CatalystRun, CatalystState};
pub use driver::{
    correlated_catalytic_convert, single_shot_cgpo_floor, ConvertBudget, ConvertReport,
};
pub use pipeline::{
    minimal_bins, EstimatorWiring, Pipeline, PipelineLayout, PipelineParams, EXACT_MODE_MAX_DIM,
};
pub use povm::{iid_estimator_distribution, wrap_time, EstimatorDistribution, PhasePovm};
pub use sublinear::{sublinear_mean_error, sublinear_prepare};
