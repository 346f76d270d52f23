//! Fitting: maximum likelihood, regression, and the bias simulation.

mod bias;
mod dataset;
mod glm;
mod mle;

pub use bias::{bias_simulation, BiasConfig, BiasRow, Truth};
pub use dataset::Dataset;
pub use glm::{glm_fit, glm_predict, GlmConfig, GlmModel, GlmObjective, Standardization, StepRule};
pub use mle::{
    fit_mean, fit_mle, fit_mle_with, FitReport, MleConfig, TraceEntry, BOUNDARY_THRESHOLD,
};
