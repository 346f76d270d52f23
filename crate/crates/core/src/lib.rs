//! The continuous categorical distribution: an exponential family on the
//! closed simplex with density proportional to `prod_i lambda_i^{x_i}`.

pub mod cb;
pub mod distribution;
pub mod divdiff;
pub mod error;
pub mod inference;
pub mod io;
pub mod normalizer;
pub mod params;
pub mod samplers;

pub use distribution::{
    covariance, kl_divergence, log_mgf, log_pdf, log_pdf_lambda, mean, mgf, mode,
};
pub use error::{Error, Result};
pub use normalizer::{log_normalizer, log_normalizer_lambda, LogNormalizer};
pub use params::{mean_to_natural, natural_to_mean, MeanParams, NaturalParams, SimplexPoint};
