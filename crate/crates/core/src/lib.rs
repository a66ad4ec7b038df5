//! Bayesian evidence aggregation when a rare hidden failure state can make
//! unanimous evidence less convincing than mixed evidence.
//!
//! - [`model`]: the general failure-state model and exact posteriors
//! - [`presets`]: pot, identity parade, judicial panel and Rabin-Miller models
//! - [`curve`]: peaks, limits and confidence ceilings of posterior curves
//! - [`crypto`]: hardware-fault floor on primality-test false acceptance
//! - [`coin`]: grid posterior for a possibly biased coin
//! - [`oracle`]: rejection-sampling cross-check of the analytic posteriors

pub mod coin;
pub mod crypto;
pub mod curve;
pub mod error;
pub mod model;
pub mod oracle;
pub mod presets;

pub use curve::{CurveMode, PosteriorCurve};
pub use error::{Error, Result};
pub use model::{log_binomial_pmf, posterior, posterior_curve, Evidence, FailureModel, PosteriorResult};
pub use presets::ScenarioId;
