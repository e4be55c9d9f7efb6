//! k-inflated negative binomial mixture models for claim frequency,
//! Pareto mixtures for claim severity, and the Bayes premiums built on
//! them.

pub mod data_io;
pub mod distributions;
pub mod error;
pub mod numerics;
pub mod model_selection;
pub mod premium;
mod par;
pub mod regression;

pub use error::{Error, Result};
