//! Export-forecasting pipeline: ingest annual export series, disaggregate
//! to quarterly levels, train a from-scratch MLP with Adam, score it with
//! the standard forecast-error criteria plus k-fold cross-validation, and
//! emit recursive multi-quarter forecasts.

pub mod commands;
pub mod config;
pub mod disaggregate;
pub mod error;
pub mod evaluate;
pub mod forecast;
pub mod ingest;
pub mod mlp;
pub mod plot;
pub mod preprocess;

pub use config::RunConfig;
pub use error::{Error, Result};
