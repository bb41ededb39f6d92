//! Hybrid CNN + Transformer default-probability model for tabular credit data,
//! with the data pipeline, training loop, evaluation metrics and experiment
//! runners around it.

pub mod cli;
pub mod data;
pub mod error;
pub mod importance;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{Error, ErrorKind, Result};
