//! Evaluation harness: dataset directories and splits, the line-based
//! solver protocol with built-in and subprocess adapters, concept-sliced
//! reports and the HTTP trial service used for human benchmarking.

pub mod adapter;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod report;
pub mod service;
pub mod split;

pub use error::HarnessError;

use std::path::PathBuf;

/// Environment variable overriding [`DEFAULT_DATA_ROOT`].
pub const DATA_ENV: &str = "CONCEPTPROBE_DATA";
pub const DEFAULT_DATA_ROOT: &str = "data";

pub fn data_root() -> PathBuf {
    std::env::var_os(DATA_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_ROOT))
}
