//! Benchmark harness for the `egl` optimizers.
//!
//! A suite runs every (problem, optimizer, seed) cell under a fixed
//! evaluation budget, then scores runs against the best value any run found
//! on the same problem. Results land on disk as per-run traces, a summary
//! table and seed-averaged convergence curves.

pub mod config;
pub mod metrics;
pub mod suite;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Optimizer(#[from] egl::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

pub use config::{race_config, OptimizerKind, OptimizerSpec, Resolved, SuiteConfig};
pub use metrics::{scaled_distance_curve, success};
pub use suite::{run_suite, summarize_dir, write_results, SuiteResult, SummaryRow};
