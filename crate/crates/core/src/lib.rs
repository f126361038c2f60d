//! Explicit gradient learning for black-box optimization.
//!
//! The crate learns a surrogate of the objective's *mean-gradient* from pairs of
//! sampled evaluations and descends it inside shrinking trust regions. Inputs are
//! mapped through a per-region `arctanh` expansion and outputs through a robust
//! quantile scaling followed by a log-squash, so the surrogate always trains on
//! well-conditioned data.
//!
//! Layout:
//!
//! * [`sample`], [`replay`], [`record`], [`rng`]: shared domain types.
//! * [`objectives`]: benchmark functions and the budget-enforcing evaluator.
//! * [`nn`]: a small from-scratch network stack (dense, residual, spline embedding, Adam).
//! * [`gradnet`]: closed-form least-squares mean-gradient and the neural pair-loss trainer.
//! * [`mappings`]: input/output maps, trust regions and gradient recovery.
//! * [`optimizer`]: practical EGL, convergent EGL, IGL and the exploration samplers.
//! * [`baselines`]: Nelder–Mead and random search.
//!
//! ```no_run
//! use egl::objectives::{make_benchmark, BudgetedObjective};
//! use egl::optimizer::{run_egl, EglConfig};
//!
//! let obj = make_benchmark("sphere", 2, 1).unwrap();
//! let mut budgeted = BudgetedObjective::new(obj, 5_000);
//! let cfg = EglConfig::for_dim(2);
//! let record = run_egl(&cfg, &mut budgeted, &[3.0, -2.0], 7).unwrap();
//! println!("best value {}", record.y_best);
//! ```

pub mod baselines;
mod error;
pub mod gradnet;
pub mod mappings;
pub mod nn;
pub mod objectives;
pub mod optimizer;
pub mod record;
pub mod replay;
pub mod rng;
pub mod sample;

pub use error::{Error, Result};
pub use record::{RunEvent, RunRecord, TracePoint};
pub use replay::ReplayBuffer;
pub use rng::{RngStream, StreamRng};
pub use sample::{EvalPoint, ExplorationBatch, PointKind};
