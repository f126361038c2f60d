//! Descent loops and exploration strategies.

mod config;
mod convergent;
mod egl;
pub mod explore;

pub use config::{
    ConvergentEglConfig, EglConfig, ExploreMode, GradientSource, SurrogateSpec, SUFFICIENT_DECREASE,
};
pub use convergent::{run_convergent_egl, ConvergentRun};
pub use egl::{run_egl, run_igl};
pub use explore::{explore_ball, explore_cone, explore_half_half, Proposal};
