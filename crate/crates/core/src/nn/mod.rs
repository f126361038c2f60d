//! Minimal neural network stack: batched dense and residual layers, a
//! per-coordinate spline embedding, reverse-mode gradients and Adam.

mod adam;
pub mod mat;
mod network;
pub mod spline;

pub use adam::{Adam, AdamConfig};
pub use mat::Mat;
pub use network::{Activation, Network, NetworkSpec, SplineSpec, Tape};
