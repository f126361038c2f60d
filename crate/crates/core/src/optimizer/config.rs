use serde::{Deserialize, Serialize};

use crate::gradnet::PairLossConfig;
use crate::nn::{Activation, NetworkSpec, SplineSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExploreMode {
    /// Uniform in the box `x + ε·U[-1, 1]ⁿ`.
    #[default]
    Ball,
    /// Ball intersected with a cone around the previous descent direction.
    Cone,
    /// Half cone points, half ball points.
    HalfHalf,
}

/// Shape of the surrogate network; input and output sizes come from the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateSpec {
    pub width: usize,
    pub res_blocks: usize,
    pub activation: Activation,
    /// Splines per input coordinate; 0 disables the spline embedding.
    pub spline_per_input: usize,
    pub spline_knots: usize,
}

impl Default for SurrogateSpec {
    fn default() -> Self {
        Self {
            width: 64,
            res_blocks: 2,
            activation: Activation::Relu,
            spline_per_input: 8,
            spline_knots: 21,
        }
    }
}

impl SurrogateSpec {
    pub fn network(&self, input_dim: usize, output_dim: usize) -> NetworkSpec {
        NetworkSpec {
            input_dim,
            output_dim,
            hidden: vec![self.width],
            res_blocks: self.res_blocks,
            activation: self.activation,
            spline: (self.spline_per_input > 0).then_some(SplineSpec {
                knots: self.spline_knots,
                per_input: self.spline_per_input,
            }),
        }
    }
}

/// Settings of the practical EGL loop (and of IGL, which shares it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EglConfig {
    pub m: usize,
    pub warmup_factor: usize,
    pub budget: usize,
    pub alpha: f64,
    /// Exploration radius in mapped coordinates; `None` means `0.1·√n`.
    pub epsilon: Option<f64>,
    pub gamma_alpha: f64,
    pub gamma_epsilon: f64,
    pub n_max: usize,
    pub n_min: usize,
    pub replay_l: usize,
    pub explore_mode: ExploreMode,
    pub phi: f64,
    pub perturbation_p: f64,
    pub minibatch_pairs: usize,
    pub n_minibatches: usize,
    pub g_lr: f64,
    pub om_lr: f64,
    /// Candidates are kept inside `‖x̃‖_∞ ≤ step_clamp`.
    pub step_clamp: f64,
    pub network: SurrogateSpec,
}

impl Default for EglConfig {
    fn default() -> Self {
        Self {
            m: 64,
            warmup_factor: 5,
            budget: 150_000,
            alpha: 1e-2,
            epsilon: None,
            gamma_alpha: 0.9,
            gamma_epsilon: 0.97,
            n_max: 10,
            n_min: 40,
            replay_l: 32,
            explore_mode: ExploreMode::Ball,
            phi: 2.0 * std::f64::consts::PI / 3.0,
            perturbation_p: 0.0,
            minibatch_pairs: 1024,
            n_minibatches: 60,
            g_lr: 1e-3,
            om_lr: 0.1,
            step_clamp: 10.0,
            network: SurrogateSpec::default(),
        }
    }
}

impl EglConfig {
    pub fn for_dim(n: usize) -> Self {
        Self {
            epsilon: Some(0.1 * (n as f64).sqrt()),
            ..Self::default()
        }
    }

    /// A cheaper surrogate and trainer for wide sweeps on small machines:
    /// width 32, one residual block, 256 pairs × 20 minibatches per step.
    pub fn light(n: usize) -> Self {
        Self {
            minibatch_pairs: 256,
            n_minibatches: 20,
            network: SurrogateSpec {
                width: 32,
                res_blocks: 1,
                ..SurrogateSpec::default()
            },
            ..Self::for_dim(n)
        }
    }

    pub fn epsilon_for(&self, n: usize) -> f64 {
        self.epsilon.unwrap_or(0.1 * (n as f64).sqrt())
    }

    /// Evaluations spent before the first descent iteration: the start point
    /// plus `warmup_factor` exploration batches.
    pub fn warmup_evaluations(&self) -> usize {
        1 + self.warmup_factor * self.m
    }

    pub fn pair_loss(&self, n: usize) -> PairLossConfig {
        PairLossConfig {
            epsilon: self.epsilon_for(n),
            perturbation_p: self.perturbation_p,
            minibatch_pairs: self.minibatch_pairs,
            n_minibatches: self.n_minibatches,
            learning_rate: self.g_lr,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.m < 2 {
            return bad("m must be at least 2");
        }
        if !(self.gamma_alpha > 0.0 && self.gamma_alpha < 1.0) {
            return bad("gamma_alpha must lie in (0, 1)");
        }
        if !(self.gamma_epsilon > 0.0 && self.gamma_epsilon < 1.0) {
            return bad("gamma_epsilon must lie in (0, 1)");
        }
        if !(self.alpha > 0.0) || !(self.epsilon_for(n) > 0.0) {
            return bad("alpha and epsilon must be positive");
        }
        if !(self.phi > 0.0 && self.phi < std::f64::consts::PI) {
            return bad("phi must lie in (0, pi)");
        }
        if self.replay_l == 0 || self.budget == 0 {
            return bad("replay_l and budget must be positive");
        }
        if !(self.om_lr > 0.0 && self.om_lr <= 1.0) {
            return bad("om_lr must lie in (0, 1]");
        }
        if !(self.step_clamp > 0.0) {
            return bad("step_clamp must be positive");
        }
        self.pair_loss(n).validate()
    }
}

/// Where convergent EGL takes its gradient estimates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientSource {
    /// Least squares over a fresh Euclidean-ball batch at every iterate.
    #[default]
    LeastSquares,
    /// A gradient network trained on a replay buffer of such batches.
    Network,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergentEglConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma_alpha: f64,
    pub gamma_epsilon: f64,
    pub epsilon_bar: f64,
    /// Points per batch; `None` means `2(n + 1)`.
    pub m: Option<usize>,
    pub replay_l: usize,
    pub trainer: PairLossConfig,
    pub network: SurrogateSpec,
}

/// Factor of the sufficient-decrease test `f_new ≤ f_old - c·ε²/α`.
pub const SUFFICIENT_DECREASE: f64 = 2.25;

impl Default for ConvergentEglConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            epsilon: 0.1,
            gamma_alpha: 0.9,
            gamma_epsilon: 0.9,
            epsilon_bar: 1e-3,
            m: None,
            replay_l: 4,
            trainer: PairLossConfig {
                epsilon: 0.1,
                perturbation_p: 0.0,
                minibatch_pairs: 256,
                n_minibatches: 40,
                learning_rate: 1e-3,
            },
            network: SurrogateSpec::default(),
        }
    }
}

impl ConvergentEglConfig {
    pub fn batch_size(&self, n: usize) -> usize {
        self.m.unwrap_or(2 * (n + 1))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.alpha > 0.0 && self.epsilon > 0.0 && self.epsilon_bar > 0.0) {
            return bad("alpha, epsilon and epsilon_bar must be positive");
        }
        if !(self.gamma_alpha > 0.0 && self.gamma_alpha < 1.0) {
            return bad("gamma_alpha must lie in (0, 1)");
        }
        if !(self.gamma_epsilon > 0.0 && self.gamma_epsilon < 1.0) {
            return bad("gamma_epsilon must lie in (0, 1)");
        }
        if self.batch_size(n) < n + 1 {
            return bad("a poised batch needs at least n + 1 points");
        }
        Ok(())
    }
}
