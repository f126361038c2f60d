//! Practical EGL and its indirect counterpart IGL.
//!
//! Both loops share everything except the surrogate: EGL trains a gradient
//! network on pairwise residuals, IGL trains a value network and follows its
//! input gradient.

use std::collections::VecDeque;

use crate::gradnet::{
    train_gradient_model_mapped, train_value_model, GradientModel, PairLossConfig, ValueModel,
};
use crate::mappings::{shrink_trust_region, InputMap, OutputMap, TrustRegion};
use crate::objectives::BudgetedObjective;
use crate::rng::{stream, RngStream, StreamRng};
use crate::{Error, ReplayBuffer, Result, RunEvent, RunRecord};

use super::config::{EglConfig, ExploreMode};
use super::explore::{explore_ball, explore_cone, explore_half_half, Proposal};

enum Surrogate {
    Gradient(GradientModel),
    Value(ValueModel),
}

impl Surrogate {
    fn train(
        &mut self,
        rb: &ReplayBuffer,
        cfg: &PairLossConfig,
        om: &OutputMap,
        rng: &mut StreamRng,
    ) -> Result<()> {
        match self {
            Surrogate::Gradient(model) => {
                train_gradient_model_mapped(model, rb, cfg, |y| om.forward(y), rng)?
            }
            Surrogate::Value(model) => train_value_model(model, rb, cfg, |y| om.forward(y), rng)?,
        };
        Ok(())
    }

    fn direction(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Surrogate::Gradient(model) => model.predict(x),
            Surrogate::Value(model) => model.input_gradient(x),
        }
    }
}

/// Runs practical EGL from `x0` until the objective's budget is spent.
///
/// The budget of `obj` governs; `cfg.budget` is only used by callers that
/// construct the objective.
pub fn run_egl(
    cfg: &EglConfig,
    obj: &mut BudgetedObjective,
    x0: &[f64],
    seed: u64,
) -> Result<RunRecord> {
    run(cfg, obj, x0, seed, false)
}

/// Runs IGL: the EGL loop with a value surrogate in place of the gradient one.
pub fn run_igl(
    cfg: &EglConfig,
    obj: &mut BudgetedObjective,
    x0: &[f64],
    seed: u64,
) -> Result<RunRecord> {
    run(cfg, obj, x0, seed, true)
}

fn run(
    cfg: &EglConfig,
    obj: &mut BudgetedObjective,
    x0: &[f64],
    seed: u64,
    value_surrogate: bool,
) -> Result<RunRecord> {
    let n = obj.dim();
    cfg.validate(n)?;
    let (x0, _) = obj.objective().project(x0)?;
    let mut init = stream(seed, RngStream::WeightInit);
    let surrogate = if value_surrogate {
        Surrogate::Value(ValueModel::new(
            cfg.network.network(n, 1),
            cfg.g_lr,
            &mut init,
        )?)
    } else {
        Surrogate::Gradient(GradientModel::new(
            cfg.network.network(n, n),
            cfg.g_lr,
            &mut init,
        )?)
    };
    let mut state = Loop::new(cfg, obj.bounds().to_vec(), surrogate, seed)?;
    match state.drive(obj, &x0) {
        Ok(()) | Err(Error::BudgetExhausted { .. }) => Ok(obj.snapshot(seed)),
        Err(e) => Err(e),
    }
}

struct Loop<'a> {
    cfg: &'a EglConfig,
    pair_cfg: PairLossConfig,
    omega: Vec<(f64, f64)>,
    map: InputMap,
    om: OutputMap,
    rb: ReplayBuffer,
    surrogate: Surrogate,
    epsilon: f64,
    /// Current candidate in mapped coordinates.
    x: Vec<f64>,
    direction: Vec<f64>,
    recent: VecDeque<f64>,
    misses: usize,
    iters_in_region: usize,
    iteration: usize,
    explore_rng: StreamRng,
    train_rng: StreamRng,
}

impl<'a> Loop<'a> {
    fn new(
        cfg: &'a EglConfig,
        omega: Vec<(f64, f64)>,
        surrogate: Surrogate,
        seed: u64,
    ) -> Result<Self> {
        let n = omega.len();
        let map = InputMap::new(TrustRegion::new(omega.clone())?);
        Ok(Self {
            cfg,
            pair_cfg: cfg.pair_loss(n),
            omega,
            map,
            om: OutputMap::new(cfg.om_lr),
            rb: ReplayBuffer::new(cfg.replay_l),
            surrogate,
            epsilon: cfg.epsilon_for(n),
            x: vec![0.0; n],
            direction: vec![0.0; n],
            recent: VecDeque::with_capacity(cfg.n_max + 1),
            misses: 0,
            iters_in_region: 0,
            iteration: 0,
            explore_rng: stream(seed, RngStream::Exploration),
            train_rng: stream(seed, RngStream::Minibatch),
        })
    }

    fn drive(&mut self, obj: &mut BudgetedObjective, x0: &[f64]) -> Result<()> {
        let y0 = obj.evaluate(x0)?;
        self.x = self.to_mapped(obj, x0);
        self.recent.push_back(y0);
        for _ in 0..self.cfg.warmup_factor {
            self.explore(obj)?;
            self.learn()?;
        }
        loop {
            self.explore(obj)?;
            self.learn()?;
            self.descend(obj)?;
        }
    }

    fn to_mapped(&self, obj: &mut BudgetedObjective, x: &[f64]) -> Vec<f64> {
        let (xt, clamped) = self.map.forward_with_clamps(x);
        if !clamped.is_empty() {
            obj.log(RunEvent::InputClamp {
                iteration: self.iteration,
                coordinates: clamped.len(),
            });
        }
        xt
    }

    fn propose(&mut self, obj: &mut BudgetedObjective) -> Proposal {
        let (m, eps, phi) = (self.cfg.m, self.epsilon, self.cfg.phi);
        let rng = &mut self.explore_rng;
        match self.cfg.explore_mode {
            ExploreMode::Ball => explore_ball(&self.x, eps, m, rng),
            ExploreMode::Cone => match explore_cone(&self.x, eps, m, &self.direction, phi, rng) {
                Ok(p) => p,
                Err(_) => {
                    obj.log(RunEvent::ConeFallback {
                        iteration: self.iteration,
                    });
                    explore_ball(&self.x, eps, m, rng)
                }
            },
            ExploreMode::HalfHalf => explore_half_half(&self.x, eps, m, &self.direction, phi, rng),
        }
    }

    fn explore(&mut self, obj: &mut BudgetedObjective) -> Result<()> {
        let proposal = self.propose(obj);
        let raw: Vec<Vec<f64>> = proposal
            .points
            .iter()
            .map(|p| self.map.inverse(p))
            .collect();
        let ys = obj.evaluate_batch(&raw)?;
        let complete = ys.len() == proposal.len();
        self.rb.push_batch(proposal.into_batch(&ys)?);
        if complete {
            Ok(())
        } else {
            Err(Error::BudgetExhausted {
                budget: obj.budget(),
            })
        }
    }

    fn learn(&mut self) -> Result<()> {
        let ys: Vec<f64> = self.rb.points().map(|p| p.y).collect();
        self.om.fit(&ys)?;
        self.surrogate
            .train(&self.rb, &self.pair_cfg, &self.om, &mut self.train_rng)
    }

    fn descend(&mut self, obj: &mut BudgetedObjective) -> Result<()> {
        let g = self.surrogate.direction(&self.x)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("surrogate gradient".into()));
        }
        let limit = self.cfg.step_clamp;
        let mut clamped = false;
        let next: Vec<f64> = self
            .x
            .iter()
            .zip(&g)
            .map(|(x, g)| {
                let v = x - self.cfg.alpha * g;
                clamped |= v.abs() > limit;
                v.clamp(-limit, limit)
            })
            .collect();
        if clamped {
            obj.log(RunEvent::StepClamp {
                iteration: self.iteration,
            });
        }
        let y = obj.evaluate(&self.map.inverse(&next))?;

        // Non-improvement against the running mean of recent candidates.
        let mean = self.recent.iter().sum::<f64>() / self.recent.len() as f64;
        if y > mean {
            self.misses += 1;
        } else {
            self.misses = 0;
        }
        self.recent.push_back(y);
        while self.recent.len() > self.cfg.n_max.max(1) {
            self.recent.pop_front();
        }

        self.x = next;
        self.direction = g;
        self.iteration += 1;
        self.iters_in_region += 1;
        if self.misses >= self.cfg.n_max && self.iters_in_region >= self.cfg.n_min {
            self.shrink(obj);
        }
        Ok(())
    }

    fn shrink(&mut self, obj: &mut BudgetedObjective) {
        let Some((x_best, y_best)) = obj.best().map(|(x, y)| (x.to_vec(), y)) else {
            return;
        };
        let region =
            shrink_trust_region(&self.map.region, &x_best, self.cfg.gamma_alpha, &self.omega);
        let old = std::mem::replace(&mut self.map, InputMap::new(region));
        for batch in self.rb.batches_mut() {
            for p in &mut batch.points {
                p.x = self.map.forward(&old.inverse(&p.x));
            }
            batch.center = self.map.forward(&old.inverse(&batch.center));
        }
        self.epsilon *= self.cfg.gamma_epsilon;
        self.x = self.to_mapped(obj, &x_best);
        self.recent.clear();
        self.recent.push_back(y_best);
        self.misses = 0;
        self.iters_in_region = 0;
        obj.log(RunEvent::TrustRegionShrink {
            iteration: self.iteration,
            generation: self.map.region.generation as usize,
            widths: self.map.region.widths(),
            epsilon: self.epsilon,
        });
    }
}
