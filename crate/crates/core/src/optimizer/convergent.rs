//! Convergent EGL: plain-coordinate descent with a sufficient-decrease test
//! that decays the step size and sampling radius together.

use crate::gradnet::{ls_mean_gradient, train_gradient_model, uniform_in_ball, GradientModel};
use crate::objectives::BudgetedObjective;
use crate::rng::{stream, RngStream};
use crate::{
    Error, EvalPoint, ExplorationBatch, PointKind, ReplayBuffer, Result, RunEvent, RunRecord,
};

use super::config::{ConvergentEglConfig, GradientSource, SUFFICIENT_DECREASE};

/// Result of a convergent EGL run, with the final iterate and step parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergentRun {
    pub record: RunRecord,
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// False when the budget ran out before `epsilon` fell to `epsilon_bar`.
    pub converged: bool,
}

/// Runs until `epsilon ≤ epsilon_bar` or the budget is spent.
///
/// Each iteration samples a batch in the Euclidean `epsilon`-ball around the
/// iterate, estimates the mean-gradient, and tries `x - alpha·g`. A step that
/// fails the sufficient-decrease test is discarded and both `alpha` and
/// `epsilon` shrink.
pub fn run_convergent_egl(
    cfg: &ConvergentEglConfig,
    obj: &mut BudgetedObjective,
    x0: &[f64],
    source: GradientSource,
    seed: u64,
) -> Result<ConvergentRun> {
    let n = obj.dim();
    cfg.validate(n)?;
    let bounds = obj.bounds().to_vec();
    let clamp = |x: Vec<f64>| -> Vec<f64> {
        x.into_iter()
            .zip(&bounds)
            .map(|(v, (l, u))| v.clamp(*l, *u))
            .collect()
    };
    let (mut x, _) = obj.objective().project(x0)?;
    let mut explore_rng = stream(seed, RngStream::Exploration);
    let mut train_rng = stream(seed, RngStream::Minibatch);
    let mut model = match source {
        GradientSource::LeastSquares => None,
        GradientSource::Network => {
            let mut init = stream(seed, RngStream::WeightInit);
            Some(GradientModel::new(
                cfg.network.network(n, n),
                cfg.trainer.learning_rate,
                &mut init,
            )?)
        }
    };
    let mut rb = ReplayBuffer::new(cfg.replay_l);
    let (mut alpha, mut epsilon) = (cfg.alpha, cfg.epsilon);
    let mut iterations = 0;
    let m = cfg.batch_size(n);

    let mut outcome = |obj: &mut BudgetedObjective,
                       x: &mut Vec<f64>,
                       f_x: &mut f64,
                       alpha: &mut f64,
                       epsilon: &mut f64|
     -> Result<()> {
        while *epsilon > cfg.epsilon_bar {
            let points: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let d = uniform_in_ball(n, *epsilon, &mut explore_rng);
                    // Offsets that leave the domain are mirrored through the
                    // iterate, so batches at a face stay poised.
                    let mirrored = x
                        .iter()
                        .zip(d)
                        .zip(&bounds)
                        .map(|((a, d), (l, u))| {
                            if a + d < *l || a + d > *u {
                                a - d
                            } else {
                                a + d
                            }
                        })
                        .collect();
                    clamp(mirrored)
                })
                .collect();
            let ys = obj.evaluate_batch(&points)?;
            if ys.len() < m {
                return Err(Error::BudgetExhausted {
                    budget: obj.budget(),
                });
            }
            let mut batch = ExplorationBatch::new(x.clone(), *epsilon);
            for (p, y) in points.into_iter().zip(ys) {
                batch.push(EvalPoint::new(p, y)?, PointKind::Ball);
            }
            let g = match model.as_mut() {
                None => ls_mean_gradient(&batch)?.g_mse,
                Some(model) => {
                    rb.push_batch(batch);
                    train_gradient_model(model, &rb, &cfg.trainer, &mut train_rng)?;
                    model.predict(x)?
                }
            };
            let candidate = clamp(x.iter().zip(&g).map(|(a, g)| a - *alpha * g).collect());
            let f_new = obj.evaluate(&candidate)?;
            let passed = f_new <= *f_x - SUFFICIENT_DECREASE * *epsilon * *epsilon / *alpha;
            obj.log(RunEvent::SufficientDecrease {
                iteration: iterations,
                f_old: *f_x,
                f_new,
                epsilon: *epsilon,
                alpha: *alpha,
                passed,
            });
            if passed {
                *x = candidate;
                *f_x = f_new;
            } else {
                *epsilon *= cfg.gamma_alpha * cfg.gamma_epsilon;
                *alpha *= cfg.gamma_alpha;
            }
            iterations += 1;
        }
        Ok(())
    };

    let mut f_x = f64::INFINITY;
    let result = obj.evaluate(&x).and_then(|f0| {
        f_x = f0;
        outcome(obj, &mut x, &mut f_x, &mut alpha, &mut epsilon)
    });
    let converged = match result {
        Ok(()) => true,
        Err(Error::BudgetExhausted { .. }) => false,
        Err(e) => return Err(e),
    };
    Ok(ConvergentRun {
        record: obj.snapshot(seed),
        x_final: x,
        f_final: f_x,
        alpha,
        epsilon,
        iterations,
        converged,
    })
}
