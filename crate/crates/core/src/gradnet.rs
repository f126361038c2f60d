//! Mean-gradient estimation.
//!
//! The mean-gradient around a point is the vector that best explains the value
//! differences of nearby samples through first-order Taylor terms. It has a
//! closed-form least-squares solution over a single batch, and a learned form
//! where a network `g_θ` is trained on the same pairwise residuals across the
//! replay buffer.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::nn::{Adam, AdamConfig, Mat, Network, NetworkSpec};
use crate::{Error, EvalPoint, ExplorationBatch, ReplayBuffer, Result};

/// Relative singular-value cutoff used for every rank decision.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairLossConfig {
    pub epsilon: f64,
    pub perturbation_p: f64,
    pub minibatch_pairs: usize,
    pub n_minibatches: usize,
    pub learning_rate: f64,
}

impl PairLossConfig {
    pub fn for_dim(n: usize) -> Self {
        Self {
            epsilon: 0.1 * (n as f64).sqrt(),
            perturbation_p: 0.0,
            minibatch_pairs: 1024,
            n_minibatches: 60,
            learning_rate: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if self.perturbation_p < 0.0
            || (self.perturbation_p > 0.0 && self.perturbation_p >= self.epsilon)
        {
            return Err(Error::InvalidConfig(
                "perturbation radius must satisfy 0 <= p < epsilon".into(),
            ));
        }
        if self.minibatch_pairs == 0 {
            return Err(Error::InvalidConfig(
                "minibatch size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsSolution {
    pub g_mse: Vec<f64>,
    pub design_rank: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LsSolver {
    #[default]
    Qr,
    Svd,
}

/// Rows `x_j - x_i` and targets `y_j - y_i` over unordered pairs `i < j`.
///
/// Ordered pairs `(i, j)` and `(j, i)` give the same equation up to sign, so
/// the unordered system has the same least-squares solution.
fn difference_system(points: &[EvalPoint]) -> (DMatrix<f64>, DVector<f64>) {
    let n = points.first().map_or(0, EvalPoint::dim);
    let m = points.len();
    let rows = m * m.saturating_sub(1) / 2;
    let mut x = DMatrix::zeros(rows, n);
    let mut d = DVector::zeros(rows);
    let mut r = 0;
    for i in 0..m {
        for j in i + 1..m {
            for c in 0..n {
                x[(r, c)] = points[j].x[c] - points[i].x[c];
            }
            d[r] = points[j].y - points[i].y;
            r += 1;
        }
    }
    (x, d)
}

fn numerical_rank(x: &DMatrix<f64>) -> usize {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0;
    }
    let sv = x.singular_values();
    let max = sv.max();
    if !(max > 0.0) {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_CUTOFF * max).count()
}

/// Whether the pairwise differences of `points` span the whole space.
pub fn is_poised(points: &[Vec<f64>]) -> bool {
    let Some(first) = points.first() else {
        return false;
    };
    let n = first.len();
    if points.len() < 2 || n == 0 {
        return false;
    }
    // Differences against one anchor span the same space as all pairwise ones.
    let x = DMatrix::from_fn(points.len() - 1, n, |r, c| points[r + 1][c] - first[c]);
    numerical_rank(&x) == n
}

/// Closed-form least-squares mean-gradient of one batch.
pub fn ls_mean_gradient(batch: &ExplorationBatch) -> Result<LsSolution> {
    ls_mean_gradient_points(&batch.points, LsSolver::Qr)
}

pub fn ls_mean_gradient_points(points: &[EvalPoint], solver: LsSolver) -> Result<LsSolution> {
    let n = points.first().map_or(0, EvalPoint::dim);
    if let Some(bad) = points.iter().find(|p| p.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.dim(),
        });
    }
    let (x, d) = difference_system(points);
    let rank = numerical_rank(&x);
    if n == 0 || rank < n {
        return Err(Error::NotPoised { rank, dim: n });
    }
    let g = match solver {
        LsSolver::Qr => {
            let qr = x.clone().qr();
            let rhs = qr.q().transpose() * &d;
            qr.r()
                .solve_upper_triangular(&rhs)
                .ok_or(Error::NotPoised { rank, dim: n })?
        }
        LsSolver::Svd => {
            let svd = x.clone().svd(true, true);
            let cutoff = RANK_CUTOFF * svd.singular_values.max();
            svd.solve(&d, cutoff)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?
        }
    };
    let residual = (&x * &g - &d).norm_squared();
    Ok(LsSolution {
        g_mse: g.iter().copied().collect(),
        design_rank: rank,
        residual,
    })
}

/// Central finite differences, one coordinate at a time.
pub fn fd_gradient_oracle(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Uniform sample from the Euclidean ball of radius `r` in `n` dimensions.
pub fn uniform_in_ball(n: usize, r: f64, rng: &mut impl Rng) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            let scale = r * rng.random::<f64>().powf(1.0 / n as f64) / norm;
            return v.into_iter().map(|a| a * scale).collect();
        }
    }
}

/// One ordered training pair; the model is evaluated at `xi`.
#[derive(Debug, Clone, Copy)]
pub struct Pair<'a> {
    pub xi: &'a [f64],
    pub yi: f64,
    pub xj: &'a [f64],
    pub yj: f64,
}

/// A trainable map `g_θ: ℝⁿ → ℝⁿ` with its optimizer state.
#[derive(Debug, Clone)]
pub struct GradientModel {
    pub net: Network,
    adam: Adam,
}

impl GradientModel {
    pub fn new(spec: NetworkSpec, learning_rate: f64, rng: &mut impl Rng) -> Result<Self> {
        if spec.input_dim != spec.output_dim {
            return Err(Error::DimensionMismatch {
                expected: spec.input_dim,
                got: spec.output_dim,
            });
        }
        let net = Network::new(spec, rng)?;
        let adam = Adam::new(AdamConfig::with_lr(learning_rate), net.num_params());
        Ok(Self { net, adam })
    }

    pub fn dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(x)
    }

    /// Makes the model output `g` everywhere (zero head weights, bias `g`).
    pub fn set_constant(&mut self, g: &[f64]) {
        let (w, b) = self.net.output_layer_mut();
        w.fill(0.0);
        b.copy_from_slice(g);
    }

    pub fn adam(&self) -> &Adam {
        &self.adam
    }

    pub fn apply_gradients(&mut self, grads: &[f64]) {
        self.adam.step(self.net.params_mut(), grads);
    }
}

/// Mean squared pair residual `((x_j - x_i)·g(x̄_i) - (y_j - y_i))²` and its
/// parameter gradients. With `p > 0` each reference point is dithered
/// uniformly inside the `p`-ball.
pub fn pair_loss_terms(
    model: &GradientModel,
    pairs: &[Pair<'_>],
    p: f64,
    rng: &mut impl Rng,
) -> (f64, Vec<f64>) {
    let n = model.dim();
    if pairs.is_empty() {
        return (0.0, vec![0.0; model.net.num_params()]);
    }
    let mut xs = Mat::zeros(pairs.len(), n);
    for (r, pair) in pairs.iter().enumerate() {
        let row = xs.row_mut(r);
        row.copy_from_slice(pair.xi);
        if p > 0.0 {
            for (v, d) in row.iter_mut().zip(uniform_in_ball(n, p, rng)) {
                *v += d;
            }
        }
    }
    let tape = model.net.forward_batch(&xs);
    let scale = 1.0 / pairs.len() as f64;
    let mut upstream = Mat::zeros(pairs.len(), n);
    let mut loss = 0.0;
    for (r, pair) in pairs.iter().enumerate() {
        let g = tape.output.row(r);
        let mut dot = 0.0;
        for c in 0..n {
            dot += (pair.xj[c] - pair.xi[c]) * g[c];
        }
        let res = dot - (pair.yj - pair.yi);
        loss += res * res;
        let up = upstream.row_mut(r);
        for c in 0..n {
            up[c] = 2.0 * res * (pair.xj[c] - pair.xi[c]) * scale;
        }
    }
    let grads = model.net.backward_params(&tape, &upstream);
    (loss * scale, grads)
}

/// Pair-loss training over the buffer using the stored `y` values.
pub fn train_gradient_model(
    model: &mut GradientModel,
    rb: &ReplayBuffer,
    cfg: &PairLossConfig,
    rng: &mut impl Rng,
) -> Result<f64> {
    train_gradient_model_mapped(model, rb, cfg, |y| y, rng)
}

/// Runs `cfg.n_minibatches` Adam steps on pairs drawn within batches, with
/// targets transformed by `y_map`. Returns the last minibatch loss.
pub fn train_gradient_model_mapped(
    model: &mut GradientModel,
    rb: &ReplayBuffer,
    cfg: &PairLossConfig,
    y_map: impl Fn(f64) -> f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    let total = rb.pair_count();
    if rb.is_empty() || total == 0 {
        return Err(Error::EmptyBuffer);
    }
    let batches: Vec<&ExplorationBatch> = rb.batches().collect();
    let ys: Vec<Vec<f64>> = batches
        .iter()
        .map(|b| b.points.iter().map(|p| y_map(p.y)).collect())
        .collect();
    let pair = |b: usize, i: usize, j: usize| Pair {
        xi: &batches[b].points[i].x,
        yi: ys[b][i],
        xj: &batches[b].points[j].x,
        yj: ys[b][j],
    };

    let exhaustive: Option<Vec<Pair<'_>>> = (total <= cfg.minibatch_pairs).then(|| {
        let mut all = Vec::with_capacity(total);
        for (b, batch) in batches.iter().enumerate() {
            for i in 0..batch.len() {
                for j in 0..batch.len() {
                    if i != j {
                        all.push(pair(b, i, j));
                    }
                }
            }
        }
        all
    });
    let weights: Vec<usize> = batches
        .iter()
        .map(|b| b.len() * b.len().saturating_sub(1))
        .collect();
    let chooser = WeightedIndex::new(&weights).map_err(|_| Error::EmptyBuffer)?;

    let mut last = 0.0;
    let mut sampled = Vec::with_capacity(cfg.minibatch_pairs);
    for _ in 0..cfg.n_minibatches {
        let pairs = match &exhaustive {
            Some(all) => all.as_slice(),
            None => {
                sampled.clear();
                for _ in 0..cfg.minibatch_pairs {
                    let b = chooser.sample(rng);
                    let m = batches[b].len();
                    let i = rng.random_range(0..m);
                    let mut j = rng.random_range(0..m - 1);
                    if j >= i {
                        j += 1;
                    }
                    sampled.push(pair(b, i, j));
                }
                sampled.as_slice()
            }
        };
        let (loss, grads) = pair_loss_terms(model, pairs, cfg.perturbation_p, rng);
        model.apply_gradients(&grads);
        last = loss;
    }
    Ok(last)
}

/// Pair loss of a constant gradient `g` over every ordered pair in `points`.
pub fn constant_pair_loss(points: &[EvalPoint], g: &[f64]) -> f64 {
    let m = points.len();
    if m < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let dot: f64 = points[j]
                .x
                .iter()
                .zip(&points[i].x)
                .zip(g)
                .map(|((a, b), g)| (a - b) * g)
                .sum();
            let r = dot - (points[j].y - points[i].y);
            total += r * r;
        }
    }
    total / (m * (m - 1)) as f64
}

/// A trainable scalar surrogate `f_θ: ℝⁿ → ℝ`.
#[derive(Debug, Clone)]
pub struct ValueModel {
    pub net: Network,
    adam: Adam,
}

impl ValueModel {
    pub fn new(spec: NetworkSpec, learning_rate: f64, rng: &mut impl Rng) -> Result<Self> {
        if spec.output_dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: spec.output_dim,
            });
        }
        let net = Network::new(spec, rng)?;
        let adam = Adam::new(AdamConfig::with_lr(learning_rate), net.num_params());
        Ok(Self { net, adam })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.net.forward(x)?[0])
    }

    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.net.input_gradient(x)
    }
}

/// Trains `f_θ` on the squared value error of buffer points, drawn with
/// replacement (`cfg.minibatch_pairs` points per minibatch). Returns the last
/// minibatch loss.
pub fn train_value_model(
    model: &mut ValueModel,
    rb: &ReplayBuffer,
    cfg: &PairLossConfig,
    y_map: impl Fn(f64) -> f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    let points: Vec<&EvalPoint> = rb.points().collect();
    if points.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let n = model.net.input_dim();
    let targets: Vec<f64> = points.iter().map(|p| y_map(p.y)).collect();
    let size = cfg.minibatch_pairs.min(points.len()).max(1);
    let exhaustive = points.len() <= cfg.minibatch_pairs;
    let mut last = 0.0;
    let mut idx = Vec::with_capacity(size);
    for _ in 0..cfg.n_minibatches {
        idx.clear();
        if exhaustive {
            idx.extend(0..points.len());
        } else {
            idx.extend((0..size).map(|_| rng.random_range(0..points.len())));
        }
        let mut xs = Mat::zeros(idx.len(), n);
        for (r, &k) in idx.iter().enumerate() {
            xs.row_mut(r).copy_from_slice(&points[k].x);
        }
        let tape = model.net.forward_batch(&xs);
        let scale = 1.0 / idx.len() as f64;
        let mut up = Mat::zeros(idx.len(), 1);
        let mut loss = 0.0;
        for (r, &k) in idx.iter().enumerate() {
            let e = tape.output.data[r] - targets[k];
            loss += e * e;
            up.data[r] = 2.0 * e * scale;
        }
        let grads = model.net.backward_params(&tape, &up);
        model.adam.step(model.net.params_mut(), &grads);
        last = loss * scale;
    }
    Ok(last)
}
