//! Benchmark objectives and the budget-enforcing evaluator.
//!
//! Families are reimplemented in the spirit of the BBOB suite: each instance
//! draws a random optimum `x_opt` in `[-4, 4]^n` and, for non-separable
//! families, a random rotation `R`. The family is evaluated on
//! `z = R (x - x_opt) + offset`, where `offset` moves Rosenbrock-type minima
//! from `1` back onto `x_opt`.

pub mod functions;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::record::{RunEvent, RunRecord, TracePoint};
use crate::rng::{stream, RngStream};
use crate::{Error, Result};

/// Queries further than this outside the domain are rejected instead of clamped.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A deterministic black-box function on a rectangular domain.
#[derive(Clone)]
pub struct Objective {
    pub name: String,
    pub bounds: Vec<(f64, f64)>,
    pub x_star: Option<Vec<f64>>,
    pub y_star: Option<f64>,
    eval: EvalFn,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("x_star", &self.x_star)
            .field("y_star", &self.y_star)
            .finish()
    }
}

impl Objective {
    pub fn new(
        name: impl Into<String>,
        bounds: Vec<(f64, f64)>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            bounds,
            x_star: None,
            y_star: None,
            eval: Arc::new(eval),
        }
    }

    pub fn with_optimum(mut self, x_star: Vec<f64>, y_star: f64) -> Self {
        self.x_star = Some(x_star);
        self.y_star = Some(y_star);
        self
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn eval_fn(&self) -> EvalFn {
        Arc::clone(&self.eval)
    }

    /// One-dimensional problem `t -> f(t, t)` built from a 2-D objective.
    pub fn diagonal(obj2d: &Objective) -> Result<Objective> {
        if obj2d.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: obj2d.dim(),
            });
        }
        let inner = obj2d.eval_fn();
        let lo = obj2d.bounds[0].0.max(obj2d.bounds[1].0);
        let hi = obj2d.bounds[0].1.min(obj2d.bounds[1].1);
        Ok(Objective::new(
            format!("{}_diag", obj2d.name),
            vec![(lo, hi)],
            move |x| inner(&[x[0], x[0]]),
        ))
    }

    /// Returns `x` with marginal excursions clamped, or an error when a
    /// coordinate lies farther than [`BOUNDARY_TOLERANCE`] outside the domain.
    pub fn project(&self, x: &[f64]) -> Result<(Vec<f64>, bool)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut clamped = false;
        let mut out = Vec::with_capacity(x.len());
        for (i, (&v, &(lo, hi))) in x.iter().zip(&self.bounds).enumerate() {
            if !v.is_finite() || v < lo - BOUNDARY_TOLERANCE || v > hi + BOUNDARY_TOLERANCE {
                return Err(Error::OutOfBounds {
                    index: i,
                    value: v,
                    lower: lo,
                    upper: hi,
                });
            }
            let c = v.clamp(lo, hi);
            clamped |= c != v;
            out.push(c);
        }
        Ok((out, clamped))
    }
}

/// The benchmark families understood by [`make_benchmark`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Sphere,
    Ellipsoid,
    Rastrigin,
    Rosenbrock,
    StepEllipsoid,
    SharpRidge,
    SchafferF7,
    GriewankRosenbrock,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Sphere,
        Family::Ellipsoid,
        Family::Rastrigin,
        Family::Rosenbrock,
        Family::StepEllipsoid,
        Family::SharpRidge,
        Family::SchafferF7,
        Family::GriewankRosenbrock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Sphere => "sphere",
            Family::Ellipsoid => "ellipsoid",
            Family::Rastrigin => "rastrigin",
            Family::Rosenbrock => "rosenbrock",
            Family::StepEllipsoid => "step_ellipsoid",
            Family::SharpRidge => "sharp_ridge",
            Family::SchafferF7 => "schaffer_f7",
            Family::GriewankRosenbrock => "griewank_rosenbrock",
        }
    }

    pub fn is_rotated(self) -> bool {
        !matches!(self, Family::Sphere | Family::Rastrigin)
    }

    /// Coordinate offset at which the base function attains its minimum.
    fn offset(self) -> f64 {
        match self {
            Family::Rosenbrock | Family::GriewankRosenbrock => 1.0,
            _ => 0.0,
        }
    }

    pub fn base_eval(self, z: &[f64]) -> f64 {
        match self {
            Family::Sphere => functions::sphere(z),
            Family::Ellipsoid => functions::ellipsoid(z),
            Family::Rastrigin => functions::rastrigin(z),
            Family::Rosenbrock => functions::rosenbrock(z),
            Family::StepEllipsoid => functions::step_ellipsoid(z),
            Family::SharpRidge => functions::sharp_ridge(z),
            Family::SchafferF7 => functions::schaffer_f7(z),
            Family::GriewankRosenbrock => functions::griewank_rosenbrock(z),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownBenchmark(s.to_string()))
    }
}

/// A concrete benchmark instance: family, optimum and rotation.
#[derive(Debug, Clone)]
pub struct Instance {
    pub family: Family,
    pub x_opt: Vec<f64>,
    /// Row-major `n x n` orthogonal matrix (identity for separable families).
    pub rotation: Vec<f64>,
}

impl Instance {
    pub fn new(family: Family, dim: usize, instance_seed: u64) -> Self {
        let mut rng = stream(instance_seed, RngStream::Instance);
        let x_opt: Vec<f64> = (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect();
        let rotation = if family.is_rotated() {
            random_rotation(dim, &mut rng)
        } else {
            identity(dim)
        };
        Self {
            family,
            x_opt,
            rotation,
        }
    }

    pub fn dim(&self) -> usize {
        self.x_opt.len()
    }

    /// Maps a domain point to the family's own coordinates.
    pub fn to_base(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let off = self.family.offset();
        (0..n)
            .map(|i| {
                let row = &self.rotation[i * n..(i + 1) * n];
                row.iter()
                    .zip(x.iter().zip(&self.x_opt))
                    .map(|(r, (xv, o))| r * (xv - o))
                    .sum::<f64>()
                    + off
            })
            .collect()
    }

    /// Inverse of [`Instance::to_base`].
    pub fn from_base(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let off = self.family.offset();
        (0..n)
            .map(|j| {
                self.x_opt[j]
                    + (0..n)
                        .map(|i| self.rotation[i * n + j] * (z[i] - off))
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.family.base_eval(&self.to_base(x))
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.
fn random_rotation(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(q[(i, j)]);
        }
    }
    out
}

pub const DEFAULT_BOUNDS: (f64, f64) = (-5.0, 5.0);

/// Builds a benchmark instance on `[-5, 5]^dim`.
pub fn make_benchmark(name: &str, dim: usize, instance_seed: u64) -> Result<Objective> {
    let family: Family = name.parse()?;
    if dim == 0 {
        return Err(Error::InvalidConfig(
            "benchmark dimension must be positive".into(),
        ));
    }
    let inst = Instance::new(family, dim, instance_seed);
    let x_star = inst.x_opt.clone();
    let y_star = inst.eval(&x_star);
    Ok(Objective::new(
        format!("{name}:{dim}:{instance_seed}"),
        vec![DEFAULT_BOUNDS; dim],
        move |x| inst.eval(x),
    )
    .with_optimum(x_star, y_star))
}

/// A benchmark address of the form `name:dim:seed`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BenchmarkId {
    pub name: String,
    pub dim: usize,
    pub seed: u64,
}

impl BenchmarkId {
    pub fn build(&self) -> Result<Objective> {
        make_benchmark(&self.name, self.dim, self.seed)
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.name, self.dim, self.seed)
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::InvalidConfig(format!("benchmark id `{s}` is not name:dim:seed"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let name = parts[0].to_string();
        name.parse::<Family>()?;
        Ok(Self {
            name,
            dim: parts[1].parse().map_err(|_| bad())?,
            seed: parts[2].parse().map_err(|_| bad())?,
        })
    }
}

/// Wraps an objective with a hard evaluation budget and records every call.
#[derive(Debug, Clone)]
pub struct BudgetedObjective {
    inner: Objective,
    budget: usize,
    trace: Vec<TracePoint>,
    x_best: Vec<f64>,
    y_best: f64,
    events: Vec<RunEvent>,
}

impl BudgetedObjective {
    pub fn new(inner: Objective, budget: usize) -> Self {
        Self {
            inner,
            budget,
            trace: Vec::new(),
            x_best: Vec::new(),
            y_best: f64::INFINITY,
            events: Vec::new(),
        }
    }

    pub fn objective(&self) -> &Objective {
        &self.inner
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.inner.bounds
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn used(&self) -> usize {
        self.trace.len()
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.used()
    }

    pub fn best(&self) -> Option<(&[f64], f64)> {
        (!self.x_best.is_empty()).then_some((self.x_best.as_slice(), self.y_best))
    }

    pub fn trace(&self) -> &[TracePoint] {
        &self.trace
    }

    /// Adds an optimizer-level event to the run log.
    pub fn log(&mut self, event: RunEvent) {
        self.events.push(event);
    }

    fn record(&mut self, x: Vec<f64>, y: f64) {
        if y < self.y_best || self.x_best.is_empty() {
            self.y_best = y;
            self.x_best = x;
        }
        let t = self.trace.len() + 1;
        self.trace.push(TracePoint {
            t,
            y,
            y_best: self.y_best,
        });
    }

    /// Evaluates one point, consuming one unit of budget.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        if self.remaining() == 0 {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        let (x, clamped) = self.inner.project(x)?;
        if clamped {
            self.events
                .push(RunEvent::BoundaryClamp { t: self.used() + 1 });
        }
        let y = self.inner.eval(&x);
        if !y.is_finite() {
            return Err(Error::NonFinite(format!(
                "{} returned {y}",
                self.inner.name
            )));
        }
        self.record(x, y);
        Ok(y)
    }

    /// Reserves `min(xs.len(), remaining)` budget units at once and evaluates
    /// that prefix of `xs`. Results are recorded in index order. Fails with
    /// `BudgetExhausted` only when nothing could be reserved.
    pub fn evaluate_batch(&mut self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let granted = xs.len().min(self.remaining());
        if granted == 0 && !xs.is_empty() {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        let projected: Vec<(Vec<f64>, bool)> = xs[..granted]
            .iter()
            .map(|x| self.inner.project(x))
            .collect::<Result<_>>()?;
        let values: Vec<f64> = projected.iter().map(|(x, _)| self.inner.eval(x)).collect();
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "{} returned {bad}",
                self.inner.name
            )));
        }
        for ((x, clamped), &y) in projected.into_iter().zip(&values) {
            if clamped {
                self.events
                    .push(RunEvent::BoundaryClamp { t: self.used() + 1 });
            }
            self.record(x, y);
        }
        Ok(values)
    }

    /// A copy of the run so far.
    pub fn snapshot(&self, seed: u64) -> RunRecord {
        self.clone().into_record(seed)
    }

    pub fn events(&self) -> &[RunEvent] {
        &self.events
    }

    pub fn into_record(self, seed: u64) -> RunRecord {
        RunRecord {
            evaluations_used: self.trace.len(),
            trace: self.trace,
            x_best: self.x_best,
            y_best: self.y_best,
            seed,
            events: self.events,
        }
    }
}
