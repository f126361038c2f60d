//! Classical derivative-free baselines on the same budgeted interface.

use rand::Rng;

use crate::objectives::BudgetedObjective;
use crate::rng::{stream, RngStream};
use crate::{Error, Result, RunRecord};

/// Initial simplex edge as a fraction of each axis of the domain.
pub const DEFAULT_SIMPLEX_SCALE: f64 = 0.05;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// `n + 1` vertices kept sorted by value.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl Simplex {
    fn sort(&mut self) {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.vertices = order.iter().map(|&i| self.vertices[i].clone()).collect();
        self.values = order.iter().map(|&i| self.values[i]).collect();
    }

    fn centroid(&self) -> Vec<f64> {
        let n = self.vertices.len() - 1;
        let mut c = vec![0.0; self.vertices[0].len()];
        for v in &self.vertices[..n] {
            c.iter_mut().zip(v).for_each(|(a, b)| *a += b / n as f64);
        }
        c
    }

    fn replace_worst(&mut self, x: Vec<f64>, y: f64) {
        let last = self.values.len() - 1;
        self.vertices[last] = x;
        self.values[last] = y;
        self.sort();
    }
}

fn along(c: &[f64], towards: &[f64], t: f64, bounds: &[(f64, f64)]) -> Vec<f64> {
    c.iter()
        .zip(towards)
        .zip(bounds)
        .map(|((a, b), (l, u))| (a + t * (b - a)).clamp(*l, *u))
        .collect()
}

/// Nelder–Mead with reflection 1, expansion 2, contraction 0.5 and shrink 0.5.
///
/// The initial simplex is `x0` plus one step of `scale × width` along each
/// axis (backwards where the forward step would leave the domain). Runs until
/// the budget is spent.
pub fn nelder_mead(
    obj: &mut BudgetedObjective,
    x0: &[f64],
    scale: f64,
    seed: u64,
) -> Result<RunRecord> {
    match nelder_mead_inner(obj, x0, scale) {
        Ok(()) | Err(Error::BudgetExhausted { .. }) => Ok(obj.snapshot(seed)),
        Err(e) => Err(e),
    }
}

fn nelder_mead_inner(obj: &mut BudgetedObjective, x0: &[f64], scale: f64) -> Result<()> {
    let bounds = obj.bounds().to_vec();
    let (x0, _) = obj.objective().project(x0)?;
    let mut vertices = vec![x0.clone()];
    for (i, (l, u)) in bounds.iter().enumerate() {
        let step = scale * (u - l);
        let mut v = x0.clone();
        v[i] = if v[i] + step <= *u {
            v[i] + step
        } else {
            v[i] - step
        };
        vertices.push(v);
    }
    let mut values = Vec::with_capacity(vertices.len());
    for v in &vertices {
        values.push(obj.evaluate(v)?);
    }
    let mut s = Simplex { vertices, values };
    s.sort();
    let n = bounds.len();
    loop {
        let c = s.centroid();
        let worst = s.vertices[n].clone();
        let (f_best, f_second, f_worst) = (s.values[0], s.values[n - 1], s.values[n]);

        let xr = along(&c, &worst, -REFLECT, &bounds);
        let fr = obj.evaluate(&xr)?;
        if fr < f_best {
            let xe = along(&c, &xr, EXPAND, &bounds);
            let fe = obj.evaluate(&xe)?;
            if fe < fr {
                s.replace_worst(xe, fe);
            } else {
                s.replace_worst(xr, fr);
            }
            continue;
        }
        if fr < f_second {
            s.replace_worst(xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < f_worst {
            let xc = along(&c, &xr, CONTRACT, &bounds);
            let fc = obj.evaluate(&xc)?;
            (xc, fc, fc <= fr)
        } else {
            let xc = along(&c, &worst, CONTRACT, &bounds);
            let fc = obj.evaluate(&xc)?;
            (xc, fc, fc < f_worst)
        };
        if accept {
            s.replace_worst(xc, fc);
            continue;
        }
        let best = s.vertices[0].clone();
        for i in 1..=n {
            s.vertices[i] = along(&best, &s.vertices[i], SHRINK, &bounds);
            s.values[i] = obj.evaluate(&s.vertices[i])?;
        }
        s.sort();
    }
}

/// Spends the whole remaining budget on uniform draws from the domain.
pub fn random_search(obj: &mut BudgetedObjective, seed: u64) -> Result<RunRecord> {
    let mut rng = stream(seed, RngStream::Baseline);
    let bounds = obj.bounds().to_vec();
    while obj.remaining() > 0 {
        let x: Vec<f64> = bounds
            .iter()
            .map(|(l, u)| rng.random_range(*l..=*u))
            .collect();
        obj.evaluate(&x)?;
    }
    Ok(obj.snapshot(seed))
}
