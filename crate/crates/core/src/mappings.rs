//! Input and output mappings.
//!
//! Optimization runs in mapped coordinates: each trust region is expanded onto
//! all of ℝⁿ with an `arctanh` of a linear map onto `[-1, 1]`, and objective
//! values are robust-scaled by moving quantiles and passed through a log-squash
//! that tames outliers. Both maps are monotone and invertible.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Keeps the argument of `arctanh` inside `±(1 - CLAMP_DELTA)`.
pub const CLAMP_DELTA: f64 = 1e-6;
/// Quantile spans below this are treated as degenerate.
pub const DEGENERATE_SPAN: f64 = 1e-12;

/// Identity on `[-1, 1)`, logarithmic outside, continuous and increasing.
pub fn squash(x: f64) -> f64 {
    if x < -1.0 {
        -(-x).ln() - 1.0
    } else if x < 1.0 {
        x
    } else {
        x.ln() + 1.0
    }
}

pub fn unsquash(v: f64) -> f64 {
    if v < -1.0 {
        -(-v - 1.0).exp()
    } else if v < 1.0 {
        v
    } else {
        (v - 1.0).exp()
    }
}

pub fn squash_derivative(x: f64) -> f64 {
    if x < -1.0 {
        -1.0 / x
    } else if x < 1.0 {
        1.0
    } else {
        1.0 / x
    }
}

/// A rectangular sub-domain of the global box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustRegion {
    pub bounds: Vec<(f64, f64)>,
    pub generation: u32,
}

impl TrustRegion {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidConfig(
                "trust region needs at least one dimension".into(),
            ));
        }
        if let Some((l, u)) = bounds
            .iter()
            .find(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "trust region side [{l}, {u}] is empty or infinite"
            )));
        }
        Ok(Self {
            bounds,
            generation: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bounds.iter().map(|(l, u)| u - l).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.bounds)
            .all(|(v, (l, u))| l <= v && v <= u)
    }
}

/// Scales every side by `gamma_alpha`, recenters the box at `x_best` and
/// shifts it back inside `omega` where it sticks out.
pub fn shrink_trust_region(
    tr: &TrustRegion,
    x_best: &[f64],
    gamma_alpha: f64,
    omega: &[(f64, f64)],
) -> TrustRegion {
    assert_eq!(x_best.len(), tr.dim());
    assert_eq!(omega.len(), tr.dim());
    let bounds = tr
        .bounds
        .iter()
        .zip(x_best)
        .zip(omega)
        .map(|(((l, u), &c), &(gl, gu))| {
            let width = (gamma_alpha * (u - l)).min(gu - gl);
            let c = c.clamp(gl, gu);
            let mut lo = c - 0.5 * width;
            let mut hi = c + 0.5 * width;
            if lo < gl {
                lo = gl;
                hi = gl + width;
            } else if hi > gu {
                hi = gu;
                lo = gu - width;
            }
            (lo, hi)
        })
        .collect();
    TrustRegion {
        bounds,
        generation: tr.generation + 1,
    }
}

/// `x̃ = arctanh(clamp(a x + b))` per coordinate, mapping the region onto ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputMap {
    pub region: TrustRegion,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub clamp_delta: f64,
}

impl InputMap {
    pub fn new(region: TrustRegion) -> Self {
        let (a, b) = region
            .bounds
            .iter()
            .map(|(l, u)| (2.0 / (u - l), -(u + l) / (u - l)))
            .unzip();
        Self {
            region,
            a,
            b,
            clamp_delta: CLAMP_DELTA,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    fn linear(&self, i: usize, x: f64) -> (f64, bool) {
        let limit = 1.0 - self.clamp_delta;
        let z = self.a[i] * x + self.b[i];
        let clamped = z.clamp(-limit, limit);
        (clamped, clamped != z)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_with_clamps(x).0
    }

    /// Also reports which coordinates hit the `arctanh` clamp.
    pub fn forward_with_clamps(&self, x: &[f64]) -> (Vec<f64>, Vec<usize>) {
        assert_eq!(x.len(), self.dim());
        let mut clamped = Vec::new();
        let mapped = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let (z, hit) = self.linear(i, v);
                if hit {
                    clamped.push(i);
                }
                z.atanh()
            })
            .collect();
        (mapped, clamped)
    }

    /// `(tanh(x̃) - b) / a`, clipped to the region.
    pub fn inverse(&self, xt: &[f64]) -> Vec<f64> {
        assert_eq!(xt.len(), self.dim());
        xt.iter()
            .enumerate()
            .map(|(i, &v)| {
                let (l, u) = self.region.bounds[i];
                ((v.tanh() - self.b[i]) / self.a[i]).clamp(l, u)
            })
            .collect()
    }

    /// `dx̃_i / dx_i`, evaluated at the clamped linear value.
    pub fn derivative(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let (z, _) = self.linear(i, v);
                self.a[i] / (1.0 - z * z)
            })
            .collect()
    }
}

/// `ỹ = squash(2 (y - q_low) / (q_high - q_low) - 1)` with moving quantiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputMap {
    pub q_low: f64,
    pub q_high: f64,
    pub om_lr: f64,
    pub fitted: bool,
}

impl Default for OutputMap {
    fn default() -> Self {
        Self::new(0.1)
    }
}

/// Linear interpolation between order statistics of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl OutputMap {
    /// An unfitted map with the identity-like quantiles `(-1, 1)`.
    pub fn new(om_lr: f64) -> Self {
        Self {
            q_low: -1.0,
            q_high: 1.0,
            om_lr,
            fitted: false,
        }
    }

    /// Blends the 0.1 and 0.9 sample quantiles of `ys` into the running values.
    pub fn fit(&mut self, ys: &[f64]) -> Result<()> {
        if ys.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("output map data".into()));
        }
        let mut sorted = ys.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut lo = quantile_sorted(&sorted, 0.1);
        let mut hi = quantile_sorted(&sorted, 0.9);
        if hi - lo < DEGENERATE_SPAN {
            let mid = 0.5 * (lo + hi);
            lo = mid - 0.5;
            hi = mid + 0.5;
        }
        if self.fitted {
            self.q_low = (1.0 - self.om_lr) * self.q_low + self.om_lr * lo;
            self.q_high = (1.0 - self.om_lr) * self.q_high + self.om_lr * hi;
        } else {
            self.q_low = lo;
            self.q_high = hi;
            self.fitted = true;
        }
        Ok(())
    }

    fn scaled(&self, y: f64) -> f64 {
        2.0 * (y - self.q_low) / (self.q_high - self.q_low) - 1.0
    }

    pub fn forward(&self, y: f64) -> f64 {
        squash(self.scaled(y))
    }

    pub fn inverse(&self, yt: f64) -> f64 {
        (unsquash(yt) + 1.0) * 0.5 * (self.q_high - self.q_low) + self.q_low
    }

    /// `dỹ/dy` at `y`.
    pub fn derivative(&self, y: f64) -> f64 {
        squash_derivative(self.scaled(y)) * 2.0 / (self.q_high - self.q_low)
    }
}

/// Raw-space gradient from a mapped-space one:
/// `g_i = (dr/dy)⁻¹ · dh_i/dx_i(x) · g̃_i`, with `dr/dy` taken at `y`.
pub fn recover_gradient(
    g_mapped: &[f64],
    h: &InputMap,
    om: &OutputMap,
    x: &[f64],
    y: f64,
) -> Vec<f64> {
    let dr = om.derivative(y);
    h.derivative(x)
        .iter()
        .zip(g_mapped)
        .map(|(dh, g)| dh * g / dr)
        .collect()
}

/// [`recover_gradient`] with explicit scalar chain-rule factors, for maps
/// given only by their local derivatives.
pub fn recover_gradient_linear(g_mapped: &[f64], dh_dx: &[f64], dr_dy: f64) -> Vec<f64> {
    g_mapped
        .iter()
        .zip(dh_dx)
        .map(|(g, a)| a * g / dr_dy)
        .collect()
}
