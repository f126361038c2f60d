//! Unshifted, unrotated benchmark families. Each has its minimum value 0 at the
//! origin of its own coordinates (Rosenbrock-type families at the all-ones point).

use std::f64::consts::PI;

pub fn sphere(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

fn ill_conditioned_weight(i: usize, n: usize, log10_cond: f64) -> f64 {
    if n < 2 {
        return 1.0;
    }
    10f64.powf(log10_cond * i as f64 / (n - 1) as f64)
}

/// Ellipsoid with condition number `1e6`.
pub fn ellipsoid(z: &[f64]) -> f64 {
    let n = z.len();
    z.iter()
        .enumerate()
        .map(|(i, v)| ill_conditioned_weight(i, n, 6.0) * v * v)
        .sum()
}

pub fn rastrigin(z: &[f64]) -> f64 {
    10.0 * z.len() as f64
        + z.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

/// Classic Rosenbrock, minimum 0 at `(1, ..., 1)`. A single coordinate reduces
/// to `(1 - x)^2`.
pub fn rosenbrock(x: &[f64]) -> f64 {
    if x.len() == 1 {
        return (1.0 - x[0]).powi(2);
    }
    x.windows(2)
        .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
        .sum()
}

/// Nearest point of the 0.5 grid.
pub fn quantize_half(v: f64) -> f64 {
    (2.0 * v).round() / 2.0
}

/// Ellipsoid (condition `1e2`) of the coordinates rounded to the 0.5 grid.
/// Piecewise constant on cells `|z_i - c_i| < 0.25`.
pub fn step_ellipsoid(z: &[f64]) -> f64 {
    let n = z.len();
    z.iter()
        .enumerate()
        .map(|(i, v)| {
            let q = quantize_half(*v);
            ill_conditioned_weight(i, n, 2.0) * q * q
        })
        .sum()
}

pub fn sharp_ridge(z: &[f64]) -> f64 {
    let rest: f64 = z[1..].iter().map(|v| v * v).sum();
    z[0] * z[0] + 100.0 * rest.sqrt()
}

pub fn schaffer_f7(z: &[f64]) -> f64 {
    if z.len() < 2 {
        let s = z[0].abs();
        return (s.sqrt() * (1.0 + (50.0 * s.powf(0.2)).sin().powi(2))).powi(2);
    }
    let terms: f64 = z
        .windows(2)
        .map(|w| {
            let s = (w[0] * w[0] + w[1] * w[1]).sqrt();
            s.sqrt() + s.sqrt() * (50.0 * s.powf(0.2)).sin().powi(2)
        })
        .sum();
    (terms / (z.len() - 1) as f64).powi(2)
}

/// Composite Griewank–Rosenbrock, minimum 0 at `(1, ..., 1)`.
pub fn griewank_rosenbrock(x: &[f64]) -> f64 {
    if x.len() < 2 {
        let s = (x[0] - 1.0).powi(2);
        return 10.0 * (s / 4000.0 - s.cos()) + 10.0;
    }
    let n1 = (x.len() - 1) as f64;
    let sum: f64 = x
        .windows(2)
        .map(|w| {
            let s = 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2);
            s / 4000.0 - s.cos()
        })
        .sum();
    10.0 * sum / n1 + 10.0
}
