//! Success criterion, scaled-distance curves and summary statistics.

use egl::TracePoint;

/// Absolute tolerance of the success test.
pub const SUCCESS_ABS: f64 = 1.0;
/// Relative tolerance of the success test.
pub const SUCCESS_REL: f64 = 1e-2;

/// A run succeeds when it ends within `1` of `y_star` and closes all but 1% of
/// the initial gap `y0 - y_star`. With no gap only the absolute test applies.
pub fn success(y_best: f64, y0: f64, y_star: f64) -> bool {
    let d = y_best - y_star;
    if y0 <= y_star {
        return d <= SUCCESS_ABS;
    }
    d <= SUCCESS_ABS && d / (y0 - y_star) <= SUCCESS_REL
}

/// `Δy_t = (min(y0, y_1..y_t) - y_star) / (y0 - y_star)` clamped to `[0, 1]`,
/// one entry per evaluation. All zeros when `y0 ≤ y_star`.
pub fn scaled_distance_curve(trace: &[TracePoint], y0: f64, y_star: f64) -> Vec<f64> {
    let span = y0 - y_star;
    if !(span > 0.0) {
        return vec![0.0; trace.len()];
    }
    let mut best = y0;
    trace
        .iter()
        .map(|p| {
            best = best.min(p.y);
            ((best - y_star) / span).clamp(0.0, 1.0)
        })
        .collect()
}

/// 1-based evaluation indices spaced by factors of 1.1, always including `len`.
pub fn geometric_indices(len: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut t = 1usize;
    while t <= len {
        out.push(t);
        t = (t + 1).max((t as f64 * 1.1).ceil() as usize);
    }
    if out.last() != Some(&len) && len > 0 {
        out.push(len);
    }
    out
}

/// Type-7 quantile; `NaN` for empty input.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    egl::mappings::quantile_sorted(&v, q)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn iqr(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}
