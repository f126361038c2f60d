//! Learnable piecewise-linear splines.

/// Linear interpolation of `theta` on strictly increasing `knots`, with linear
/// extrapolation of the end segments.
pub fn spline_eval(theta: &[f64], knots: &[f64], x: f64) -> f64 {
    assert!(knots.len() >= 2 && theta.len() == knots.len());
    // Index of the right end of the segment holding x, clamped to the end segments.
    let i = knots.partition_point(|&t| t <= x).clamp(1, knots.len() - 1);
    let (t0, t1) = (knots[i - 1], knots[i]);
    let w = (x - t0) / (t1 - t0);
    theta[i - 1] + (theta[i] - theta[i - 1]) * w
}

/// `k` equally spaced knots on `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformKnots {
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
}

impl UniformKnots {
    pub fn new(count: usize, lower: f64, upper: f64) -> Self {
        assert!(count >= 2 && upper > lower);
        Self {
            count,
            lower,
            upper,
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.count - 1) as f64
    }

    pub fn knot(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.upper
        } else {
            self.lower + i as f64 * self.spacing()
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.knot(i)).collect()
    }

    /// Segment `(i, w)`: `x` sits at fraction `w` between knots `i - 1` and `i`.
    /// Outside the range `w` leaves `[0, 1]`, which extrapolates linearly.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let h = self.spacing();
        let pos = (x - self.lower) / h;
        let i = if pos.is_nan() {
            1
        } else {
            (pos.floor() as i64 + 1).clamp(1, self.count as i64 - 1) as usize
        };
        let t0 = self.knot(i - 1);
        (i, (x - t0) / h)
    }
}
