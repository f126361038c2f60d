//! Sampled points and exploration batches.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One evaluated pair `(x, y)`, in raw or mapped coordinates depending on the owner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub x: Vec<f64>,
    pub y: f64,
}

impl EvalPoint {
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self> {
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("evaluation point".into()));
        }
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// How a point of a batch was drawn; decides which radius test it satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    /// Uniform in the box `center + eps * U[-1, 1]^n` (infinity norm).
    Box,
    /// Uniform in the Euclidean ball of radius `eps`.
    Ball,
    /// Uniform in the intersection of the Euclidean ball and a cone.
    Cone,
}

/// The points collected around one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationBatch {
    pub points: Vec<EvalPoint>,
    pub kinds: Vec<PointKind>,
    pub center: Vec<f64>,
    pub epsilon: f64,
}

impl ExplorationBatch {
    pub fn new(center: Vec<f64>, epsilon: f64) -> Self {
        Self {
            points: Vec::new(),
            kinds: Vec::new(),
            center,
            epsilon,
        }
    }

    pub fn push(&mut self, point: EvalPoint, kind: PointKind) {
        self.points.push(point);
        self.kinds.push(kind);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks every point against the radius its sampling kind promises.
    pub fn within_radius(&self, tol: f64) -> bool {
        self.points.iter().zip(&self.kinds).all(|(p, kind)| {
            let diffs = p.x.iter().zip(&self.center).map(|(a, c)| a - c);
            let dist = match kind {
                PointKind::Box => diffs.fold(0.0f64, |acc, d| acc.max(d.abs())),
                PointKind::Ball | PointKind::Cone => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            };
            dist <= self.epsilon + tol
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(EvalPoint::new(vec![f64::NAN], 0.0).is_err());
        assert!(EvalPoint::new(vec![0.0], f64::INFINITY).is_err());
        assert!(EvalPoint::new(vec![0.0, 1.0], 2.0).is_ok());
    }

    #[test]
    fn radius_check_uses_kind() {
        let mut b = ExplorationBatch::new(vec![0.0, 0.0], 1.0);
        // Corner of the unit box: inside the box, outside the ball.
        b.push(EvalPoint::new(vec![1.0, 1.0], 0.0).unwrap(), PointKind::Box);
        assert!(b.within_radius(0.0));
        b.kinds[0] = PointKind::Ball;
        assert!(!b.within_radius(0.0));
    }
}
