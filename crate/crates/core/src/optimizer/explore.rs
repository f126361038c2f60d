//! Exploration samplers around the current candidate.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::gradnet::uniform_in_ball;
use crate::{Error, EvalPoint, ExplorationBatch, PointKind, Result};

/// Rejection attempts per cone point before the direct sampler takes over.
pub const CONE_REJECTION_TRIES: usize = 100;

/// Points to evaluate, before their values are known.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub center: Vec<f64>,
    pub epsilon: f64,
    pub points: Vec<Vec<f64>>,
    pub kinds: Vec<PointKind>,
    /// Cone points produced by the direct sampler after rejection gave up.
    pub direct_cone_draws: usize,
}

impl Proposal {
    fn new(center: &[f64], epsilon: f64, m: usize) -> Self {
        Self {
            center: center.to_vec(),
            epsilon,
            points: Vec::with_capacity(m),
            kinds: Vec::with_capacity(m),
            direct_cone_draws: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Pairs the first `ys.len()` points with their values.
    pub fn into_batch(self, ys: &[f64]) -> Result<ExplorationBatch> {
        let mut batch = ExplorationBatch::new(self.center, self.epsilon);
        for ((x, kind), &y) in self.points.into_iter().zip(self.kinds).zip(ys) {
            batch.push(EvalPoint::new(x, y)?, kind);
        }
        Ok(batch)
    }
}

fn box_point(center: &[f64], epsilon: f64, rng: &mut impl Rng) -> Vec<f64> {
    center
        .iter()
        .map(|c| c + epsilon * rng.random_range(-1.0..=1.0))
        .collect()
}

/// `m` points `center + ε·U[-1, 1]ⁿ`.
pub fn explore_ball(center: &[f64], epsilon: f64, m: usize, rng: &mut impl Rng) -> Proposal {
    let mut p = Proposal::new(center, epsilon, m);
    for _ in 0..m {
        p.points.push(box_point(center, epsilon, rng));
        p.kinds.push(PointKind::Box);
    }
    p
}

fn unit_axis(g_prev: &[f64]) -> Result<Vec<f64>> {
    let norm = g_prev.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroGradient);
    }
    Ok(g_prev.iter().map(|v| -v / norm).collect())
}

fn cosine(v: &[f64], axis: &[f64]) -> f64 {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 1.0;
    }
    v.iter().zip(axis).map(|(a, b)| a * b).sum::<f64>() / norm
}

/// Exact draw from the ball-cone intersection: radius `ε·U^{1/n}`, polar angle
/// with density `∝ sin^{n-2}ψ` on `[0, half_angle]`, uniform orthogonal part.
fn direct_cone_offset(axis: &[f64], epsilon: f64, half_angle: f64, rng: &mut impl Rng) -> Vec<f64> {
    let n = axis.len();
    let r = epsilon * rng.random::<f64>().powf(1.0 / n as f64);
    if n == 1 {
        return vec![axis[0] * r];
    }
    let sin_max = half_angle.min(std::f64::consts::FRAC_PI_2).sin();
    let psi = loop {
        let psi = rng.random::<f64>() * half_angle;
        let accept = (psi.sin() / sin_max).powi(n as i32 - 2);
        if rng.random::<f64>() <= accept {
            break psi;
        }
    };
    let u = loop {
        let mut u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let along: f64 = u.iter().zip(axis).map(|(a, b)| a * b).sum();
        u.iter_mut().zip(axis).for_each(|(a, b)| *a -= along * b);
        let norm = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            u.iter_mut().for_each(|a| *a /= norm);
            break u;
        }
    };
    axis.iter()
        .zip(&u)
        .map(|(a, o)| r * (psi.cos() * a + psi.sin() * o))
        .collect()
}

fn push_cone_points(p: &mut Proposal, axis: &[f64], count: usize, phi: f64, rng: &mut impl Rng) {
    let n = axis.len();
    let half = 0.5 * phi;
    let min_cos = half.cos();
    for _ in 0..count {
        let mut offset = None;
        for _ in 0..CONE_REJECTION_TRIES {
            let v = uniform_in_ball(n, p.epsilon, rng);
            if cosine(&v, axis) >= min_cos {
                offset = Some(v);
                break;
            }
        }
        let offset = offset.unwrap_or_else(|| {
            p.direct_cone_draws += 1;
            direct_cone_offset(axis, p.epsilon, half, rng)
        });
        p.points
            .push(p.center.iter().zip(&offset).map(|(c, o)| c + o).collect());
        p.kinds.push(PointKind::Cone);
    }
}

/// `m` points uniform in the intersection of the `ε`-ball and the cone of
/// full aperture `phi` with apex `center` and axis `-g_prev`.
pub fn explore_cone(
    center: &[f64],
    epsilon: f64,
    m: usize,
    g_prev: &[f64],
    phi: f64,
    rng: &mut impl Rng,
) -> Result<Proposal> {
    let axis = unit_axis(g_prev)?;
    let mut p = Proposal::new(center, epsilon, m);
    push_cone_points(&mut p, &axis, m, phi, rng);
    Ok(p)
}

/// `⌈m/2⌉` cone points followed by `⌊m/2⌋` box points; all box points when
/// `g_prev` is zero.
pub fn explore_half_half(
    center: &[f64],
    epsilon: f64,
    m: usize,
    g_prev: &[f64],
    phi: f64,
    rng: &mut impl Rng,
) -> Proposal {
    let Ok(axis) = unit_axis(g_prev) else {
        return explore_ball(center, epsilon, m, rng);
    };
    let mut p = Proposal::new(center, epsilon, m);
    push_cone_points(&mut p, &axis, m.div_ceil(2), phi, rng);
    for _ in 0..m / 2 {
        p.points.push(box_point(center, epsilon, rng));
        p.kinds.push(PointKind::Box);
    }
    p
}

/// Angle test used for cone points.
pub fn in_cone(center: &[f64], x: &[f64], g_prev: &[f64], phi: f64) -> bool {
    let Ok(axis) = unit_axis(g_prev) else {
        return false;
    };
    let v: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    cosine(&v, &axis) >= (0.5 * phi).cos() - 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_radius_copies_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = explore_ball(&[1.0, -2.0], 0.0, 5, &mut rng);
        assert!(p.points.iter().all(|x| x == &vec![1.0, -2.0]));
    }

    #[test]
    fn zero_guide_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            explore_cone(&[0.0; 3], 1.0, 4, &[0.0; 3], 2.0, &mut rng),
            Err(Error::ZeroGradient)
        );
    }

    #[test]
    fn half_half_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = explore_half_half(&[0.0; 3], 1.0, 2, &[1.0, 0.0, 0.0], 2.0, &mut rng);
        assert_eq!(p.kinds, vec![PointKind::Cone, PointKind::Box]);
        let p = explore_half_half(&[0.0; 3], 1.0, 7, &[0.0; 3], 2.0, &mut rng);
        assert!(p.kinds.iter().all(|k| *k == PointKind::Box));
        assert_eq!(p.len(), 7);
    }

    #[test]
    fn direct_sampler_respects_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let axis = [0.0, 0.6, 0.8, 0.0, 0.0, 0.0];
        for _ in 0..500 {
            let v = direct_cone_offset(&axis, 0.5, 0.3, &mut rng);
            assert!(cosine(&v, &axis) >= 0.3f64.cos() - 1e-12);
            assert!(v.iter().map(|a| a * a).sum::<f64>().sqrt() <= 0.5 + 1e-12);
        }
    }
}
