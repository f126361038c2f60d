use egl::gradnet::ls_mean_gradient;
use egl::mappings::{
    recover_gradient, recover_gradient_linear, shrink_trust_region, squash, unsquash, InputMap,
    OutputMap, TrustRegion,
};
use egl::{EvalPoint, ExplorationBatch, PointKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn squash_is_continuous_at_the_branch_points() {
    for s in [-1.0, 1.0] {
        let below = squash(s * (1.0 - 1e-12));
        let above = squash(s * (1.0 + 1e-12));
        assert!((below - above).abs() <= 1e-9);
    }
}

fn region(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0f64..4.0, 0.01f64..1.0), n).prop_map(|v| {
        v.into_iter()
            .map(|(l, frac)| (l, l + frac * (5.0 - l)))
            .collect()
    })
}

proptest! {
    #[test]
    fn squash_is_strictly_increasing(a in -1e6f64..1e6, d in 1e-6f64..1e3) {
        prop_assert!(squash(a + d) > squash(a));
    }

    #[test]
    fn squash_round_trips(x in -1e6f64..1e6) {
        prop_assert!((unsquash(squash(x)) - x).abs() <= 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn output_map_round_trips_within_ten_spans(
        ys in prop::collection::vec(-100.0f64..100.0, 3..40),
        t in -10.0f64..10.0,
    ) {
        let mut om = OutputMap::new(0.1);
        om.fit(&ys).unwrap();
        let span = om.q_high - om.q_low;
        let y = om.q_low + t * span;
        prop_assert!((om.inverse(om.forward(y)) - y).abs() <= 1e-9 * y.abs().max(span).max(1.0));
        prop_assert!(om.forward(y + 1e-6 * span) > om.forward(y));
    }

    #[test]
    fn input_map_round_trips_and_is_monotone(
        bounds in region(3),
        fracs in prop::collection::vec(0.01f64..0.99, 3),
        bump in 1e-4f64..1e-2,
    ) {
        let map = InputMap::new(TrustRegion::new(bounds.clone()).unwrap());
        let x: Vec<f64> = bounds.iter().zip(&fracs).map(|((l, u), f)| l + f * (u - l)).collect();
        let back = map.inverse(&map.forward(&x));
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
        let fx = map.forward(&x);
        for i in 0..3 {
            let mut y = x.clone();
            y[i] += bump * (bounds[i].1 - bounds[i].0);
            if y[i] < bounds[i].1 {
                prop_assert!(map.forward(&y)[i] > fx[i]);
            }
        }
    }

    #[test]
    fn shrinking_stays_inside_the_domain(
        bounds in region(4),
        best in prop::collection::vec(-5.0f64..5.0, 4),
        gamma in 0.05f64..0.99,
    ) {
        let omega = vec![(-5.0, 5.0); 4];
        let tr = TrustRegion::new(bounds.clone()).unwrap();
        let shrunk = shrink_trust_region(&tr, &best, gamma, &omega);
        prop_assert_eq!(shrunk.generation, tr.generation + 1);
        for ((l, u), ((ol, ou), (gl, gu))) in shrunk.bounds.iter().zip(bounds.iter().zip(&omega)) {
            prop_assert!(*l >= *gl - 1e-12 && *u <= *gu + 1e-12);
            let expected = gamma * (ou - ol);
            prop_assert!(((u - l) - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }
}

/// Affine objective, linear input map `a x + b`, output map inside its linear
/// branch: the mapped least-squares gradient pulled back equals the raw one.
#[test]
fn linear_maps_preserve_the_mean_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in [1, 2, 4, 7] {
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let f = |x: &[f64]| x.iter().zip(&c).map(|(x, c)| x * c).sum::<f64>() - 2.0;
        let center: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

        let mut raw = ExplorationBatch::new(center.clone(), 0.1);
        for _ in 0..2 * n + 2 {
            let x: Vec<f64> = center
                .iter()
                .map(|c| c + rng.random_range(-0.1..0.1))
                .collect();
            let y = f(&x);
            raw.push(EvalPoint::new(x, y).unwrap(), PointKind::Box);
        }
        let ys: Vec<f64> = raw.points.iter().map(|p| p.y).collect();
        let mut om = OutputMap::new(0.1);
        om.fit(&ys).unwrap();
        // Widen the quantiles so every sample lands in the identity branch of the squash.
        let span = om.q_high - om.q_low;
        om.q_low -= 2.0 * span;
        om.q_high += 2.0 * span;

        let mapped_center: Vec<f64> = center
            .iter()
            .zip(&a)
            .zip(&b)
            .map(|((x, a), b)| a * x + b)
            .collect();
        let mut mapped = ExplorationBatch::new(mapped_center, 0.1);
        for p in &raw.points {
            assert!(om.forward(p.y).abs() < 1.0);
            let x: Vec<f64> =
                p.x.iter()
                    .zip(&a)
                    .zip(&b)
                    .map(|((x, a), b)| a * x + b)
                    .collect();
            mapped.push(EvalPoint::new(x, om.forward(p.y)).unwrap(), PointKind::Box);
        }
        let g_raw = ls_mean_gradient(&raw).unwrap().g_mse;
        let g_mapped = ls_mean_gradient(&mapped).unwrap().g_mse;
        let recovered = recover_gradient_linear(&g_mapped, &a, om.derivative(raw.points[0].y));
        for (r, g) in recovered.iter().zip(&g_raw) {
            assert!(
                (r - g).abs() <= 1e-8 * g.abs().max(1.0),
                "n={n}: {r} vs {g}"
            );
        }
    }
}

#[test]
fn recovery_uses_the_exact_map_derivatives() {
    let h = InputMap::new(TrustRegion::new(vec![(-2.0, 2.0), (0.0, 1.0)]).unwrap());
    let mut om = OutputMap::new(0.1);
    om.fit(&[0.0, 10.0]).unwrap();
    let x = [0.5, 0.25];
    let y = 3.0;
    let g = recover_gradient(&[1.0, -2.0], &h, &om, &x, y);
    // Independent derivatives: d/dx atanh(a x + b) = a / (1 - (a x + b)²), dr/dy = 2 / span.
    let span = om.q_high - om.q_low;
    let dr = 2.0 / span;
    let z0: f64 = 0.5 * 0.5;
    let z1: f64 = 2.0 * 0.25 - 1.0;
    let expected = [
        0.5 / (1.0 - z0 * z0) / dr,
        -2.0 * 2.0 / (1.0 - z1 * z1) / dr,
    ];
    for (a, b) in g.iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }
}
