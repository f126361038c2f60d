use egl::gradnet::{train_value_model, PairLossConfig, ValueModel};
use egl::nn::Activation;
use egl::objectives::functions::sphere;
use egl::objectives::{make_benchmark, BudgetedObjective, Objective};
use egl::optimizer::{
    run_convergent_egl, run_egl, run_igl, ConvergentEglConfig, EglConfig, GradientSource,
    SUFFICIENT_DECREASE,
};
use egl::{EvalPoint, ExplorationBatch, PointKind, ReplayBuffer, RunEvent, RunRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn sphere_2d() -> Objective {
    Objective::new("sphere", vec![(-5.0, 5.0); 2], sphere).with_optimum(vec![0.0; 2], 0.0)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn start(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    (0..2).map(|_| rng.random_range(-5.0..5.0)).collect()
}

fn assert_well_formed(rec: &RunRecord, budget: usize) {
    assert!(rec.evaluations_used <= budget);
    assert_eq!(rec.trace.len(), rec.evaluations_used);
    for w in rec.trace.windows(2) {
        assert!(w[1].y_best <= w[0].y_best);
    }
    let min = rec.trace.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    assert_eq!(rec.y_best, min);
}

#[test]
fn egl_solves_the_2d_sphere() {
    let mut finals = Vec::new();
    for seed in 0..10 {
        let cfg = EglConfig::light(2);
        let mut obj = BudgetedObjective::new(sphere_2d(), 5000);
        let rec = run_egl(&cfg, &mut obj, &start(seed), seed).unwrap();
        assert_well_formed(&rec, 5000);
        finals.push(rec.y_best);
    }
    let med = median(finals);
    assert!(med <= 1e-3, "median y_best {med}");
}

#[test]
#[ignore = "full-size surrogate takes several minutes on one core"]
fn egl_solves_the_2d_sphere_with_default_surrogate() {
    let mut finals = Vec::new();
    for seed in 0..10 {
        let mut obj = BudgetedObjective::new(sphere_2d(), 5000);
        finals.push(
            run_egl(&EglConfig::for_dim(2), &mut obj, &start(seed), seed)
                .unwrap()
                .y_best,
        );
    }
    assert!(median(finals) <= 1e-3);
}

#[test]
fn warmup_only_budget_takes_no_descent_step() {
    let cfg = EglConfig::light(2);
    let budget = cfg.warmup_evaluations();
    let mut obj = BudgetedObjective::new(sphere_2d(), budget);
    let rec = run_egl(&cfg, &mut obj, &[2.0, 1.0], 3).unwrap();
    assert_eq!(rec.evaluations_used, budget);
    assert_well_formed(&rec, budget);
    assert!(!rec
        .events
        .iter()
        .any(|e| matches!(e, RunEvent::TrustRegionShrink { .. })));

    // One more evaluation is exactly enough to start exploring, not to step.
    let mut obj = BudgetedObjective::new(sphere_2d(), budget + 1);
    let rec = run_egl(&cfg, &mut obj, &[2.0, 1.0], 3).unwrap();
    assert_eq!(rec.evaluations_used, budget + 1);
}

#[test]
fn egl_and_igl_are_deterministic() {
    let cfg = EglConfig::light(2);
    let run = |igl: bool, seed| {
        let obj = make_benchmark("rosenbrock", 2, 1).unwrap();
        let mut obj = BudgetedObjective::new(obj, 1500);
        if igl {
            run_igl(&cfg, &mut obj, &[1.0, -2.0], seed).unwrap()
        } else {
            run_egl(&cfg, &mut obj, &[1.0, -2.0], seed).unwrap()
        }
    };
    for igl in [false, true] {
        let (a, b) = (run(igl, 5), run(igl, 5));
        assert_eq!(a, b);
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_ne!(a.trace, run(igl, 6).trace);
    }
}

#[test]
fn trust_region_shrinks_scale_by_the_configured_factors() {
    let cfg = EglConfig {
        n_min: 5,
        n_max: 3,
        ..EglConfig::light(2)
    };
    let obj = make_benchmark("rastrigin", 2, 1).unwrap();
    let mut obj = BudgetedObjective::new(obj, 6000);
    let rec = run_egl(&cfg, &mut obj, &[3.0, 3.0], 2).unwrap();
    assert_well_formed(&rec, 6000);
    let shrinks: Vec<(&Vec<f64>, f64)> = rec
        .events
        .iter()
        .filter_map(|e| match e {
            RunEvent::TrustRegionShrink {
                widths, epsilon, ..
            } => Some((widths, *epsilon)),
            _ => None,
        })
        .collect();
    assert!(shrinks.len() >= 2, "only {} shrinks", shrinks.len());
    let mut prev_widths = vec![10.0, 10.0];
    let mut prev_eps = cfg.epsilon_for(2);
    for (widths, eps) in shrinks {
        for (w, p) in widths.iter().zip(&prev_widths) {
            assert!((w - cfg.gamma_alpha * p).abs() <= 1e-12 * p);
        }
        assert!((eps - cfg.gamma_epsilon * prev_eps).abs() <= 1e-12 * prev_eps);
        prev_widths = widths.clone();
        prev_eps = eps;
    }
}

#[test]
fn igl_reduces_the_2d_sphere() {
    let mut ratios = Vec::new();
    for seed in 0..10 {
        let x0 = start(seed);
        let y0 = sphere(&x0);
        let mut obj = BudgetedObjective::new(sphere_2d(), 5000);
        let rec = run_igl(&EglConfig::light(2), &mut obj, &x0, seed).unwrap();
        assert_well_formed(&rec, 5000);
        ratios.push(rec.y_best / y0);
    }
    let med = median(ratios);
    assert!(med < 1e-2, "median y_best / y0 = {med}");
}

#[test]
fn value_model_gradient_recovers_an_affine_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c = [0.8, -0.4, 0.3];
    let mut rb = ReplayBuffer::new(32);
    for _ in 0..32 {
        let center: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
        let mut batch = ExplorationBatch::new(center.clone(), 0.5);
        for _ in 0..64 {
            let x: Vec<f64> = center
                .iter()
                .map(|v| v + rng.random_range(-0.5..0.5))
                .collect();
            let y = x.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() + 0.1;
            batch.push(EvalPoint::new(x, y).unwrap(), PointKind::Box);
        }
        rb.push_batch(batch);
    }
    // A smooth activation: relu features fit the values but leave kinks in the slope.
    let mut spec = EglConfig::for_dim(3).network.network(3, 1);
    spec.hidden = vec![32];
    spec.res_blocks = 1;
    spec.activation = Activation::Tanh;
    let mut model = ValueModel::new(spec, 1e-2, &mut rng).unwrap();
    let cfg = PairLossConfig {
        minibatch_pairs: 4096,
        n_minibatches: 2000,
        ..PairLossConfig::for_dim(3)
    };
    train_value_model(&mut model, &rb, &cfg, |y| y, &mut rng).unwrap();
    let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut errs = Vec::new();
    for _ in 0..20 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
        let g = model.input_gradient(&x).unwrap();
        let err = g
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        errs.push(err / c_norm);
    }
    let med = median(errs);
    assert!(med <= 5e-2, "median relative error {med}");
}

/// Random `f(x) = (x - c)ᵀ Q (x - c)` with `Q = BᵀB/n + 0.1 I`.
fn random_quadratic(n: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let dot: f64 = (0..n).map(|k| b[k][i] * b[k][j]).sum();
                    dot / n as f64 + if i == j { 0.1 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let c = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    (q, c)
}

fn quad_grad(q: &[Vec<f64>], c: &[f64], x: &[f64]) -> Vec<f64> {
    q.iter()
        .map(|row| {
            2.0 * row
                .iter()
                .zip(x)
                .zip(c)
                .map(|((q, x), c)| q * (x - c))
                .sum::<f64>()
        })
        .collect()
}

#[test]
fn convergent_egl_meets_the_terminal_gradient_bound() {
    let n = 5;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (q, c) = random_quadratic(n, &mut rng);
        let (qf, cf) = (q.clone(), c.clone());
        let f = move |x: &[f64]| {
            let d: Vec<f64> = x.iter().zip(&cf).map(|(a, b)| a - b).collect();
            qf.iter()
                .zip(&d)
                .map(|(row, di)| di * row.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>())
                .sum()
        };
        let obj = Objective::new("quadratic", vec![(-5.0, 5.0); n], f);
        let mut obj = BudgetedObjective::new(obj, 1_000_000);
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let cfg = ConvergentEglConfig::default();
        let run =
            run_convergent_egl(&cfg, &mut obj, &x0, GradientSource::LeastSquares, seed).unwrap();
        assert!(run.converged);
        let g = quad_grad(&q, &c, &run.x_final);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(
            gnorm <= 5.0 * run.epsilon / run.alpha,
            "seed {seed}: {gnorm}"
        );
        check_sufficient_decrease(&run.record);
    }
}

fn check_sufficient_decrease(rec: &RunRecord) {
    for e in &rec.events {
        if let RunEvent::SufficientDecrease {
            f_old,
            f_new,
            epsilon,
            alpha,
            passed,
            ..
        } = e
        {
            let ok = *f_new <= f_old - SUFFICIENT_DECREASE * epsilon * epsilon / alpha;
            assert_eq!(ok, *passed);
        }
    }
}

#[test]
fn convergent_egl_descends_monotonically_on_affine_functions() {
    let obj = Objective::new("affine", vec![(-5.0, 5.0); 3], |x: &[f64]| {
        0.5 * x[0] - 0.2 * x[1] + 0.1 * x[2]
    });
    let mut obj = BudgetedObjective::new(obj, 20_000);
    let cfg = ConvergentEglConfig::default();
    let run =
        run_convergent_egl(&cfg, &mut obj, &[0.0; 3], GradientSource::LeastSquares, 1).unwrap();
    check_sufficient_decrease(&run.record);
    let accepted: Vec<(f64, f64)> = run
        .record
        .events
        .iter()
        .filter_map(|e| match e {
            RunEvent::SufficientDecrease {
                f_old,
                f_new,
                passed: true,
                ..
            } => Some((*f_old, *f_new)),
            _ => None,
        })
        .collect();
    assert!(!accepted.is_empty());
    for w in accepted.windows(2) {
        assert!(w[0].1 < w[0].0);
        assert!(w[1].0 <= w[0].1);
    }
}

#[test]
fn convergent_egl_with_no_room_returns_the_start() {
    let cfg = ConvergentEglConfig {
        epsilon_bar: 0.1,
        ..ConvergentEglConfig::default()
    };
    let mut obj = BudgetedObjective::new(sphere_2d(), 100);
    let run =
        run_convergent_egl(&cfg, &mut obj, &[1.0, 2.0], GradientSource::LeastSquares, 0).unwrap();
    assert_eq!(run.iterations, 0);
    assert_eq!(run.x_final, vec![1.0, 2.0]);
}

#[test]
fn convergent_egl_with_a_network_makes_progress() {
    let mut cfg = ConvergentEglConfig::default();
    cfg.network.width = 32;
    cfg.network.res_blocks = 1;
    let mut obj = BudgetedObjective::new(sphere_2d(), 3000);
    let run = run_convergent_egl(&cfg, &mut obj, &[3.0, -2.0], GradientSource::Network, 4).unwrap();
    check_sufficient_decrease(&run.record);
    assert!(run.f_final < 13.0 * 0.1, "f_final {}", run.f_final);
}
