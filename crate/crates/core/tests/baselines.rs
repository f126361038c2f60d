use egl::baselines::{nelder_mead, random_search, DEFAULT_SIMPLEX_SCALE};
use egl::objectives::functions::sphere;
use egl::objectives::{make_benchmark, BudgetedObjective, Objective};

fn sphere_2d() -> Objective {
    Objective::new("sphere", vec![(-5.0, 5.0); 2], sphere)
}

#[test]
fn random_search_hits_the_sublevel_disk() {
    // Per-draw chance of landing in {‖x‖² ≤ 0.1}: disk area over box area.
    let p = std::f64::consts::PI * 0.1 / 100.0;
    let hit = 1.0 - (1.0 - p).powi(10_000);
    assert!(hit >= 0.95, "analytic probability {hit}");
    let successes = (0..20)
        .filter(|&seed| {
            let mut obj = BudgetedObjective::new(sphere_2d(), 10_000);
            random_search(&mut obj, seed).unwrap().y_best <= 0.1
        })
        .count();
    // With hit ≈ 1 - 2e-14 every seed succeeds.
    assert_eq!(successes, 20);
}

#[test]
fn random_search_uses_the_whole_budget_monotonically() {
    let mut obj = BudgetedObjective::new(sphere_2d(), 500);
    let rec = random_search(&mut obj, 3).unwrap();
    assert_eq!(rec.evaluations_used, 500);
    for w in rec.trace.windows(2) {
        assert!(w[1].y_best <= w[0].y_best);
    }
}

#[test]
fn nelder_mead_follows_an_affine_slope_to_the_corner() {
    let obj = Objective::new("affine", vec![(-5.0, 5.0); 2], |x: &[f64]| {
        x[0] + 2.0 * x[1]
    });
    let mut obj = BudgetedObjective::new(obj, 400);
    let rec = nelder_mead(&mut obj, &[1.0, 1.0], DEFAULT_SIMPLEX_SCALE, 0).unwrap();
    assert!((rec.y_best - -15.0).abs() <= 1e-6, "y_best {}", rec.y_best);
    assert!(rec.x_best.iter().all(|v| (v + 5.0).abs() <= 1e-6));
}

#[test]
fn nelder_mead_is_deterministic_and_budgeted() {
    let run = || {
        let mut obj = BudgetedObjective::new(make_benchmark("rosenbrock", 3, 2).unwrap(), 777);
        nelder_mead(&mut obj, &[0.5, -0.5, 1.0], DEFAULT_SIMPLEX_SCALE, 9).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a.evaluations_used, 777);
    assert!(a.y_best < a.trace[0].y);
}

#[test]
fn nelder_mead_with_only_the_initial_simplex() {
    let mut obj = BudgetedObjective::new(sphere_2d(), 3);
    let rec = nelder_mead(&mut obj, &[1.0, 2.0], 0.1, 0).unwrap();
    assert_eq!(rec.evaluations_used, 3);
    let best = rec.trace.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    assert_eq!(rec.y_best, best);
}
