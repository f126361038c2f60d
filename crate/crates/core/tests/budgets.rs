//! Every optimizer under tiny and boundary budgets.

use egl::baselines::{nelder_mead, random_search, DEFAULT_SIMPLEX_SCALE};
use egl::objectives::{make_benchmark, BudgetedObjective};
use egl::optimizer::{
    run_convergent_egl, run_egl, run_igl, ConvergentEglConfig, EglConfig, GradientSource,
};
use egl::RunRecord;

const OPTIMIZERS: [&str; 6] = [
    "egl",
    "igl",
    "convergent_ls",
    "convergent_nn",
    "nelder_mead",
    "random_search",
];

fn run(name: &str, budget: usize, seed: u64) -> RunRecord {
    let obj = make_benchmark("ellipsoid", 2, 1).unwrap();
    let mut obj = BudgetedObjective::new(obj, budget);
    let x0 = [1.5, -2.5];
    let cfg = EglConfig {
        m: 8,
        ..EglConfig::light(2)
    };
    let convergent = |source| {
        let mut cfg = ConvergentEglConfig::default();
        cfg.network.width = 16;
        cfg.network.res_blocks = 1;
        cfg.trainer.n_minibatches = 5;
        move |obj: &mut BudgetedObjective| {
            run_convergent_egl(&cfg, obj, &x0, source, seed).map(|r| r.record)
        }
    };
    match name {
        "egl" => run_egl(&cfg, &mut obj, &x0, seed),
        "igl" => run_igl(&cfg, &mut obj, &x0, seed),
        "convergent_ls" => convergent(GradientSource::LeastSquares)(&mut obj),
        "convergent_nn" => convergent(GradientSource::Network)(&mut obj),
        "nelder_mead" => nelder_mead(&mut obj, &x0, DEFAULT_SIMPLEX_SCALE, seed),
        "random_search" => random_search(&mut obj, seed),
        _ => unreachable!(),
    }
    .unwrap()
}

#[test]
fn tiny_budgets_are_respected() {
    for name in OPTIMIZERS {
        for budget in 1..=10 {
            let rec = run(name, budget, 0);
            assert!(rec.evaluations_used <= budget, "{name} at {budget}");
            assert!(rec.evaluations_used >= 1, "{name} at {budget}");
            assert_eq!(rec.trace.len(), rec.evaluations_used);
            assert!(rec.y_best.is_finite());
        }
    }
}

#[test]
fn reruns_are_identical() {
    for name in OPTIMIZERS {
        for seed in 0..3 {
            let (a, b) = (run(name, 300, seed), run(name, 300, seed));
            assert_eq!(a.to_csv_string(), b.to_csv_string(), "{name}");
            assert_eq!(a, b, "{name}");
        }
    }
}
