use std::fs;
use std::path::Path;

use egl::record::read_trace_csv;
use egl_bench::config::SuiteConfig;
use egl_bench::metrics::{scaled_distance_curve, success};
use egl_bench::suite::{run_paths, summary_csv};
use egl_bench::{run_suite, summarize_dir, write_results, BenchError};
use proptest::prelude::*;

const ONE_CELL: &str = r#"
objectives = ["rosenbrock:2:4"]
seeds = [0, 1, 2]
budget = 400

[[optimizer]]
name = "egl"
kind = "egl"
preset = "light"
params = { m = 8 }
"#;

const MIXED: &str = r#"
objectives = ["sphere:2:1", "step_ellipsoid:3:2"]
seeds = [3, 4]
budget = 500

[[optimizer]]
name = "egl"
kind = "egl"
preset = "light"
params = { m = 8, n_min = 5 }

[[optimizer]]
name = "nm"
kind = "nelder_mead"

[[optimizer]]
name = "rs"
kind = "random_search"
"#;

fn files_under(dir: &Path, ext: &str) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files_under(&path, ext));
        } else if path.extension().is_some_and(|e| e == ext) {
            out.push(path);
        }
    }
    out.sort();
    out
}

#[test]
fn one_cell_gives_three_traces_and_one_row() {
    let cfg = SuiteConfig::from_toml(ONE_CELL).unwrap();
    let result = run_suite(&cfg).unwrap();
    assert_eq!(result.summary.len(), 1);
    assert_eq!(result.summary[0].seed_count, 3);
    let dir = tempfile::tempdir().unwrap();
    write_results(&result, dir.path()).unwrap();
    let traces = files_under(&dir.path().join("runs"), "csv");
    assert_eq!(traces.len(), 3);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn empty_lists_are_config_errors() {
    let no_optimizers = "objectives = [\"sphere:2:1\"]\nseeds = [0]\nbudget = 10\n";
    assert!(matches!(
        SuiteConfig::from_toml(no_optimizers),
        Err(BenchError::Config(_))
    ));
    let no_seeds = ONE_CELL.replace("seeds = [0, 1, 2]", "seeds = []");
    assert!(matches!(
        SuiteConfig::from_toml(&no_seeds),
        Err(BenchError::Config(_))
    ));
    let bad_param = ONE_CELL.replace("m = 8", "mm = 8");
    assert!(SuiteConfig::from_toml(&bad_param).is_err());
}

#[test]
fn reruns_write_identical_files() {
    let cfg = SuiteConfig::from_toml(MIXED).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_results(&run_suite(&cfg).unwrap(), a.path()).unwrap();
    write_results(&run_suite(&cfg).unwrap(), b.path()).unwrap();
    let files = |d: &Path| {
        let mut all = files_under(d, "csv");
        all.extend(files_under(d, "json"));
        all.into_iter()
            .map(|p| {
                (
                    p.strip_prefix(d).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                )
            })
            .collect::<Vec<_>>()
    };
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.len() > 12);
    assert_eq!(fa, fb);
}

#[test]
fn summary_matches_recomputation_from_traces() {
    let cfg = SuiteConfig::from_toml(MIXED).unwrap();
    let result = run_suite(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_results(&result, dir.path()).unwrap();

    // The harness's own recomputation from disk.
    let from_disk = summarize_dir(dir.path()).unwrap();
    let mut expected = result.summary.clone();
    expected.sort_by(|a, b| (&a.problem, &a.optimizer).cmp(&(&b.problem, &b.optimizer)));
    let mut got = from_disk.clone();
    got.sort_by(|a, b| (&a.problem, &a.optimizer).cmp(&(&b.problem, &b.optimizer)));
    assert_eq!(summary_csv(&got), summary_csv(&expected));

    // An independent count straight from the trace files.
    for row in &result.summary {
        let y_star = result.y_star_ref[&row.problem];
        let mut hits = 0;
        for &seed in &cfg.seeds {
            let (csv, _) = run_paths(dir.path(), &row.problem, &row.optimizer, seed);
            let trace = read_trace_csv(&csv).unwrap();
            let cell = result
                .cells
                .iter()
                .find(|c| {
                    c.problem == row.problem && c.optimizer == row.optimizer && c.seed == seed
                })
                .unwrap();
            let best = trace.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
            assert!(y_star <= best);
            let y0 = cell.y0;
            let d = best - y_star;
            let ok = if y0 > y_star {
                d <= 1.0 && d / (y0 - y_star) <= 1e-2
            } else {
                d <= 1.0
            };
            hits += ok as usize;
        }
        assert_eq!(row.success_rate, hits as f64 / cfg.seeds.len() as f64);
    }
}

#[test]
fn every_curve_is_monotone_in_the_unit_interval() {
    let cfg = SuiteConfig::from_toml(MIXED).unwrap();
    let result = run_suite(&cfg).unwrap();
    for cell in &result.cells {
        let rec = cell.outcome.as_ref().unwrap();
        let curve = scaled_distance_curve(&rec.trace, cell.y0, result.y_star_ref[&cell.problem]);
        assert_eq!(curve.len(), rec.trace.len());
        assert!(curve.iter().all(|d| (0.0..=1.0).contains(d)));
        assert!(curve.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let configs = files_under(&dir, "toml");
    assert!(configs.len() >= 3);
    for path in configs {
        SuiteConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

proptest! {
    #[test]
    fn success_never_flips_back_when_improving(
        y_star in -100.0f64..100.0,
        span in 1e-3f64..1e4,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let y0 = y_star + span;
        let (better, worse) = (y_star + a.min(b) * span, y_star + a.max(b) * span);
        if success(worse, y0, y_star) {
            prop_assert!(success(better, y0, y_star));
        }
    }
}
