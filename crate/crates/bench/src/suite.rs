//! Running optimizer × problem × seed grids and writing their results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use egl::baselines::{nelder_mead, random_search};
use egl::objectives::{BudgetedObjective, Objective};
use egl::optimizer::{run_convergent_egl, run_egl, run_igl, GradientSource};
use egl::record::{read_trace_csv, Sidecar};
use egl::rng::{stream, RngStream};
use egl::RunRecord;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Resolved, SuiteConfig};
use crate::metrics::{geometric_indices, iqr, median, scaled_distance_curve, success};
use crate::BenchError;

pub const SUMMARY_HEADER: &str =
    "problem,optimizer,seed_count,y_best_median,y_best_iqr,success_rate,evals,y_star_ref,success_rate_analytic";

/// Start point of `seed` on a problem: uniform in the domain.
pub fn start_point(obj: &Objective, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, RngStream::StartPoint);
    obj.bounds
        .iter()
        .map(|(l, u)| rng.random_range(*l..=*u))
        .collect()
}

/// Runs one optimizer on one problem from `x0`.
pub fn run_one(
    resolved: &Resolved,
    obj: Objective,
    budget: usize,
    x0: &[f64],
    seed: u64,
) -> Result<RunRecord, BenchError> {
    let mut b = BudgetedObjective::new(obj, budget);
    let rec = match resolved {
        Resolved::Egl(cfg) => run_egl(cfg, &mut b, x0, seed)?,
        Resolved::Igl(cfg) => run_igl(cfg, &mut b, x0, seed)?,
        Resolved::Convergent(cfg) => {
            run_convergent_egl(cfg, &mut b, x0, GradientSource::LeastSquares, seed)?.record
        }
        Resolved::NelderMead { scale } => nelder_mead(&mut b, x0, *scale, seed)?,
        Resolved::RandomSearch => random_search(&mut b, seed)?,
    };
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub problem: String,
    pub optimizer: String,
    pub seed: u64,
    pub y0: f64,
    pub outcome: Result<RunRecord, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub optimizer: String,
    pub seed_count: usize,
    pub y_best_median: f64,
    pub y_best_iqr: f64,
    pub success_rate: f64,
    pub evals: usize,
    pub y_star_ref: f64,
    pub success_rate_analytic: Option<f64>,
}

impl SummaryRow {
    pub fn to_csv_line(&self) -> String {
        let analytic = self
            .success_rate_analytic
            .map(|v| v.to_string())
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.problem,
            self.optimizer,
            self.seed_count,
            self.y_best_median,
            self.y_best_iqr,
            self.success_rate,
            self.evals,
            self.y_star_ref,
            analytic
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub cells: Vec<CellResult>,
    /// Best value seen by any run, per problem.
    pub y_star_ref: BTreeMap<String, f64>,
    pub y_star_analytic: BTreeMap<String, f64>,
    pub summary: Vec<SummaryRow>,
    pub config_hash: String,
}

impl SuiteResult {
    pub fn failures(&self) -> impl Iterator<Item = &CellResult> + '_ {
        self.cells.iter().filter(|c| c.outcome.is_err())
    }

    pub fn summary_csv(&self) -> String {
        summary_csv(&self.summary)
    }

    /// Success rate of `optimizer` on `problem` against the suite-wide y*.
    pub fn success_rate(&self, problem: &str, optimizer: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.problem == problem && r.optimizer == optimizer)
            .map(|r| r.success_rate)
    }

    /// Median final `Δy_best` of `optimizer` on `problem`.
    pub fn median_final_delta(&self, problem: &str, optimizer: &str) -> Option<f64> {
        let y_star = *self.y_star_ref.get(problem)?;
        let finals: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.problem == problem && c.optimizer == optimizer)
            .filter_map(|c| c.outcome.as_ref().ok().map(|r| (c.y0, r)))
            .map(|(y0, r)| {
                scaled_distance_curve(&r.trace, y0, y_star)
                    .last()
                    .copied()
                    .unwrap_or(1.0)
            })
            .collect();
        (!finals.is_empty()).then(|| median(&finals))
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// One finished run as seen by the summary: enough to recompute every column.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummaryInput {
    pub problem: String,
    pub optimizer: String,
    pub y0: f64,
    pub y_best: f64,
    pub evaluations_used: usize,
}

/// Groups runs by (problem, optimizer) in first-seen order and computes the
/// summary rows; `y_star_ref` is the minimum `y_best` per problem.
pub fn summarize_runs(
    runs: &[RunSummaryInput],
    y_star_analytic: &BTreeMap<String, f64>,
) -> (Vec<SummaryRow>, BTreeMap<String, f64>) {
    let mut y_star_ref: BTreeMap<String, f64> = BTreeMap::new();
    for r in runs {
        let e = y_star_ref.entry(r.problem.clone()).or_insert(f64::INFINITY);
        *e = e.min(r.y_best);
    }
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in runs {
        let k = (r.problem.as_str(), r.optimizer.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let rows = keys
        .into_iter()
        .map(|(problem, optimizer)| {
            let group: Vec<&RunSummaryInput> = runs
                .iter()
                .filter(|r| r.problem == problem && r.optimizer == optimizer)
                .collect();
            let y_star = y_star_ref[problem];
            let rate = |y_star: f64| {
                group
                    .iter()
                    .filter(|r| success(r.y_best, r.y0, y_star))
                    .count() as f64
                    / group.len() as f64
            };
            let bests: Vec<f64> = group.iter().map(|r| r.y_best).collect();
            let evals: Vec<f64> = group.iter().map(|r| r.evaluations_used as f64).collect();
            SummaryRow {
                problem: problem.to_string(),
                optimizer: optimizer.to_string(),
                seed_count: group.len(),
                y_best_median: median(&bests),
                y_best_iqr: iqr(&bests),
                success_rate: rate(y_star),
                evals: median(&evals).round() as usize,
                y_star_ref: y_star,
                success_rate_analytic: y_star_analytic.get(problem).map(|&y| rate(y)),
            }
        })
        .collect();
    (rows, y_star_ref)
}

/// Runs every (problem, optimizer, seed) cell, in parallel, with results in
/// config order. Failed cells are kept with their error message.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteResult, BenchError> {
    cfg.validate()?;
    let problems = cfg.problems()?;
    let mut jobs = Vec::new();
    for id in &problems {
        for opt in &cfg.optimizers {
            for &seed in &cfg.seeds {
                jobs.push((id, opt, seed));
            }
        }
    }
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(id, opt, seed)| {
            let problem = id.to_string();
            let obj = id.build();
            let (y0, outcome) = match obj {
                Err(e) => (f64::NAN, Err(e.to_string())),
                Ok(obj) => {
                    let x0 = start_point(&obj, seed);
                    let y0 = obj.eval(&x0);
                    let outcome = opt
                        .resolve(id.dim)
                        .and_then(|r| run_one(&r, obj, cfg.budget, &x0, seed))
                        .map_err(|e| e.to_string());
                    (y0, outcome)
                }
            };
            CellResult {
                problem,
                optimizer: opt.name.clone(),
                seed,
                y0,
                outcome,
            }
        })
        .collect();

    let mut y_star_analytic = BTreeMap::new();
    for id in &problems {
        if let Some(y) = id.build()?.y_star {
            y_star_analytic.insert(id.to_string(), y);
        }
    }
    let inputs: Vec<RunSummaryInput> = cells
        .iter()
        .filter_map(|c| {
            c.outcome.as_ref().ok().map(|r| RunSummaryInput {
                problem: c.problem.clone(),
                optimizer: c.optimizer.clone(),
                y0: c.y0,
                y_best: r.y_best,
                evaluations_used: r.evaluations_used,
            })
        })
        .collect();
    let (summary, y_star_ref) = summarize_runs(&inputs, &y_star_analytic);
    Ok(SuiteResult {
        cells,
        y_star_ref,
        y_star_analytic,
        summary,
        config_hash: cfg.hash(),
    })
}

fn path_safe(problem: &str) -> String {
    problem.replace(':', "_")
}

pub fn run_paths(out: &Path, problem: &str, optimizer: &str, seed: u64) -> (PathBuf, PathBuf) {
    let dir = out.join("runs").join(path_safe(problem)).join(optimizer);
    (
        dir.join(format!("seed{seed}.csv")),
        dir.join(format!("seed{seed}.json")),
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct SuiteManifest {
    config_hash: String,
    y_star_ref: BTreeMap<String, f64>,
    y_star_analytic: BTreeMap<String, f64>,
    failures: Vec<FailureNote>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FailureNote {
    problem: String,
    optimizer: String,
    seed: u64,
    error: String,
}

/// Writes per-run traces and sidecars, `summary.csv`, averaged curves under
/// `curves/` and `suite.json`.
pub fn write_results(result: &SuiteResult, out: &Path) -> Result<(), BenchError> {
    let mut failures = Vec::new();
    for c in &result.cells {
        let rec = match &c.outcome {
            Ok(rec) => rec,
            Err(e) => {
                failures.push(FailureNote {
                    problem: c.problem.clone(),
                    optimizer: c.optimizer.clone(),
                    seed: c.seed,
                    error: e.clone(),
                });
                continue;
            }
        };
        let (csv, json) = run_paths(out, &c.problem, &c.optimizer, c.seed);
        fs::create_dir_all(csv.parent().expect("run path has a parent"))?;
        rec.write_csv(&csv)?;
        let mut side: Sidecar = rec.sidecar(&result.config_hash);
        side.extra
            .insert("problem".into(), c.problem.clone().into());
        side.extra
            .insert("optimizer".into(), c.optimizer.clone().into());
        side.extra.insert("y0".into(), c.y0.into());
        side.extra
            .insert("y_star_ref".into(), result.y_star_ref[&c.problem].into());
        if let Some(y) = result.y_star_analytic.get(&c.problem) {
            side.extra.insert("y_star_analytic".into(), (*y).into());
        }
        side.write(&json)?;
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("summary.csv"), result.summary_csv())?;
    write_curves(result, &out.join("curves"))?;
    let manifest = SuiteManifest {
        config_hash: result.config_hash.clone(),
        y_star_ref: result.y_star_ref.clone(),
        y_star_analytic: result.y_star_analytic.clone(),
        failures,
    };
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| BenchError::Io(e.to_string()))?;
    fs::write(out.join("suite.json"), text)?;
    Ok(())
}

/// Seed-averaged `Δy_best` per problem, one column per optimizer, sampled on
/// a geometric grid of evaluation indices.
fn write_curves(result: &SuiteResult, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir)?;
    for (problem, &y_star) in &result.y_star_ref {
        let grid_len = result
            .cells
            .iter()
            .filter(|c| &c.problem == problem)
            .filter_map(|c| c.outcome.as_ref().ok().map(|r| r.trace.len()))
            .max()
            .unwrap_or(0);
        let optimizers: Vec<&str> = {
            let mut v: Vec<&str> = Vec::new();
            for c in result.cells.iter().filter(|c| &c.problem == problem) {
                if !v.contains(&c.optimizer.as_str()) {
                    v.push(&c.optimizer);
                }
            }
            v
        };
        let mut text = String::from("t");
        for o in &optimizers {
            write!(text, ",{o}").expect("writing to a String");
        }
        text.push('\n');
        let curves: Vec<Vec<Vec<f64>>> = optimizers
            .iter()
            .map(|o| {
                result
                    .cells
                    .iter()
                    .filter(|c| &c.problem == problem && c.optimizer == *o)
                    .filter_map(|c| {
                        c.outcome
                            .as_ref()
                            .ok()
                            .map(|r| scaled_distance_curve(&r.trace, c.y0, y_star))
                    })
                    .collect()
            })
            .collect();
        for t in geometric_indices(grid_len) {
            write!(text, "{t}").expect("writing to a String");
            for runs in &curves {
                // A finished run keeps its final value.
                let vals: Vec<f64> = runs
                    .iter()
                    .filter_map(|c| c.get(t - 1).or(c.last()).copied())
                    .collect();
                if vals.is_empty() {
                    text.push(',');
                } else {
                    write!(text, ",{}", vals.iter().sum::<f64>() / vals.len() as f64)
                        .expect("writing to a String");
                }
            }
            text.push('\n');
        }
        fs::write(dir.join(format!("{}.csv", path_safe(problem))), text)?;
    }
    Ok(())
}

/// Rebuilds the summary from the traces and sidecars under `dir/runs`.
pub fn summarize_dir(dir: &Path) -> Result<Vec<SummaryRow>, BenchError> {
    let mut sidecars = Vec::new();
    collect_json(&dir.join("runs"), &mut sidecars)?;
    sidecars.sort();
    let mut inputs = Vec::new();
    let mut analytic = BTreeMap::new();
    for path in sidecars {
        let side = Sidecar::read(&path)?;
        let field = |k: &str| side.extra.get(k).cloned();
        let text = |k: &str| -> Result<String, BenchError> {
            field(k)
                .and_then(|v| v.as_str().map(str::to_string))
                .ok_or_else(|| BenchError::Config(format!("{}: missing `{k}`", path.display())))
        };
        let problem = text("problem")?;
        let optimizer = text("optimizer")?;
        let y0 = field("y0")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| BenchError::Config(format!("{}: missing `y0`", path.display())))?;
        if let Some(y) = field("y_star_analytic").and_then(|v| v.as_f64()) {
            analytic.insert(problem.clone(), y);
        }
        let trace = read_trace_csv(&path.with_extension("csv"))?;
        let y_best = trace.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        inputs.push(RunSummaryInput {
            problem,
            optimizer,
            y0,
            y_best,
            evaluations_used: trace.len(),
        });
    }
    if inputs.is_empty() {
        return Err(BenchError::Config(format!(
            "no run sidecars under {}",
            dir.join("runs").display()
        )));
    }
    Ok(summarize_runs(&inputs, &analytic).0)
}

fn collect_json(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), BenchError> {
    if !dir.is_dir() {
        return Ok(());
    }
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_json(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    Ok(())
}
