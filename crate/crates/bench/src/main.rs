use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use egl::objectives::Family;
use egl::record::{read_trace_csv, Sidecar};
use egl_bench::config::{OptimizerKind, PRESETS};
use egl_bench::metrics::{geometric_indices, scaled_distance_curve};
use egl_bench::suite::summary_csv;
use egl_bench::{run_suite, summarize_dir, write_results, SuiteConfig};

#[derive(Parser)]
#[command(name = "bench", about = "Run and score black-box optimizer suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite and write traces, summary and curves.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List benchmark families, optimizer kinds and presets.
    List,
    /// Print the scaled-distance curve of one run trace.
    Curve {
        #[arg(long)]
        run: PathBuf,
        /// Start value; read from the run's sidecar when omitted.
        #[arg(long)]
        y0: Option<f64>,
        /// Reference optimum; read from the run's sidecar when omitted.
        #[arg(long)]
        y_star: Option<f64>,
        /// Emit every evaluation instead of the geometric grid.
        #[arg(long)]
        full: bool,
    },
    /// Recompute the summary table from the run files in a results directory.
    Summarize {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            threads,
        } => {
            let cfg = SuiteConfig::load(&config)?;
            let out = match out.or_else(|| cfg.output_dir.clone()) {
                Some(out) => out,
                None => bail!("no output directory: pass --out or set output_dir"),
            };
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .context("configuring worker threads")?;
            }
            let result = run_suite(&cfg)?;
            write_results(&result, &out)?;
            for f in result.failures() {
                eprintln!(
                    "run failed: {} {} seed {}: {}",
                    f.problem,
                    f.optimizer,
                    f.seed,
                    f.outcome.as_ref().err().map_or("", String::as_str)
                );
            }
            print!("{}", result.summary_csv());
        }
        Command::List => {
            println!("benchmarks (use as name:dim:instance_seed):");
            for f in Family::ALL {
                println!("  {}", f.name());
            }
            println!("optimizer kinds:");
            for k in OptimizerKind::ALL {
                println!("  {}", k.name());
            }
            println!("egl/igl presets: {}", PRESETS.join(", "));
        }
        Command::Curve {
            run,
            y0,
            y_star,
            full,
        } => {
            let trace = read_trace_csv(&run)?;
            let side = Sidecar::read(&run.with_extension("json")).ok();
            let from_side = |key: &str| {
                side.as_ref()
                    .and_then(|s| s.extra.get(key))
                    .and_then(|v| v.as_f64())
            };
            let y0 = y0
                .or_else(|| from_side("y0"))
                .context("no y0: pass --y0 or keep the run's sidecar next to it")?;
            let y_star = y_star
                .or_else(|| from_side("y_star_ref"))
                .context("no y*: pass --y-star or keep the run's sidecar next to it")?;
            let curve = scaled_distance_curve(&trace, y0, y_star);
            let ts: Vec<usize> = if full {
                (1..=curve.len()).collect()
            } else {
                geometric_indices(curve.len())
            };
            println!("t,delta_y_best");
            for t in ts {
                println!("{t},{}", curve[t - 1]);
            }
        }
        Command::Summarize { dir } => {
            let rows = summarize_dir(&dir)?;
            print!("{}", summary_csv(&rows));
        }
    }
    Ok(())
}
