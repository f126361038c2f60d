//! Per-run traces and their on-disk formats.
//!
//! A trace holds one row per objective evaluation. On disk it is a CSV with the
//! header `t,y,y_best` plus a JSON sidecar carrying the run summary.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// 1-based evaluation index.
    pub t: usize,
    pub y: f64,
    pub y_best: f64,
}

/// Notable things that happened during a run, kept in memory for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunEvent {
    /// A query within rounding distance of the domain was clamped onto it.
    BoundaryClamp { t: usize },
    /// An input map saturated and its argument was clamped before `arctanh`.
    InputClamp {
        iteration: usize,
        coordinates: usize,
    },
    /// A descent step was clamped to the mapped-space box.
    StepClamp { iteration: usize },
    /// The trust region was shrunk around the incumbent.
    TrustRegionShrink {
        iteration: usize,
        generation: usize,
        widths: Vec<f64>,
        epsilon: f64,
    },
    /// Outcome of a sufficient-decrease test in convergent EGL.
    SufficientDecrease {
        iteration: usize,
        f_old: f64,
        f_new: f64,
        epsilon: f64,
        alpha: f64,
        passed: bool,
    },
    /// Cone exploration fell back to box sampling because the guide was zero.
    ConeFallback { iteration: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub trace: Vec<TracePoint>,
    pub x_best: Vec<f64>,
    pub y_best: f64,
    pub evaluations_used: usize,
    pub seed: u64,
    #[serde(default)]
    pub events: Vec<RunEvent>,
}

/// JSON sidecar written next to each trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub seed: u64,
    pub config_hash: String,
    pub x_best: Vec<f64>,
    pub y_best: f64,
    pub evaluations_used: usize,
    /// Extra harness metadata (problem id, start value, ...).
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl RunRecord {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.trace.len() * 24 + 16);
        out.push_str("t,y,y_best\n");
        for p in &self.trace {
            // `{:?}` on f64 is the shortest round-trip representation.
            let _ = writeln!(out, "{},{:?},{:?}", p.t, p.y, p.y_best);
        }
        out
    }

    pub fn sidecar(&self, config_hash: &str) -> Sidecar {
        Sidecar {
            seed: self.seed,
            config_hash: config_hash.to_string(),
            x_best: self.x_best.clone(),
            y_best: self.y_best,
            evaluations_used: self.evaluations_used,
            extra: serde_json::Map::new(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Values at each evaluation, in order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.trace.iter().map(|p| p.y)
    }
}

impl Sidecar {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Parses a `t,y,y_best` trace CSV.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TracePoint>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "t,y,y_best" => {}
        other => {
            return Err(Error::Io(format!(
                "unexpected trace header {:?}",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(row, line)| {
            let bad = || Error::Io(format!("malformed trace row {}: {line}", row + 2));
            let mut cols = line.split(',');
            let t = cols
                .next()
                .ok_or_else(bad)?
                .trim()
                .parse()
                .map_err(|_| bad())?;
            let y = cols
                .next()
                .ok_or_else(bad)?
                .trim()
                .parse()
                .map_err(|_| bad())?;
            let y_best = cols
                .next()
                .ok_or_else(bad)?
                .trim()
                .parse()
                .map_err(|_| bad())?;
            Ok(TracePoint { t, y, y_best })
        })
        .collect()
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TracePoint>> {
    parse_trace_csv(&std::fs::read_to_string(path)?)
}
