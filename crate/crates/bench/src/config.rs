//! Suite configuration files.
//!
//! A suite is a TOML file listing problems, seeds, a budget and one
//! `[[optimizer]]` table per contender. Any field of the optimizer's
//! configuration can be overridden by key in its `params` table:
//!
//! ```toml
//! objectives = ["sphere:2:1", "rastrigin:5:1"]
//! seeds = [0, 1, 2]
//! budget = 10000
//!
//! [[optimizer]]
//! name = "egl"
//! kind = "egl"
//! preset = "race"
//! params = { m = 32, n_min = 20 }
//!
//! [[optimizer]]
//! name = "nm"
//! kind = "nelder_mead"
//! ```

use std::path::{Path, PathBuf};

use egl::objectives::BenchmarkId;
use egl::optimizer::{ConvergentEglConfig, EglConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Egl,
    Igl,
    ConvergentEgl,
    NelderMead,
    RandomSearch,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [
        OptimizerKind::Egl,
        OptimizerKind::Igl,
        OptimizerKind::ConvergentEgl,
        OptimizerKind::NelderMead,
        OptimizerKind::RandomSearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Egl => "egl",
            OptimizerKind::Igl => "igl",
            OptimizerKind::ConvergentEgl => "convergent_egl",
            OptimizerKind::NelderMead => "nelder_mead",
            OptimizerKind::RandomSearch => "random_search",
        }
    }
}

/// Named starting points for the EGL/IGL configuration.
pub const PRESETS: [&str; 3] = ["default", "light", "race"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub name: String,
    pub kind: OptimizerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub params: toml::Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub objectives: Vec<String>,
    pub seeds: Vec<u64>,
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(rename = "optimizer", default)]
    pub optimizers: Vec<OptimizerSpec>,
}

/// Resolved optimizer settings for one problem dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Egl(EglConfig),
    Igl(EglConfig),
    Convergent(ConvergentEglConfig),
    NelderMead { scale: f64 },
    RandomSearch,
}

/// EGL settings sized for budgets around 10⁴ evaluations: smaller batches so
/// more descent steps fit, shorter minimum stay per trust region, and the
/// light surrogate.
pub fn race_config(n: usize) -> EglConfig {
    EglConfig {
        m: 8,
        n_min: 10,
        // A wider initial ball smooths small-scale ripples before the
        // trust region closes in.
        epsilon: Some(0.3 * (n as f64).sqrt()),
        ..EglConfig::light(n)
    }
}

fn preset(name: Option<&str>, n: usize) -> Result<EglConfig, BenchError> {
    match name.unwrap_or("default") {
        "default" => Ok(EglConfig::for_dim(n)),
        "light" => Ok(EglConfig::light(n)),
        "race" => Ok(race_config(n)),
        other => Err(BenchError::Config(format!("unknown preset `{other}`"))),
    }
}

/// Applies `params` on top of `base` by round-tripping through a TOML table,
/// so every field is overridable by its key.
fn overlay<T: Serialize + DeserializeOwned>(
    base: &T,
    params: &toml::Table,
) -> Result<T, BenchError> {
    let mut table = toml::Table::try_from(base).map_err(|e| BenchError::Config(e.to_string()))?;
    for (k, v) in params {
        if !table.contains_key(k) && k != "epsilon" && k != "m" {
            return Err(BenchError::Config(format!("unknown parameter `{k}`")));
        }
        table.insert(k.clone(), v.clone());
    }
    table
        .try_into()
        .map_err(|e: toml::de::Error| BenchError::Config(e.to_string()))
}

impl OptimizerSpec {
    pub fn resolve(&self, n: usize) -> Result<Resolved, BenchError> {
        let no_params = |kind: &str| {
            if let Some(k) = self
                .params
                .keys()
                .find(|k| !(kind == "nelder_mead" && *k == "scale"))
            {
                return Err(BenchError::Config(format!("{kind} has no parameter `{k}`")));
            }
            Ok(())
        };
        Ok(match self.kind {
            OptimizerKind::Egl | OptimizerKind::Igl => {
                let cfg = overlay(&preset(self.preset.as_deref(), n)?, &self.params)?;
                cfg.validate(n)?;
                if self.kind == OptimizerKind::Egl {
                    Resolved::Egl(cfg)
                } else {
                    Resolved::Igl(cfg)
                }
            }
            OptimizerKind::ConvergentEgl => {
                let cfg = overlay(&ConvergentEglConfig::default(), &self.params)?;
                cfg.validate(n)?;
                Resolved::Convergent(cfg)
            }
            OptimizerKind::NelderMead => {
                no_params("nelder_mead")?;
                let scale = match self.params.get("scale") {
                    None => egl::baselines::DEFAULT_SIMPLEX_SCALE,
                    Some(v) => v
                        .as_float()
                        .ok_or_else(|| BenchError::Config("scale must be a float".into()))?,
                };
                Resolved::NelderMead { scale }
            }
            OptimizerKind::RandomSearch => {
                no_params("random_search")?;
                Resolved::RandomSearch
            }
        })
    }
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: SuiteConfig =
            toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn problems(&self) -> Result<Vec<BenchmarkId>, BenchError> {
        self.objectives
            .iter()
            .map(|s| s.parse::<BenchmarkId>().map_err(BenchError::from))
            .collect()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.objectives.is_empty() {
            return Err(BenchError::Config("objective list is empty".into()));
        }
        if self.optimizers.is_empty() {
            return Err(BenchError::Config("optimizer list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Config("seed list is empty".into()));
        }
        if self.budget == 0 {
            return Err(BenchError::Config("budget must be positive".into()));
        }
        let mut names: Vec<&str> = self.optimizers.iter().map(|o| o.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(BenchError::Config(format!(
                "duplicate optimizer name `{}`",
                w[0]
            )));
        }
        if let Some(bad) = names
            .iter()
            .find(|n| n.is_empty() || n.contains(['/', '\\', ',']))
        {
            return Err(BenchError::Config(format!(
                "invalid optimizer name `{bad}`"
            )));
        }
        for id in self.problems()? {
            id.build()?;
            for o in &self.optimizers {
                o.resolve(id.dim)?;
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let canonical = SuiteConfig {
            output_dir: None,
            ..self.clone()
        };
        let text = toml::to_string(&canonical).expect("suite config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
