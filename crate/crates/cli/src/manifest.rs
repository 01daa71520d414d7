//! Per-stage run manifests. Timestamps live here so primary outputs stay
//! byte-identical across reruns.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Config;
use crate::error::{CliError, Classify};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Elicit,
    Rate,
    Similarity,
    Features,
    Analyze,
    Align,
    Report,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Elicit => "elicit",
            Stage::Rate => "rate",
            Stage::Similarity => "similarity",
            Stage::Features => "features",
            Stage::Analyze => "analyze",
            Stage::Align => "align",
            Stage::Report => "report",
        }
    }

    /// Stages whose outputs this stage consumes.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Elicit => &[],
            Stage::Rate | Stage::Similarity | Stage::Features => &[Stage::Elicit],
            Stage::Analyze => &[Stage::Elicit, Stage::Rate],
            Stage::Align => &[Stage::Rate],
            Stage::Report => &[Stage::Analyze],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment_id: String,
    pub config_hash: String,
    pub stage: Stage,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub rng_seed: u64,
    pub tool_version: String,
    /// Unix milliseconds.
    pub started_at: u64,
    pub finished_at: u64,
    #[serde(default)]
    pub summary: Value,
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl RunManifest {
    pub fn start(cfg: &Config, stage: Stage) -> Self {
        Self {
            experiment_id: cfg.experiment_id.clone(),
            config_hash: cfg.hash(),
            stage,
            inputs: Vec::new(),
            outputs: Vec::new(),
            rng_seed: cfg.seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            started_at: now_ms(),
            finished_at: 0,
            summary: Value::Null,
        }
    }

    pub fn file_name(stage: Stage) -> String {
        format!("manifest-{}.json", stage.as_str())
    }

    /// Stamps the finish time and writes `manifest-<stage>.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf, CliError> {
        self.finished_at = now_ms();
        let path = dir.join(Self::file_name(self.stage));
        swp_core::io::save_json(&path, &self).runtime("writing manifest")?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        swp_core::io::load_json(path).input("reading manifest")
    }
}
