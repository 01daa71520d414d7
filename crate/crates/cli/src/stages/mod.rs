//! Pipeline stages. Each reads its inputs, writes primary outputs into the
//! output directory and finishes with a manifest.

pub mod align;
pub mod analyze;
pub mod elicit;
pub mod judge;
pub mod report;

use std::fs::File;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use swp_core::agents::llm::{HttpTransport, LlmAgent, LlmClient};
use swp_core::engine::{read_log, TrialKind, TrialStatus};
use swp_core::Tone;

use crate::config::Config;
use crate::error::{CliError, Classify};
use crate::transport::ReqwestTransport;

pub const TRIALS_FILE: &str = "trials.jsonl";
pub const STIMULI_FILE: &str = "stimuli.json";
pub const RATINGS_FILE: &str = "ratings.jsonl";
pub const SIMILARITY_FILE: &str = "similarity.jsonl";
pub const FEATURES_FILE: &str = "features.jsonl";

/// Tones and sentences shared by the judgment stages of both domains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimuli {
    pub tones: Vec<Tone>,
    pub sentences: Vec<String>,
}

/// Accepted chain responses, ordered by (chain, iteration).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Elicited {
    pub tones: Vec<Tone>,
    pub sentences: Vec<String>,
}

pub fn read_elicited(path: &Path) -> Result<Elicited, CliError> {
    if !path.exists() {
        return Err(CliError::Input(format!("trial log {} not found (elicit stage)", path.display())));
    }
    let mut accepted: Vec<_> = read_log(path)
        .input(path.display())?
        .into_iter()
        .filter(|t| t.status == TrialStatus::Accepted)
        .collect();
    accepted.sort_by_key(|t| (t.chain_id, t.iteration));
    let mut out = Elicited::default();
    for t in accepted {
        match (t.kind, t.response) {
            (TrialKind::T, Some(r)) => out.tones.extend(r.as_tone().cloned()),
            (TrialKind::S, Some(r)) => out.sentences.extend(r.as_sentence().map(|s| s.text().to_string())),
            _ => {}
        }
    }
    Ok(out)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).runtime(format!("creating {}", dir.display()))
}

/// Creates the LLM agent, failing first on a missing credential. Traffic is
/// audited to `audit` in the output directory.
pub fn llm_agent(
    cfg: &Config,
    transport: Option<Arc<dyn HttpTransport>>,
    audit: &Path,
) -> Result<LlmAgent, CliError> {
    let transport: Arc<dyn HttpTransport> = match transport {
        Some(t) => t,
        None => Arc::new(ReqwestTransport::new(Duration::from_secs(60)).runtime("http client")?),
    };
    let client = LlmClient::from_env(cfg.llm.clone(), transport)?;
    let prompts = cfg.prompts()?;
    let file = File::create(audit).runtime(audit.display())?;
    Ok(LlmAgent::new(client.with_audit(Box::new(file)), prompts))
}
