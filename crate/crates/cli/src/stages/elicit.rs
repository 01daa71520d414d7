use std::path::{Path, PathBuf};
use std::sync::Arc;

use swp_core::agents::llm::HttpTransport;
use swp_core::agents::synthetic::{SyntheticAgent, SyntheticJoint};
use swp_core::agents::Agent;
use swp_core::engine::{run_autonomous, Experiment, JsonlSink, LogicalClock};
use swp_core::{ChainItem, Domain};

use super::{ensure_dir, llm_agent, TRIALS_FILE};
use crate::config::{Backend, Config};
use crate::error::{CliError, Classify};
use crate::manifest::{RunManifest, Stage};

#[derive(Debug, Clone, Default)]
pub struct ElicitArgs {
    pub backend: Option<Backend>,
    pub chains: Option<usize>,
    pub iterations: Option<usize>,
    pub domain: Option<Domain>,
}

impl ElicitArgs {
    /// Applies the command-line overrides to `cfg`.
    pub fn apply(&self, cfg: &mut Config) {
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(n) = self.chains {
            cfg.experiment.n_chains = n;
        }
        if let Some(n) = self.iterations {
            cfg.experiment.n_iterations = n;
        }
        if let Some(d) = self.domain {
            cfg.experiment.domain = d;
        }
    }
}

/// Runs the chains to completion with an autonomous backend and writes the
/// trial log. The human backend is served instead; see [`crate::server`].
pub fn run(cfg: &Config, out: &Path, transport: Option<Arc<dyn HttpTransport>>) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let mut exp_cfg = cfg.experiment.clone();
    let agent: Box<dyn Agent> = match cfg.backend {
        Backend::Synthetic => {
            let joint = SyntheticJoint::random(cfg.synthetic.tones, cfg.synthetic.sentences, cfg.stage_seed("joint"));
            exp_cfg.seed_items = joint.tones().iter().cloned().map(ChainItem::Tone).collect();
            Box::new(SyntheticAgent::new(Arc::new(joint), cfg.stage_seed("agent")))
        }
        Backend::Llm => {
            ensure_dir(out)?;
            Box::new(llm_agent(cfg, transport, &out.join("llm-audit-elicit.jsonl"))?)
        }
        Backend::Human => {
            return Err(CliError::Config("the human backend runs under `swp serve`".into()));
        }
    };
    let validator = cfg.validator()?;
    ensure_dir(out)?;
    let log = out.join(TRIALS_FILE);
    let sink = JsonlSink::create(&log).runtime(log.display())?;
    let mut manifest = RunManifest::start(cfg, Stage::Elicit);
    let mut exp = Experiment::new(exp_cfg, validator, Box::new(sink))?;
    let summary = run_autonomous(&mut exp, agent.as_ref(), &LogicalClock::default())?;
    exp.flush()?;
    manifest.outputs.push(log.clone());
    manifest.summary = serde_json::json!({
        "backend": cfg.backend.as_str(),
        "domain": cfg.experiment.domain,
        "chains": cfg.experiment.n_chains,
        "iterations": cfg.experiment.n_iterations,
        "run": summary,
    });
    manifest.finish(out)?;
    Ok(log)
}
