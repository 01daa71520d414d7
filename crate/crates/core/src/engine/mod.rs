//! Gibbs chains over tones and sentences.
//!
//! Each chain alternates S trials (tone prompt, sentence response) and T
//! trials (sentence prompt, tone response). A trial always shows exactly the
//! chain tip, an agent never visits the same chain twice, and a chain is
//! locked while one of its trials is open. Every state transition is written
//! to a [`TrialSink`]; replaying the log rebuilds the state.

mod clock;
mod log;
mod runner;
mod shared;

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentError;
use crate::item::{ChainItem, Domain, Sentence, Tone};
use crate::par::{hash_str, mix_seed};
use crate::validation::{ErrorKind, ValidationError, Validator};

pub use clock::{Clock, LogicalClock, ManualClock, SystemClock};
pub use log::{read_log, JsonlSink, MemorySink, NullSink, TrialSink};
pub use runner::{run_autonomous, RunSummary};
pub use shared::SharedExperiment;

pub type TrialId = u64;
pub type ChainId = usize;

/// Agent id recorded for the seed item of every chain.
pub const SEED_AGENT: &str = "seed";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown trial {0}")]
    UnknownTrial(TrialId),
    #[error("trial {0} is not open")]
    TrialNotOpen(TrialId),
    #[error("chain {0} is already complete")]
    ChainComplete(ChainId),
    #[error("agent {0} has used its trial quota")]
    QuotaExhausted(String),
    #[error("agent failure: {0}")]
    Agent(#[from] AgentError),
    #[error("stalled: chain {chain_id} expired {expiries} consecutive trials")]
    Stalled { chain_id: ChainId, expiries: usize },
    #[error("stalled: no agent can be assigned to the remaining chains")]
    NoEligibleChain,
    #[error("log error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt trial log at record {index}: {message}")]
    Replay { index: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrialKind {
    /// Tone prompt, sentence response.
    S,
    /// Sentence prompt, tone response.
    T,
}

impl TrialKind {
    pub fn for_prompt(prompt: &ChainItem) -> Self {
        if prompt.is_tone() {
            TrialKind::S
        } else {
            TrialKind::T
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Open,
    Accepted,
    /// Logged for a rejected attempt; the trial itself stays open.
    Rejected,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub item: ChainItem,
    pub agent_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainState {
    pub chain_id: ChainId,
    pub domain: Domain,
    pub iteration: usize,
    pub history: Vec<HistoryEntry>,
    pub locked_by: Option<TrialId>,
}

impl ChainState {
    pub fn tip(&self) -> &ChainItem {
        &self.history.last().expect("chain has a seed").item
    }
}

/// One agent interaction. Log records are snapshots of this struct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_id: TrialId,
    pub chain_id: ChainId,
    /// Iteration the accepted response will occupy.
    pub iteration: usize,
    pub kind: TrialKind,
    pub prompt: ChainItem,
    pub response: Option<ChainItem>,
    /// Raw text of the latest submission.
    pub submitted: Option<String>,
    pub agent_id: String,
    pub status: TrialStatus,
    pub attempts: u32,
    pub reason: Option<ErrorKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detail: Vec<String>,
    pub created_at: u64,
    pub resolved_at: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialQuota {
    pub min: usize,
    pub max: usize,
}

/// How `next_trial` picks among eligible chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionPolicy {
    /// Fewest accepted iterations first, ties to the lowest chain id.
    #[default]
    LeastIterations,
    /// Uniform among eligible chains, keyed by seed and trial counter.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_chains: usize,
    pub n_iterations: usize,
    pub trials_per_agent: TrialQuota,
    pub seed_items: Vec<ChainItem>,
    pub domain: Domain,
    pub rng_seed: u64,
    /// Attempts per trial before it expires and the chain is reassigned.
    pub retry_budget: u32,
    /// Open trials older than this expire.
    pub lock_timeout_ms: u64,
    pub selection: SelectionPolicy,
    /// Consecutive expiries on one chain before an autonomous run gives up.
    pub max_reassignments: usize,
}

/// Seed tones used when none are configured.
pub const DEFAULT_SEED_TONES: [&str; 8] = [
    "polite", "excited", "grateful", "sad", "angry", "curious", "anxious", "calm",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_chains: 90,
            n_iterations: 100,
            trials_per_agent: TrialQuota { min: 10, max: 12 },
            seed_items: DEFAULT_SEED_TONES
                .iter()
                .map(|t| ChainItem::Tone(Tone::new(t).expect("valid tone")))
                .collect(),
            domain: Domain::Human,
            rng_seed: 0,
            retry_budget: 3,
            lock_timeout_ms: 10 * 60 * 1000,
            selection: SelectionPolicy::LeastIterations,
            max_reassignments: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_string()));
        if self.n_chains == 0 {
            return bad("n_chains must be at least 1");
        }
        if self.n_iterations == 0 {
            return bad("n_iterations must be at least 1");
        }
        if self.trials_per_agent.min == 0 || self.trials_per_agent.min > self.trials_per_agent.max {
            return bad("trials_per_agent needs 1 <= min <= max");
        }
        if self.seed_items.is_empty() {
            return bad("seed_items must not be empty");
        }
        if self.retry_budget == 0 {
            return bad("retry_budget must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub visited: BTreeSet<ChainId>,
    pub count: usize,
    pub open: Option<TrialId>,
}

/// Serializable experiment state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentState {
    pub config: ExperimentConfig,
    pub chains: Vec<ChainState>,
    pub trials: Vec<Trial>,
    pub ledger: BTreeMap<String, AgentRecord>,
}

/// Outcome of a submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Submission {
    Accepted(Trial),
    Rejected {
        error: ValidationError,
        /// Attempts left before the trial expires; 0 means it just expired.
        remaining: u32,
        trial: Trial,
    },
}

/// Chain state machine plus validator and trial sink.
pub struct Experiment {
    state: ExperimentState,
    validator: Validator,
    sink: Box<dyn TrialSink>,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("state", &self.state).finish()
    }
}

impl Experiment {
    /// Creates `n_chains` chains, each seeded with an item drawn with
    /// replacement from `seed_items` by an RNG keyed on `rng_seed`.
    pub fn new(config: ExperimentConfig, validator: Validator, sink: Box<dyn TrialSink>) -> Result<Self, EngineError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let chains = (0..config.n_chains)
            .map(|chain_id| {
                let item = config.seed_items[rng.random_range(0..config.seed_items.len())].clone();
                ChainState {
                    chain_id,
                    domain: config.domain,
                    iteration: 0,
                    history: vec![HistoryEntry {
                        iteration: 0,
                        item,
                        agent_id: SEED_AGENT.into(),
                    }],
                    locked_by: None,
                }
            })
            .collect();
        Ok(Self {
            state: ExperimentState {
                config,
                chains,
                trials: Vec::new(),
                ledger: BTreeMap::new(),
            },
            validator,
            sink,
        })
    }

    /// Rebuilds an experiment from logged records, then attaches `sink` for
    /// further writes.
    pub fn replay<I>(
        config: ExperimentConfig,
        validator: Validator,
        records: I,
        sink: Box<dyn TrialSink>,
    ) -> Result<Self, EngineError>
    where
        I: IntoIterator<Item = Trial>,
    {
        let mut exp = Self::new(config, validator, Box::new(NullSink))?;
        for (index, rec) in records.into_iter().enumerate() {
            exp.apply(&rec).map_err(|message| EngineError::Replay { index, message })?;
        }
        exp.sink = sink;
        Ok(exp)
    }

    pub fn state(&self) -> &ExperimentState {
        &self.state
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.state.config
    }

    pub fn chains(&self) -> &[ChainState] {
        &self.state.chains
    }

    pub fn trials(&self) -> &[Trial] {
        &self.state.trials
    }

    pub fn trial(&self, id: TrialId) -> Option<&Trial> {
        self.state.trials.get(id as usize)
    }

    pub fn validator(&self) -> &Validator {
        &self.validator
    }

    pub fn flush(&mut self) -> Result<(), EngineError> {
        Ok(self.sink.flush()?)
    }

    pub fn is_complete(&self) -> bool {
        let n = self.state.config.n_iterations;
        self.state.chains.iter().all(|c| c.iteration >= n)
    }

    pub fn accepted_count(&self) -> usize {
        self.state.chains.iter().map(|c| c.iteration).sum()
    }

    /// Trial quota of an agent, drawn from the configured range by a hash of
    /// the seed and agent id.
    pub fn quota(&self, agent_id: &str) -> usize {
        let q = self.state.config.trials_per_agent;
        let span = (q.max - q.min + 1) as u64;
        q.min + (mix_seed(&[self.state.config.rng_seed, hash_str(agent_id)]) % span) as usize
    }

    pub fn agent(&self, agent_id: &str) -> Option<&AgentRecord> {
        self.state.ledger.get(agent_id)
    }

    fn eligible(&self, agent_id: &str) -> Vec<ChainId> {
        let visited = self.state.ledger.get(agent_id).map(|r| &r.visited);
        let n = self.state.config.n_iterations;
        self.state
            .chains
            .iter()
            .filter(|c| c.iteration < n && c.locked_by.is_none())
            .filter(|c| visited.is_none_or(|v| !v.contains(&c.chain_id)))
            .map(|c| c.chain_id)
            .collect()
    }

    /// Assigns the agent an open trial on an eligible chain. An agent that
    /// already holds an open trial gets that trial back. Returns `None` when
    /// no chain is eligible.
    pub fn next_trial(&mut self, agent_id: &str, now: u64) -> Result<Option<Trial>, EngineError> {
        self.expire_stale(now)?;
        if let Some(open) = self.state.ledger.get(agent_id).and_then(|r| r.open) {
            return Ok(Some(self.state.trials[open as usize].clone()));
        }
        let count = self.state.ledger.get(agent_id).map_or(0, |r| r.count);
        if count >= self.quota(agent_id) {
            return Err(EngineError::QuotaExhausted(agent_id.to_string()));
        }
        let eligible = self.eligible(agent_id);
        if eligible.is_empty() {
            return Ok(None);
        }
        let chain_id = match self.state.config.selection {
            SelectionPolicy::LeastIterations => *eligible
                .iter()
                .min_by_key(|&&c| (self.state.chains[c].iteration, c))
                .expect("non-empty"),
            SelectionPolicy::Random => {
                let key = mix_seed(&[self.state.config.rng_seed, self.state.trials.len() as u64]);
                eligible[(key % eligible.len() as u64) as usize]
            }
        };
        let chain = &self.state.chains[chain_id];
        let prompt = chain.tip().clone();
        let trial = Trial {
            trial_id: self.state.trials.len() as TrialId,
            chain_id,
            iteration: chain.iteration + 1,
            kind: TrialKind::for_prompt(&prompt),
            prompt,
            response: None,
            submitted: None,
            agent_id: agent_id.to_string(),
            status: TrialStatus::Open,
            attempts: 0,
            reason: None,
            detail: Vec::new(),
            created_at: now,
            resolved_at: None,
        };
        self.apply(&trial).map_err(EngineError::InvalidConfig)?;
        self.sink.record(&trial)?;
        Ok(Some(trial))
    }

    /// Validates `raw` against the trial's prompt. Accepted responses extend
    /// the chain; rejected ones leave the trial open until the retry budget
    /// is used up, at which point it expires.
    pub fn submit_response(&mut self, trial_id: TrialId, raw: &str, now: u64) -> Result<Submission, EngineError> {
        let trial = self
            .state
            .trials
            .get(trial_id as usize)
            .ok_or(EngineError::UnknownTrial(trial_id))?
            .clone();
        if trial.status != TrialStatus::Open {
            return Err(EngineError::TrialNotOpen(trial_id));
        }
        let chain = &self.state.chains[trial.chain_id];
        if chain.iteration >= self.state.config.n_iterations {
            return Err(EngineError::ChainComplete(trial.chain_id));
        }
        let text = raw.trim();
        let verdict = match &trial.prompt {
            ChainItem::Tone(t) => self
                .validator
                .sentence(text, t)
                .and_then(|()| Sentence::new(text).map(ChainItem::Sentence).map_err(|e| item_error(e, text))),
            ChainItem::Sentence(s) => self
                .validator
                .tone(text, s.text())
                .and_then(|()| Tone::new(text).map(ChainItem::Tone).map_err(|e| item_error(e, text))),
        };
        let mut rec = trial.clone();
        rec.submitted = Some(text.to_string());
        rec.attempts += 1;
        match verdict {
            Ok(item) => {
                rec.response = Some(item);
                rec.status = TrialStatus::Accepted;
                rec.reason = None;
                rec.detail.clear();
                rec.resolved_at = Some(now);
                self.apply(&rec).map_err(EngineError::InvalidConfig)?;
                self.sink.record(&rec)?;
                Ok(Submission::Accepted(rec))
            }
            Err(error) => {
                rec.status = TrialStatus::Rejected;
                rec.reason = Some(error.kind);
                rec.detail = error.detail.clone();
                self.apply(&rec).map_err(EngineError::InvalidConfig)?;
                self.sink.record(&rec)?;
                let budget = self.state.config.retry_budget;
                let remaining = budget.saturating_sub(rec.attempts);
                if remaining == 0 {
                    self.expire_trial(trial_id, now)?;
                }
                Ok(Submission::Rejected {
                    error,
                    remaining,
                    trial: self.state.trials[trial_id as usize].clone(),
                })
            }
        }
    }

    /// Expires an open trial and unlocks its chain.
    pub fn expire_trial(&mut self, trial_id: TrialId, now: u64) -> Result<Trial, EngineError> {
        let trial = self
            .state
            .trials
            .get(trial_id as usize)
            .ok_or(EngineError::UnknownTrial(trial_id))?;
        if trial.status != TrialStatus::Open {
            return Err(EngineError::TrialNotOpen(trial_id));
        }
        let mut rec = trial.clone();
        rec.status = TrialStatus::Expired;
        rec.resolved_at = Some(now);
        self.apply(&rec).map_err(EngineError::InvalidConfig)?;
        self.sink.record(&rec)?;
        Ok(rec)
    }

    /// Expires every open trial created more than `lock_timeout_ms` before `now`.
    pub fn expire_stale(&mut self, now: u64) -> Result<Vec<TrialId>, EngineError> {
        let timeout = self.state.config.lock_timeout_ms;
        let stale: Vec<TrialId> = self
            .state
            .chains
            .iter()
            .filter_map(|c| c.locked_by)
            .filter(|&id| now.saturating_sub(self.state.trials[id as usize].created_at) > timeout)
            .collect();
        for &id in &stale {
            self.expire_trial(id, now)?;
        }
        Ok(stale)
    }

    /// Accepted T trials ordered by (chain, iteration).
    pub fn tone_trials(&self) -> Vec<&Trial> {
        let mut out: Vec<&Trial> = self
            .state
            .trials
            .iter()
            .filter(|t| t.status == TrialStatus::Accepted && t.kind == TrialKind::T)
            .collect();
        out.sort_by_key(|t| (t.chain_id, t.iteration));
        out
    }

    /// Accepted tone responses ordered by (chain, iteration).
    pub fn tone_annotations(&self) -> Vec<Tone> {
        self.tone_trials()
            .into_iter()
            .filter_map(|t| t.response.as_ref().and_then(|r| r.as_tone()).cloned())
            .collect()
    }

    /// Applies one logged transition. Checks consistency but does not re-run
    /// the filters.
    fn apply(&mut self, rec: &Trial) -> Result<(), String> {
        let id = rec.trial_id as usize;
        let n_iter = self.state.config.n_iterations;
        match rec.status {
            TrialStatus::Open => {
                if id != self.state.trials.len() {
                    return Err(format!("trial id {} out of sequence", rec.trial_id));
                }
                let chain = self
                    .state
                    .chains
                    .get(rec.chain_id)
                    .ok_or_else(|| format!("unknown chain {}", rec.chain_id))?;
                if chain.locked_by.is_some() {
                    return Err(format!("chain {} is locked", rec.chain_id));
                }
                if chain.iteration >= n_iter {
                    return Err(format!("chain {} is complete", rec.chain_id));
                }
                if chain.tip() != &rec.prompt || rec.iteration != chain.iteration + 1 {
                    return Err(format!("trial {} prompt is not the tip of chain {}", rec.trial_id, rec.chain_id));
                }
                if rec.kind != TrialKind::for_prompt(&rec.prompt) {
                    return Err(format!("trial {} kind does not match its prompt", rec.trial_id));
                }
                let agent = self.state.ledger.entry(rec.agent_id.clone()).or_default();
                if agent.open.is_some() {
                    return Err(format!("agent {} already holds an open trial", rec.agent_id));
                }
                if !agent.visited.insert(rec.chain_id) {
                    return Err(format!("agent {} revisits chain {}", rec.agent_id, rec.chain_id));
                }
                agent.count += 1;
                agent.open = Some(rec.trial_id);
                self.state.chains[rec.chain_id].locked_by = Some(rec.trial_id);
                self.state.trials.push(rec.clone());
            }
            TrialStatus::Rejected => {
                let t = self.open_trial(rec)?;
                t.attempts = rec.attempts;
                t.submitted = rec.submitted.clone();
                t.reason = rec.reason;
                t.detail = rec.detail.clone();
            }
            TrialStatus::Accepted => {
                let response = rec.response.clone().ok_or("accepted trial without response")?;
                let t = self.open_trial(rec)?;
                if response.is_tone() == t.prompt.is_tone() {
                    return Err(format!("trial {} response does not alternate", rec.trial_id));
                }
                *t = rec.clone();
                let chain = &mut self.state.chains[rec.chain_id];
                chain.history.push(HistoryEntry {
                    iteration: chain.iteration + 1,
                    item: response,
                    agent_id: rec.agent_id.clone(),
                });
                chain.iteration += 1;
                chain.locked_by = None;
                debug_assert_eq!(chain.iteration + 1, chain.history.len());
                if let Some(a) = self.state.ledger.get_mut(&rec.agent_id) {
                    a.open = None;
                }
            }
            TrialStatus::Expired => {
                let t = self.open_trial(rec)?;
                t.status = TrialStatus::Expired;
                t.resolved_at = rec.resolved_at;
                self.state.chains[rec.chain_id].locked_by = None;
                if let Some(a) = self.state.ledger.get_mut(&rec.agent_id) {
                    a.open = None;
                }
            }
        }
        Ok(())
    }

    fn open_trial(&mut self, rec: &Trial) -> Result<&mut Trial, String> {
        let t = self
            .state
            .trials
            .get_mut(rec.trial_id as usize)
            .ok_or_else(|| format!("unknown trial {}", rec.trial_id))?;
        if t.status != TrialStatus::Open {
            return Err(format!("trial {} is not open", rec.trial_id));
        }
        if t.chain_id != rec.chain_id || t.agent_id != rec.agent_id {
            return Err(format!("trial {} identity changed", rec.trial_id));
        }
        Ok(t)
    }
}

fn item_error(e: crate::item::ItemError, text: &str) -> ValidationError {
    let kind = match e {
        crate::item::ItemError::TooShort(_) => ErrorKind::TooShort,
        crate::item::ItemError::BadTone(_) => ErrorKind::BadCharset,
    };
    ValidationError::new(kind, vec![text.to_string()])
}
