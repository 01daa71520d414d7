//! Bridge between human participants (via the HTTP service) and the engine.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{Clock, EngineError, SharedExperiment, Submission, Trial, TrialId, TrialKind};
use crate::validation::ErrorKind;

/// What a participant sees for a trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialView {
    pub trial_id: TrialId,
    pub kind: TrialKind,
    pub prompt: String,
    pub attempts_left: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Poll {
    Trial(TrialView),
    /// Quota used or no eligible chain left.
    Done { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SubmitOutcome {
    Accepted,
    Rejected {
        reason: ErrorKind,
        detail: Vec<String>,
        attempts_left: u32,
    },
    Expired {
        reason: ErrorKind,
        detail: Vec<String>,
    },
}

#[derive(Clone)]
pub struct HumanBridge {
    exp: SharedExperiment,
    clock: Arc<dyn Clock>,
}

impl HumanBridge {
    pub fn new(exp: SharedExperiment, clock: Arc<dyn Clock>) -> Self {
        Self { exp, clock }
    }

    pub fn experiment(&self) -> &SharedExperiment {
        &self.exp
    }

    pub fn poll(&self, participant: &str) -> Result<Poll, EngineError> {
        let mut exp = self.exp.lock();
        let budget = exp.config().retry_budget;
        match exp.next_trial(participant, self.clock.now_ms()) {
            Ok(Some(t)) => Ok(Poll::Trial(view(&t, budget))),
            Ok(None) => Ok(Poll::Done {
                reason: "no-eligible-chain".into(),
            }),
            Err(EngineError::QuotaExhausted(_)) => Ok(Poll::Done {
                reason: "quota-exhausted".into(),
            }),
            Err(e) => Err(e),
        }
    }

    pub fn submit(&self, trial_id: TrialId, raw: &str) -> Result<SubmitOutcome, EngineError> {
        let mut exp = self.exp.lock();
        Ok(match exp.submit_response(trial_id, raw, self.clock.now_ms())? {
            Submission::Accepted(_) => SubmitOutcome::Accepted,
            Submission::Rejected {
                error, remaining: 0, ..
            } => SubmitOutcome::Expired {
                reason: error.kind,
                detail: error.detail,
            },
            Submission::Rejected { error, remaining, .. } => SubmitOutcome::Rejected {
                reason: error.kind,
                detail: error.detail,
                attempts_left: remaining,
            },
        })
    }
}

fn view(t: &Trial, budget: u32) -> TrialView {
    TrialView {
        trial_id: t.trial_id,
        kind: t.kind,
        prompt: t.prompt.text().to_string(),
        attempts_left: budget.saturating_sub(t.attempts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Experiment, ExperimentConfig, ManualClock, NullSink, TrialQuota};
    use crate::item::{ChainItem, Tone};
    use crate::validation::Validator;

    fn bridge(clock: Arc<ManualClock>) -> HumanBridge {
        let cfg = ExperimentConfig {
            n_chains: 2,
            n_iterations: 3,
            seed_items: vec![ChainItem::Tone(Tone::new("polite").unwrap())],
            trials_per_agent: TrialQuota { min: 2, max: 2 },
            lock_timeout_ms: 1000,
            ..ExperimentConfig::default()
        };
        let exp = Experiment::new(cfg, Validator::default(), Box::new(NullSink)).unwrap();
        HumanBridge::new(SharedExperiment::new(exp), clock)
    }

    #[test]
    fn poll_submit_cycle() {
        let clock = Arc::new(ManualClock::new(0));
        let b = bridge(clock.clone());
        let Poll::Trial(v) = b.poll("p").unwrap() else { panic!() };
        assert_eq!(v.kind, TrialKind::S);
        assert_eq!(v.prompt, "polite");
        assert_eq!(v.attempts_left, 3);
        let r = b.submit(v.trial_id, "short one").unwrap();
        assert_eq!(
            r,
            SubmitOutcome::Rejected {
                reason: ErrorKind::TooShort,
                detail: vec!["2".into()],
                attempts_left: 2
            }
        );
        let Poll::Trial(again) = b.poll("p").unwrap() else { panic!() };
        assert_eq!((again.trial_id, again.attempts_left), (v.trial_id, 2));
        assert_eq!(
            b.submit(v.trial_id, "Could you please pass me the salt").unwrap(),
            SubmitOutcome::Accepted
        );
        let Poll::Trial(second) = b.poll("p").unwrap() else { panic!() };
        assert_ne!(second.trial_id, v.trial_id);
        clock.advance(5000);
        let Poll::Trial(other) = b.poll("q").unwrap() else { panic!() };
        assert_eq!(other.prompt, second.prompt);
        assert!(matches!(b.submit(second.trial_id, "x"), Err(EngineError::TrialNotOpen(_))));
        assert_eq!(
            b.poll("p").unwrap(),
            Poll::Done {
                reason: "quota-exhausted".into()
            }
        );
    }
}
