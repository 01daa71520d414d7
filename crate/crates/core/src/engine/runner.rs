use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ChainId, Clock, EngineError, Experiment, Submission};
use crate::agents::{Agent, CallContext};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub agents: usize,
    pub accepted: usize,
    pub rejected_attempts: usize,
    pub expired: usize,
}

/// Drives the experiment to completion with a single agent backend.
///
/// Participants are simulated as `agent-1`, `agent-2`, ...; each takes trials
/// under the usual assignment rules until its quota is used or no chain is
/// eligible. An expired trial hands the chain to a later participant; more
/// than `max_reassignments` consecutive expiries on one chain is an error.
pub fn run_autonomous(exp: &mut Experiment, agent: &dyn Agent, clock: &dyn Clock) -> Result<RunSummary, EngineError> {
    let budget = exp.config().retry_budget;
    let limit = exp.config().max_reassignments;
    let mut expiries: HashMap<ChainId, usize> = HashMap::new();
    let mut summary = RunSummary::default();
    while !exp.is_complete() {
        summary.agents += 1;
        let agent_id = format!("agent-{}", summary.agents);
        let mut took_any = false;
        loop {
            let trial = match exp.next_trial(&agent_id, clock.now_ms()) {
                Ok(Some(t)) => t,
                Ok(None) | Err(EngineError::QuotaExhausted(_)) => break,
                Err(e) => return Err(e),
            };
            took_any = true;
            let mut accepted = false;
            for attempt in 0..budget {
                let ctx = CallContext {
                    agent_id: agent_id.clone(),
                    chain_id: trial.chain_id,
                    iteration: trial.iteration,
                    attempt,
                };
                let raw = agent.respond(&trial.prompt, &ctx)?;
                match exp.submit_response(trial.trial_id, &raw, clock.now_ms())? {
                    Submission::Accepted(_) => {
                        accepted = true;
                        break;
                    }
                    Submission::Rejected { .. } => summary.rejected_attempts += 1,
                }
            }
            if accepted {
                summary.accepted += 1;
                expiries.remove(&trial.chain_id);
            } else {
                summary.expired += 1;
                let n = expiries.entry(trial.chain_id).or_default();
                *n += 1;
                if *n > limit {
                    exp.flush()?;
                    return Err(EngineError::Stalled {
                        chain_id: trial.chain_id,
                        expiries: *n,
                    });
                }
            }
        }
        if !took_any {
            exp.flush()?;
            return Err(EngineError::NoEligibleChain);
        }
    }
    exp.flush()?;
    Ok(summary)
}
