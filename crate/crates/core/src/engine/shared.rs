use std::sync::{Arc, Mutex, MutexGuard};

use super::Experiment;

/// Experiment behind a mutex, shared by the HTTP service and human bridge.
#[derive(Debug, Clone)]
pub struct SharedExperiment(Arc<Mutex<Experiment>>);

impl SharedExperiment {
    pub fn new(exp: Experiment) -> Self {
        Self(Arc::new(Mutex::new(exp)))
    }

    /// Locks the experiment. A poisoned lock is recovered, since every
    /// transition is applied atomically before the sink is written.
    pub fn lock(&self) -> MutexGuard<'_, Experiment> {
        self.0.lock().unwrap_or_else(|p| p.into_inner())
    }
}
