use std::fmt::Display;
use std::process::ExitCode;

use swp_core::agents::AgentError;
use swp_core::engine::EngineError;

/// Failure of a command, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub fn into_exit(self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidConfig(_) => CliError::Config(e.to_string()),
            EngineError::Agent(AgentError::MissingCredential(_)) => CliError::Config(e.to_string()),
            EngineError::Replay { .. } => CliError::Input(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<AgentError> for CliError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::MissingCredential(_) | AgentError::Prompt(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

/// Attaches an exit-code class and a context string to foreign errors.
pub trait Classify<T> {
    fn config(self, what: impl Display) -> Result<T, CliError>;
    fn input(self, what: impl Display) -> Result<T, CliError>;
    fn runtime(self, what: impl Display) -> Result<T, CliError>;
}

impl<T, E: Display> Classify<T> for Result<T, E> {
    fn config(self, what: impl Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::Config(format!("{what}: {e}")))
    }

    fn input(self, what: impl Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::Input(format!("{what}: {e}")))
    }

    fn runtime(self, what: impl Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::Runtime(format!("{what}: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Input("x".into()).exit_code(), 3);
        assert_eq!(CliError::Runtime("x".into()).exit_code(), 4);
        let e: CliError = EngineError::Agent(AgentError::MissingCredential("KEY".into())).into();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("KEY"));
    }
}
