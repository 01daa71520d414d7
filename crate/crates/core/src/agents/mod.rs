//! Agents answer chain trials and judgment requests.
//!
//! [`Agent`] produces raw response text for a chain prompt; the engine
//! validates it. [`Rater`] answers the three judgment experiments. Backends:
//! [`synthetic`] (exact conditional sampling from a known joint plus a
//! latent-factor rater), [`llm`] (chat-completion client), and [`human`]
//! (bridge from the HTTP service to the engine).

pub mod human;
pub mod llm;
pub mod parse;
pub mod prompt;
pub mod synthetic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::item::{ChainItem, Sentence, Tone};
use crate::ratings::{Feature, SimilarityValue};

pub use parse::{parse_response, ParseError, Parsed};
pub use prompt::{PromptError, PromptSet, PromptTemplate, ResponseFormat};

/// Identifies one agent call; synthetic agents derive their RNG stream from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallContext {
    pub agent_id: String,
    pub chain_id: usize,
    pub iteration: usize,
    pub attempt: u32,
}

/// Identifies one judgment request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentContext {
    pub rater_id: String,
    pub slot: usize,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("item not known to the agent: {0}")]
    UnknownItem(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("environment variable {0} is not set")]
    MissingCredential(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// Answers S trials (tone prompt) and T trials (sentence prompt).
pub trait Agent: Send + Sync {
    fn respond(&self, prompt: &ChainItem, ctx: &CallContext) -> Result<String, AgentError>;
}

/// Answers quality-of-fit, similarity and feature judgments.
pub trait Rater: Send + Sync {
    fn rate_fit(&self, tone: &Tone, sentence: &Sentence, ctx: &JudgmentContext) -> Result<u8, AgentError>;
    fn rate_similarity(&self, a: &Tone, b: &Tone, ctx: &JudgmentContext) -> Result<SimilarityValue, AgentError>;
    fn rate_feature(&self, tone: &Tone, feature: Feature, ctx: &JudgmentContext) -> Result<u8, AgentError>;
}

impl<A: Agent + ?Sized> Agent for std::sync::Arc<A> {
    fn respond(&self, prompt: &ChainItem, ctx: &CallContext) -> Result<String, AgentError> {
        (**self).respond(prompt, ctx)
    }
}

impl<R: Rater + ?Sized> Rater for std::sync::Arc<R> {
    fn rate_fit(&self, tone: &Tone, sentence: &Sentence, ctx: &JudgmentContext) -> Result<u8, AgentError> {
        (**self).rate_fit(tone, sentence, ctx)
    }
    fn rate_similarity(&self, a: &Tone, b: &Tone, ctx: &JudgmentContext) -> Result<SimilarityValue, AgentError> {
        (**self).rate_similarity(a, b, ctx)
    }
    fn rate_feature(&self, tone: &Tone, feature: Feature, ctx: &JudgmentContext) -> Result<u8, AgentError> {
        (**self).rate_feature(tone, feature, ctx)
    }
}
