//! Sampling-with-people toolkit.
//!
//! The crate covers the full pipeline for eliciting a joint distribution of
//! conversational tones and sentences with Gibbs chains driven by pluggable
//! agents, aggregating Likert judgments into rating embeddings, projecting
//! two domains into a shared geometry, and benchmarking unsupervised
//! cross-domain alignment methods against the cross-correlation ground truth.
//!
//! Module map:
//!
//! - [`item`]: tones, sentences and chain items.
//! - [`validation`]: response filters (word count, charset, lexicons, stem
//!   overlap, profanity) and the Porter stemmer behind them.
//! - [`agents`]: the agent contract plus synthetic, LLM and human backends.
//! - [`engine`]: parallel Gibbs chains, trial assignment and the trial log.
//! - [`ratings`]: rating plans and aggregation of the judgment experiments.
//! - [`analysis`]: histograms, correlations, bootstrap, MDS, biplots,
//!   nearest-neighbour matching, TF-IDF and the exact stationary oracle.
//! - [`alignment`]: Procrustes, Gromov-Wasserstein OT, lexicon induction and
//!   the benchmark harness.

pub mod agents;
pub mod alignment;
pub mod analysis;
pub mod engine;
pub mod ingest;
pub mod io;
pub mod item;
pub mod linalg;
pub mod par;
pub mod ratings;
pub mod report;
pub mod stats;
pub mod validation;

pub use item::{ChainItem, Domain, Sentence, Tone};
