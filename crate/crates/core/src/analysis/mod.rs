//! Statistics and geometry over elicited data.
//!
//! Tone histograms and entropy, correlation matrices over rating
//! embeddings, split-half and bootstrap reliability, metric MDS, biplot
//! arrows, cross-domain nearest neighbours, TF-IDF, and the exact stationary
//! distribution of the Gibbs kernel for a synthetic joint.

mod biplot;
mod bootstrap;
mod correlation;
mod gibbs;
mod histogram;
mod mds;
mod nn;
mod tfidf;

use thiserror::Error;

use crate::stats::StatsError;

pub use biplot::{
    biplot_arrows, cosine, explained_variance, fit_arrows, projection_variance, same_tone_distances, ArrowFit,
    FeatureArrow, ToneDistance,
};
pub use bootstrap::{
    bootstrap_ci, split_half, split_half_histogram, split_half_matrix, split_half_similarity, BootstrapResult,
    PartitionUnit, DEFAULT_REPLICATES,
};
pub use correlation::{
    combined_matrix, corr_to_dissimilarity, cross_correlation, intra_correlation, CorrelationKind, CorrelationMatrix,
};
pub use gibbs::{gibbs_stationary_exact, tone_kernel, Stationary};
pub use histogram::{entropy_bits, select_taxonomy, tone_histogram, ToneHistogram};
pub use mds::{mds, DissimilarityTransform, MdsOptions, MdsSolution};
pub use nn::{argmax_matches, nn_matching, NnEdge, NnMatchGraph, NnSource};
pub use tfidf::{tfidf, top_terms, DomainDocument};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("degenerate row {0}: constant ratings")]
    DegenerateRow(String),
    #[error("rating matrices do not share the same sentence list")]
    SentenceMismatch,
    #[error("need at least {needed} units per group, got {got}")]
    InsufficientUnits { needed: usize, got: usize },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("negative dissimilarity at ({0}, {1})")]
    NegativeDissimilarity(usize, usize),
    #[error("non-zero diagonal at {0}")]
    NonZeroDiagonal(usize),
    #[error("correlation {0} is outside [-1, 1]")]
    OutOfRange(f64),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("zero vector")]
    ZeroVector,
    #[error("tone {0} has no counterpart in the other domain")]
    MissingCounterpart(String),
    #[error("joint is not ergodic: support graph is disconnected")]
    NonErgodic,
    #[error("power iteration did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no bootstrap replicate produced a finite statistic")]
    AllReplicatesFailed,
}
