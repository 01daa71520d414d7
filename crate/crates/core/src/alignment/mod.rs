//! Unsupervised cross-domain alignment of rating embeddings.
//!
//! Three methods map one domain's tone embeddings onto another's without
//! using the shared tone labels: orthogonal Procrustes, entropic
//! Gromov-Wasserstein transport and hard-EM lexicon induction. [`metrics`]
//! scores their predicted cross-domain similarity against the
//! cross-correlation ground truth and [`benchmark`] aggregates scores over
//! seeds.

pub mod benchmark;
pub mod bli;
pub mod gwot;
pub mod hungarian;
pub mod metrics;
pub mod procrustes;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::item::Domain;
use crate::linalg::{center_columns, orthogonality_defect, permute_rows};
use crate::par::stream_rng;
use crate::ratings::RatingMatrix;
use crate::stats::StatsError;

pub use benchmark::{run_benchmark, synthetic_fixture, BenchmarkConfig, BenchmarkFixture, BenchmarkReport, MethodReport, MetricSummary};
pub use bli::{bli, BliParams, BliSolution, NeighborDirection};
pub use gwot::{gwot, marginal_error, sinkhorn_log, GwotParams, GwotSolution};
pub use hungarian::{assign_max, assign_min, assignment_value};
pub use metrics::{
    eval_domain_preservation, eval_knn_matching, eval_similarity_recovery, intra_row_correlation, predict_cross_similarity,
    preservation_r, row_cross_correlation, DomainPreservation, KNN_FORMULA, PRESERVATION_DEFINITION,
};
pub use procrustes::{orthogonal_map, procrustes, procrustes_noise_floor, procrustes_residual};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignmentError {
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("singular value decomposition did not converge")]
    SvdFailure,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("embedding row {0:?} is constant")]
    DegenerateRow(String),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("{labels} labels for {rows} rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("result of method {method} lacks {missing}")]
    MethodMismatch { method: Method, missing: &'static str },
    #[error("k must satisfy 1 <= k < {m}, got {k}")]
    InvalidK { k: usize, m: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Tone embeddings of one domain: row `i` is the rating vector of `labels[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    pub labels: Vec<String>,
    pub vectors: DMatrix<f64>,
    pub domain: Domain,
}

impl EmbeddingSet {
    pub fn new(labels: Vec<String>, vectors: DMatrix<f64>, domain: Domain) -> Result<Self, AlignmentError> {
        if labels.len() != vectors.nrows() {
            return Err(AlignmentError::LabelCount {
                labels: labels.len(),
                rows: vectors.nrows(),
            });
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(AlignmentError::DuplicateLabel(l.clone()));
            }
        }
        for (i, row) in vectors.row_iter().enumerate() {
            let first = row[0];
            if row.iter().all(|&v| v == first) {
                return Err(AlignmentError::DegenerateRow(labels[i].clone()));
            }
        }
        Ok(Self { labels, vectors, domain })
    }

    pub fn from_ratings(rm: &RatingMatrix) -> Result<Self, AlignmentError> {
        Self::new(rm.tones.iter().map(|t| t.to_string()).collect(), rm.means.clone(), rm.domain)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Procrustes,
    Gwot,
    Bli,
    /// Procrustes fitted on a uniformly random correspondence.
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Procrustes, Method::Gwot, Method::Bli, Method::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Procrustes => "procrustes",
            Method::Gwot => "gwot",
            Method::Bli => "bli",
            Method::Random => "random",
        }
    }

    /// Whether the result depends on the seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::Bli | Method::Random)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = AlignmentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| AlignmentError::InvalidParameter(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignConfig {
    pub gwot: GwotParams,
    pub bli: BliParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub method: Method,
    /// Orthogonal map from source to target coordinates.
    pub map: Option<DMatrix<f64>>,
    /// Transport plan with uniform marginals.
    pub coupling: Option<DMatrix<f64>>,
    /// `matching[i]` is the target row paired with source row `i`.
    pub matching: Option<Vec<usize>>,
    pub seed: u64,
    pub hyperparameters: serde_json::Value,
    pub flags: Vec<String>,
}

impl AlignmentResult {
    /// `‖QᵀQ − I‖` for map results.
    pub fn orthogonality_defect(&self) -> Option<f64> {
        self.map.as_ref().map(orthogonality_defect)
    }
}

/// Runs one method on raw embeddings. Inputs are column-centred first.
pub fn align(method: Method, x: &DMatrix<f64>, y: &DMatrix<f64>, config: &AlignConfig, seed: u64) -> Result<AlignmentResult, AlignmentError> {
    let mut flags = Vec::new();
    let (map, coupling, matching, hyper) = match method {
        Method::Procrustes => {
            flags.push("identity-correspondence".to_string());
            (Some(procrustes(x, y)?), None, None, serde_json::json!({}))
        }
        Method::Gwot => {
            let params = GwotParams { seed, ..config.gwot };
            let sol = gwot(x, y, &params)?;
            if !sol.converged {
                flags.push(format!("gwot-not-converged:marginal-error={:.3e}", sol.marginal_error));
            }
            (None, Some(sol.coupling), None, serde_json::to_value(params).expect("serialisable"))
        }
        Method::Bli => {
            let params = BliParams { seed, ..config.bli };
            let sol = bli(x, y, &params)?;
            if sol.fallback_used {
                flags.push("unrestricted-assignment-fallback".to_string());
            }
            (Some(sol.map), None, Some(sol.matching), serde_json::to_value(params).expect("serialisable"))
        }
        Method::Random => {
            if x.shape() != y.shape() {
                return Err(AlignmentError::ShapeMismatch(x.shape(), y.shape()));
            }
            let mut perm: Vec<usize> = (0..x.nrows()).collect();
            perm.shuffle(&mut stream_rng(seed, 0));
            let q = procrustes(x, &permute_rows(&center_columns(y), &perm))?;
            (Some(q), None, Some(perm), serde_json::json!({}))
        }
    };
    Ok(AlignmentResult {
        method,
        map,
        coupling,
        matching,
        seed,
        hyperparameters: hyper,
        flags,
    })
}
