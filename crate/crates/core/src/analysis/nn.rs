use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::correlation::{row_correlations, symmetrize_unit};
use super::{corr_to_dissimilarity, mds, AnalysisError, DissimilarityTransform, MdsOptions};
use crate::linalg::distances;
use crate::par::{map_indices, stream_rng, Execution};
use crate::ratings::RatingMatrix;

/// Proximity used to pick neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NnSource {
    /// Highest cross-domain correlation.
    #[default]
    Correlation,
    /// Smallest distance in the shared MDS plane.
    Mds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnEdge {
    pub from: String,
    pub to: String,
    /// Share of bootstrap replicates that reproduce this edge.
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnMatchGraph {
    /// Each tone of the first domain to its neighbour in the second.
    pub forward: Vec<NnEdge>,
    /// Each tone of the second domain to its neighbour in the first.
    pub backward: Vec<NnEdge>,
    pub n_replicates: usize,
    pub source: NnSource,
}

fn best(values: impl Iterator<Item = f64>, labels: &[String]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (k, v) in values.enumerate() {
        if v > best_v || (v == best_v && labels[k] < labels[best]) {
            best = k;
            best_v = v;
        }
    }
    best
}

/// Row-wise and column-wise argmax of a proximity matrix. Equal maxima go
/// to the lexicographically smallest label.
pub fn argmax_matches(m: &DMatrix<f64>, row_labels: &[String], col_labels: &[String]) -> (Vec<usize>, Vec<usize>) {
    let fwd = (0..m.nrows()).map(|i| best(m.row(i).iter().copied(), col_labels)).collect();
    let bwd = (0..m.ncols()).map(|j| best(m.column(j).iter().copied(), row_labels)).collect();
    (fwd, bwd)
}

fn proximity(
    a: &DMatrix<f64>,
    la: &[String],
    b: &DMatrix<f64>,
    lb: &[String],
    source: NnSource,
) -> Result<DMatrix<f64>, AnalysisError> {
    match source {
        NnSource::Correlation => row_correlations(a, la, b, lb),
        NnSource::Mds => {
            let (m, k) = (a.nrows(), b.nrows());
            let stacked = DMatrix::from_fn(m + k, a.ncols(), |i, j| if i < m { a[(i, j)] } else { b[(i - m, j)] });
            let mut labels = la.to_vec();
            labels.extend(lb.iter().cloned());
            let corr = symmetrize_unit(row_correlations(&stacked, &labels, &stacked, &labels)?);
            let sol = mds(
                &corr_to_dissimilarity(&corr)?,
                &labels,
                &MdsOptions::default(),
                DissimilarityTransform::OneMinusR,
            )?;
            let d = distances(&sol.points);
            Ok(DMatrix::from_fn(m, k, |i, j| -d[(i, m + j)]))
        }
    }
}

fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Nearest cross-domain neighbour of every tone in both directions, with
/// edge frequencies over `n_boot` replicates that resample sentences with
/// replacement.
pub fn nn_matching(
    a: &RatingMatrix,
    b: &RatingMatrix,
    n_boot: usize,
    seed: u64,
    exec: Execution,
    source: NnSource,
) -> Result<NnMatchGraph, AnalysisError> {
    if a.sentences != b.sentences {
        return Err(AnalysisError::SentenceMismatch);
    }
    let la: Vec<String> = a.tones.iter().map(|t| t.to_string()).collect();
    let lb: Vec<String> = b.tones.iter().map(|t| t.to_string()).collect();
    let point = proximity(&a.means, &la, &b.means, &lb, source)?;
    let (fwd, bwd) = argmax_matches(&point, &la, &lb);
    let n = a.sentences.len();
    let reps = map_indices(n_boot, exec, |r| {
        let mut rng = stream_rng(seed, r as u64);
        let cols: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        proximity(&select_columns(&a.means, &cols), &la, &select_columns(&b.means, &cols), &lb, source)
            .ok()
            .map(|p| argmax_matches(&p, &la, &lb))
    });
    let valid: Vec<&(Vec<usize>, Vec<usize>)> = reps.iter().flatten().collect();
    let freq = |hits: usize| if valid.is_empty() { 0.0 } else { hits as f64 / valid.len() as f64 };
    let forward = fwd
        .iter()
        .enumerate()
        .map(|(i, &j)| NnEdge {
            from: la[i].clone(),
            to: lb[j].clone(),
            frequency: freq(valid.iter().filter(|r| r.0[i] == j).count()),
        })
        .collect();
    let backward = bwd
        .iter()
        .enumerate()
        .map(|(j, &i)| NnEdge {
            from: lb[j].clone(),
            to: la[i].clone(),
            frequency: freq(valid.iter().filter(|r| r.1[j] == i).count()),
        })
        .collect();
    Ok(NnMatchGraph {
        forward,
        backward,
        n_replicates: valid.len(),
        source,
    })
}
