use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::correlation::{row_correlations, symmetrize_unit};
use super::AnalysisError;
use crate::item::Tone;
use crate::par::{map_indices, stream_rng, Execution};
use crate::ratings::{RatingMatrix, SimilarityRecord};
use crate::stats::{mean, pearson, percentile_interval, upper_triangle};

pub const DEFAULT_REPLICATES: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Replicates that produced a finite statistic.
    pub n_replicates: usize,
    pub rng_seed: u64,
}

/// How split-half replicates bisect the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionUnit {
    /// Tone annotations, for histogram reliability.
    Trials,
    /// The ratings of each tone pair, bisected within the pair.
    PerPairRatings,
    /// Sentence columns of a rating matrix.
    Sentences,
}

fn summarize(values: Vec<f64>, estimate: Option<f64>, seed: u64) -> Result<BootstrapResult, AnalysisError> {
    let finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(AnalysisError::AllReplicatesFailed);
    }
    let (ci_low, ci_high) = percentile_interval(&finite, 0.95)?;
    Ok(BootstrapResult {
        estimate: estimate.unwrap_or_else(|| mean(&finite)),
        ci_low,
        ci_high,
        n_replicates: finite.len(),
        rng_seed: seed,
    })
}

/// Percentile bootstrap: the statistic on the full data plus the 95%
/// interval of the statistic over `n_boot` resamples with replacement.
pub fn bootstrap_ci<T, F>(data: &[T], stat: F, n_boot: usize, seed: u64, exec: Execution) -> Result<BootstrapResult, AnalysisError>
where
    T: Sync,
    F: Fn(&[&T]) -> f64 + Sync + Send,
{
    if data.is_empty() {
        return Err(AnalysisError::InsufficientUnits { needed: 1, got: 0 });
    }
    let all: Vec<&T> = data.iter().collect();
    let estimate = stat(&all);
    let values = map_indices(n_boot, exec, |b| {
        let mut rng = stream_rng(seed, b as u64);
        let sample: Vec<&T> = (0..data.len()).map(|_| &data[rng.random_range(0..data.len())]).collect();
        stat(&sample)
    });
    summarize(values, Some(estimate), seed)
}

/// Split-half reliability. Each replicate bisects every group at random,
/// evaluates `stat` on both halves and correlates the two vectors. Reports
/// the mean correlation and its 95% percentile interval. Replicates where
/// the correlation is undefined are dropped.
pub fn split_half<U, F>(
    groups: &[Vec<U>],
    stat: F,
    n_boot: usize,
    seed: u64,
    exec: Execution,
) -> Result<BootstrapResult, AnalysisError>
where
    U: Sync,
    F: Fn(&[&U]) -> Result<Vec<f64>, AnalysisError> + Sync + Send,
{
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(AnalysisError::InsufficientUnits { needed: 2, got: g.len() });
    }
    if groups.is_empty() {
        return Err(AnalysisError::InsufficientUnits { needed: 2, got: 0 });
    }
    let values = map_indices(n_boot, exec, |b| {
        let mut rng = stream_rng(seed, b as u64);
        let mut left = Vec::new();
        let mut right = Vec::new();
        for g in groups {
            let mut idx: Vec<usize> = (0..g.len()).collect();
            idx.shuffle(&mut rng);
            let half = g.len() / 2;
            left.extend(idx[..half].iter().map(|&i| &g[i]));
            right.extend(idx[half..].iter().map(|&i| &g[i]));
        }
        match (stat(&left), stat(&right)) {
            (Ok(a), Ok(b)) => pearson(&a, &b).unwrap_or(f64::NAN),
            _ => f64::NAN,
        }
    });
    summarize(values, None, seed)
}

/// Histogram reliability: tone frequencies of two halves of the annotations.
pub fn split_half_histogram(tones: &[Tone], n_boot: usize, seed: u64, exec: Execution) -> Result<BootstrapResult, AnalysisError> {
    let vocab: BTreeMap<&Tone, usize> = tones
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let groups = vec![tones.to_vec()];
    split_half(
        &groups,
        |half: &[&Tone]| {
            let mut counts = vec![0.0; vocab.len()];
            for t in half {
                counts[vocab[*t]] += 1.0;
            }
            Ok(counts)
        },
        n_boot,
        seed,
        exec,
    )
}

/// Similarity reliability: the ratings of each pair are bisected and the
/// per-pair means of the halves are correlated.
pub fn split_half_similarity(
    records: &[SimilarityRecord],
    n_boot: usize,
    seed: u64,
    exec: Execution,
) -> Result<BootstrapResult, AnalysisError> {
    let mut by_pair: BTreeMap<(Tone, Tone), Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.tone_a != r.tone_b) {
        let key = if r.tone_a < r.tone_b {
            (r.tone_a.clone(), r.tone_b.clone())
        } else {
            (r.tone_b.clone(), r.tone_a.clone())
        };
        by_pair.entry(key).or_default().push(r.value.normalized());
    }
    let groups: Vec<Vec<(usize, f64)>> = by_pair
        .into_values()
        .enumerate()
        .map(|(p, vs)| vs.into_iter().map(|v| (p, v)).collect())
        .collect();
    let n_pairs = groups.len();
    split_half(
        &groups,
        |half: &[&(usize, f64)]| {
            let mut sums = vec![0.0; n_pairs];
            let mut counts = vec![0usize; n_pairs];
            for &&(p, v) in half {
                sums[p] += v;
                counts[p] += 1;
            }
            Ok(sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect())
        },
        n_boot,
        seed,
        exec,
    )
}

/// Rating-matrix reliability: sentences are bisected, a correlation matrix
/// is computed from each half, and the matrices are correlated. With `b`
/// the cross-domain matrix is used, otherwise the upper triangle of the
/// intra-domain matrix of `a`.
pub fn split_half_matrix(
    a: &RatingMatrix,
    b: Option<&RatingMatrix>,
    n_boot: usize,
    seed: u64,
    exec: Execution,
) -> Result<BootstrapResult, AnalysisError> {
    if let Some(b) = b {
        if a.sentences != b.sentences {
            return Err(AnalysisError::SentenceMismatch);
        }
    }
    let n = a.sentences.len();
    if n < 4 {
        return Err(AnalysisError::InsufficientUnits { needed: 4, got: n });
    }
    let la: Vec<String> = a.tones.iter().map(|t| t.to_string()).collect();
    let lb: Vec<String> = b.map(|b| b.tones.iter().map(|t| t.to_string()).collect()).unwrap_or_default();
    let groups = vec![(0..n).collect::<Vec<usize>>()];
    let select = |m: &DMatrix<f64>, cols: &[&usize]| DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, *cols[j])]);
    split_half(
        &groups,
        |cols: &[&usize]| {
            let sa = select(&a.means, cols);
            match b {
                Some(b) => {
                    let sb = select(&b.means, cols);
                    Ok(row_correlations(&sa, &la, &sb, &lb)?.iter().copied().collect())
                }
                None => Ok(upper_triangle(&symmetrize_unit(row_correlations(&sa, &la, &sa, &la)?))),
            }
        },
        n_boot,
        seed,
        exec,
    )
}
