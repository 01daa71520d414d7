use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::metrics::{
    eval_domain_preservation, eval_knn_matching, eval_similarity_recovery, predict_cross_similarity, row_cross_correlation, KNN_FORMULA,
    PRESERVATION_DEFINITION,
};
use super::{align, AlignConfig, AlignmentError, Method};
use crate::linalg::{gaussian_matrix, permute_rows, random_orthogonal};
use crate::par::{map_indices, stream_rng, Execution};
use crate::stats::{mean, percentile_interval};

/// Latent rank of the synthetic fixture.
const FIXTURE_RANK: usize = 5;
const FIXTURE_NOISE: f64 = 0.5;
const FIXTURE_TARGET_NOISE: f64 = 0.3;
/// Rows whose correspondence is cyclically shifted.
const FIXTURE_SHIFTED: usize = 12;

/// Synthetic pair of domains whose label correspondence is partly wrong and
/// whose target coordinates are rotated.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkFixture {
    pub x: DMatrix<f64>,
    /// Observed target embeddings, rotated away from the shared space.
    pub y: DMatrix<f64>,
    /// Target embeddings in the shared sentence space.
    pub y_shared: DMatrix<f64>,
    /// Row `i` of `y_shared` is a noisy copy of row `correspondence[i]` of `x`.
    pub correspondence: Vec<usize>,
    pub rotation: DMatrix<f64>,
    /// Cross correlation of `x` and `y_shared`.
    pub truth: DMatrix<f64>,
}

/// Low-rank source cloud; the target copies it with a subset of rows
/// cycled, adds noise and applies a random rotation. Procrustes on the
/// shared labels is misled by the cycled rows; a method that infers the
/// correspondence is not.
pub fn synthetic_fixture(m: usize, n: usize, seed: u64) -> BenchmarkFixture {
    let mut rng = stream_rng(seed, 0);
    let latent = gaussian_matrix(m, FIXTURE_RANK, &mut rng) * gaussian_matrix(FIXTURE_RANK, n, &mut rng);
    let x = latent + gaussian_matrix(m, n, &mut rng) * FIXTURE_NOISE;
    let mut sig: Vec<usize> = (0..m).collect();
    let sub = sample(&mut rng, m, FIXTURE_SHIFTED.min(m)).into_vec();
    for (k, &i) in sub.iter().enumerate() {
        sig[i] = sub[(k + sub.len() - 1) % sub.len()];
    }
    let y_shared = permute_rows(&x, &sig) + gaussian_matrix(m, n, &mut rng) * FIXTURE_TARGET_NOISE;
    let rotation = random_orthogonal(n, &mut rng);
    let y = &y_shared * &rotation;
    let truth = row_cross_correlation(&x, &y_shared);
    BenchmarkFixture {
        x,
        y,
        y_shared,
        correspondence: sig,
        rotation,
        truth,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    /// Seeds per stochastic method.
    pub seeds: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub k_max: usize,
    pub ci_level: f64,
    pub align: AlignConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            seeds: 100,
            base_seed: 0,
            methods: Method::ALL.to_vec(),
            k_max: 5,
            ci_level: 0.95,
            align: AlignConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

impl MetricSummary {
    fn from_values(values: &[f64], level: f64) -> Option<Self> {
        match values.len() {
            0 => None,
            1 => Some(Self {
                mean: values[0],
                ci_low: values[0],
                ci_high: values[0],
                n: 1,
            }),
            n => {
                let (lo, hi) = percentile_interval(values, level).ok()?;
                Some(Self {
                    mean: mean(values),
                    ci_low: lo,
                    ci_high: hi,
                    n,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedSeed {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnSummary {
    pub k: usize,
    pub rate: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub seeds: Vec<u64>,
    pub failed_seeds: Vec<FailedSeed>,
    pub similarity_recovery: Option<MetricSummary>,
    pub preservation_source: Option<MetricSummary>,
    pub preservation_target: Option<MetricSummary>,
    pub knn: Vec<KnnSummary>,
    pub flags: BTreeSet<String>,
}

impl MethodReport {
    pub fn knn_at(&self, k: usize) -> Option<&MetricSummary> {
        self.knn.iter().find(|s| s.k == k).map(|s| &s.rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub m: usize,
    pub n: usize,
    pub config: BenchmarkConfig,
    pub knn_formula: String,
    pub preservation_definition: String,
    pub methods: Vec<MethodReport>,
}

#[derive(Debug, Clone)]
struct CellMetrics {
    recovery: f64,
    source: f64,
    target: f64,
    knn: Vec<f64>,
    flags: Vec<String>,
}

fn run_cell(
    method: Method,
    seed: u64,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    truth: &DMatrix<f64>,
    cfg: &BenchmarkConfig,
    ks: &[usize],
) -> Result<CellMetrics, AlignmentError> {
    let result = align(method, x, y, &cfg.align, seed)?;
    let pred = predict_cross_similarity(&result, x, y)?;
    let pres = eval_domain_preservation(&result, x, y)?;
    Ok(CellMetrics {
        recovery: eval_similarity_recovery(&pred, truth)?,
        source: pres.source,
        target: pres.target,
        knn: ks.iter().map(|&k| eval_knn_matching(&pred, truth, k)).collect::<Result<_, _>>()?,
        flags: result.flags,
    })
}

impl BenchmarkReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == method)
    }

    /// One row per method: seeds, failures, then mean and CI bounds of every
    /// metric.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        let mut metrics = vec!["similarity_recovery".to_string(), "preservation_source".into(), "preservation_target".into()];
        let ks: BTreeSet<usize> = self.methods.iter().flat_map(|m| m.knn.iter().map(|s| s.k)).collect();
        metrics.extend(ks.iter().map(|k| format!("knn_{k}")));
        let mut header = vec!["method".to_string(), "n_seeds".into(), "failed_seeds".into()];
        for name in &metrics {
            header.extend([format!("{name}_mean"), format!("{name}_ci_low"), format!("{name}_ci_high")]);
        }
        out.write_record(&header)?;
        for r in &self.methods {
            let mut row = vec![r.method.to_string(), r.seeds.len().to_string(), r.failed_seeds.len().to_string()];
            let mut cells: Vec<Option<&MetricSummary>> = vec![
                r.similarity_recovery.as_ref(),
                r.preservation_source.as_ref(),
                r.preservation_target.as_ref(),
            ];
            cells.extend(ks.iter().map(|&k| r.knn_at(k)));
            for c in cells {
                match c {
                    Some(s) => row.extend([s.mean.to_string(), s.ci_low.to_string(), s.ci_high.to_string()]),
                    None => row.extend([String::new(), String::new(), String::new()]),
                }
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs every configured method and aggregates each metric over seeds.
///
/// Stochastic methods run once per seed `base_seed + s`; deterministic
/// methods run once with `base_seed`. Cells are independent and merged in
/// (method, seed) order, so the report does not depend on `exec`.
pub fn run_benchmark(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    truth: &DMatrix<f64>,
    config: &BenchmarkConfig,
    exec: Execution,
) -> Result<BenchmarkReport, AlignmentError> {
    if x.nrows() != truth.nrows() || y.nrows() != truth.ncols() {
        return Err(AlignmentError::ShapeMismatch((x.nrows(), y.nrows()), truth.shape()));
    }
    if config.seeds == 0 {
        return Err(AlignmentError::InvalidParameter("seeds must be at least 1".into()));
    }
    let ks: Vec<usize> = (1..=config.k_max).filter(|&k| k < truth.ncols()).collect();
    let cells: Vec<(Method, u64)> = config
        .methods
        .iter()
        .flat_map(|&m| {
            let n = if m.is_stochastic() { config.seeds } else { 1 };
            (0..n as u64).map(move |s| (m, config.base_seed + s))
        })
        .collect();
    let results = map_indices(cells.len(), exec, |i| {
        let (m, s) = cells[i];
        run_cell(m, s, x, y, truth, config, &ks)
    });
    let mut methods = Vec::new();
    for &method in &config.methods {
        let mut seeds = Vec::new();
        let mut failed = Vec::new();
        let mut ok = Vec::new();
        let mut flags = BTreeSet::new();
        for ((m, s), r) in cells.iter().zip(&results) {
            if *m != method {
                continue;
            }
            seeds.push(*s);
            match r {
                Ok(c) => {
                    flags.extend(c.flags.iter().cloned());
                    ok.push(c);
                }
                Err(e) => failed.push(FailedSeed {
                    seed: *s,
                    error: e.to_string(),
                }),
            }
        }
        let summary = |f: &dyn Fn(&CellMetrics) -> f64| {
            let v: Vec<f64> = ok.iter().map(|c| f(c)).collect();
            MetricSummary::from_values(&v, config.ci_level)
        };
        let knn = ks
            .iter()
            .enumerate()
            .filter_map(|(idx, &k)| summary(&|c| c.knn[idx]).map(|rate| KnnSummary { k, rate }))
            .collect();
        methods.push(MethodReport {
            method,
            seeds,
            failed_seeds: failed,
            similarity_recovery: summary(&|c| c.recovery),
            preservation_source: summary(&|c| c.source),
            preservation_target: summary(&|c| c.target),
            knn,
            flags,
        });
    }
    Ok(BenchmarkReport {
        m: x.nrows(),
        n: x.ncols(),
        config: config.clone(),
        knn_formula: KNN_FORMULA.to_string(),
        preservation_definition: PRESERVATION_DEFINITION.to_string(),
        methods,
    })
}
