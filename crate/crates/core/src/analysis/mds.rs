use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::linalg::{center_columns, distances};

/// How the dissimilarities fed to [`mds`] were derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DissimilarityTransform {
    /// `d = 1 − r` from a correlation matrix.
    #[default]
    OneMinusR,
    /// Dissimilarities supplied directly.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdsOptions {
    pub dim: usize,
    pub max_iter: usize,
    /// Stop once the relative decrease of raw stress falls below this.
    pub tol: f64,
}

impl Default for MdsOptions {
    fn default() -> Self {
        Self {
            dim: 2,
            max_iter: 500,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsSolution {
    pub labels: Vec<String>,
    /// One row per label.
    pub points: DMatrix<f64>,
    /// Normalized stress `sqrt(Σ (d̂ − d)² / Σ d²)` over pairs.
    pub stress: f64,
    /// Raw stress after the classical start and after each majorization step.
    pub stress_history: Vec<f64>,
    pub transform: DissimilarityTransform,
}

impl MdsSolution {
    pub fn point(&self, label: &str) -> Option<Vec<f64>> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(self.points.row(i).iter().copied().collect())
    }

    /// Rows whose label carries the `@domain` suffix.
    pub fn domain_rows(&self, domain: &str) -> Vec<usize> {
        let suffix = format!("@{domain}");
        (0..self.labels.len()).filter(|&i| self.labels[i].ends_with(&suffix)).collect()
    }
}

fn validate(d: &DMatrix<f64>) -> Result<(), AnalysisError> {
    if d.nrows() != d.ncols() {
        return Err(AnalysisError::NotSquare(d.nrows(), d.ncols()));
    }
    let scale = d.amax().max(1.0);
    for i in 0..d.nrows() {
        if d[(i, i)] != 0.0 {
            return Err(AnalysisError::NonZeroDiagonal(i));
        }
        for j in 0..d.ncols() {
            if d[(i, j)] < 0.0 {
                return Err(AnalysisError::NegativeDissimilarity(i, j));
            }
            if (d[(i, j)] - d[(j, i)]).abs() > 1e-12 * scale {
                return Err(AnalysisError::NotSymmetric(i, j));
            }
        }
    }
    Ok(())
}

fn raw_stress(x: &DMatrix<f64>, delta: &DMatrix<f64>) -> f64 {
    let dx = distances(x);
    let n = x.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let e = dx[(i, j)] - delta[(i, j)];
            s += e * e;
        }
    }
    s
}

/// Torgerson scaling: top eigenvectors of the double-centred squared
/// dissimilarities.
fn classical(delta: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let n = delta.nrows();
    let d2 = delta.component_mul(delta);
    let row_means: Vec<f64> = (0..n).map(|i| d2.row(i).mean()).collect();
    let grand = d2.mean();
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    DMatrix::from_fn(n, dim, |i, k| {
        if k >= n {
            return 0.0;
        }
        let idx = order[k];
        eig.eigenvectors[(i, idx)] * eig.eigenvalues[idx].max(0.0).sqrt()
    })
}

/// One Guttman transform `X ← B(X) X / n`.
fn guttman(x: &DMatrix<f64>, delta: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let dx = distances(x);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j && dx[(i, j)] > 1e-300 {
                let v = -delta[(i, j)] / dx[(i, j)];
                b[(i, j)] = v;
                diag -= v;
            }
        }
        b[(i, i)] = diag;
    }
    b * x / n as f64
}

/// Centres, rotates to principal axes and fixes signs so the first point
/// with a non-negligible coordinate on each axis is positive, scanning from
/// point `axis`.
fn canonicalize(x: DMatrix<f64>) -> DMatrix<f64> {
    let c = center_columns(&x);
    let svd = c.clone().svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut rot = DMatrix::zeros(c.ncols(), c.ncols());
    for (k, &idx) in order.iter().enumerate() {
        for r in 0..c.ncols() {
            rot[(r, k)] = vt[(idx, r)];
        }
    }
    let mut out = c * rot;
    let n = out.nrows();
    let tol = 1e-9 * out.amax().max(f64::MIN_POSITIVE);
    for a in 0..out.ncols() {
        if let Some(i) = (0..n).map(|k| (a + k) % n).find(|&i| out[(i, a)].abs() > tol) {
            if out[(i, a)] < 0.0 {
                out.column_mut(a).neg_mut();
            }
        }
    }
    out
}

/// Metric MDS: classical start refined by SMACOF stress majorization.
pub fn mds(
    delta: &DMatrix<f64>,
    labels: &[String],
    opts: &MdsOptions,
    transform: DissimilarityTransform,
) -> Result<MdsSolution, AnalysisError> {
    validate(delta)?;
    if labels.len() != delta.nrows() {
        return Err(AnalysisError::DimensionMismatch(format!(
            "{} labels for {} points",
            labels.len(),
            delta.nrows()
        )));
    }
    let mut x = classical(delta, opts.dim);
    let mut s = raw_stress(&x, delta);
    let mut history = vec![s];
    for _ in 0..opts.max_iter {
        if s <= 1e-30 {
            break;
        }
        let next = guttman(&x, delta);
        let s_next = raw_stress(&next, delta);
        let improved = s_next <= s;
        if improved {
            x = next;
            history.push(s_next);
        }
        let rel = (s - s_next) / s;
        if improved {
            s = s_next;
        }
        if !improved || rel < opts.tol {
            break;
        }
    }
    let x = canonicalize(x);
    let denom: f64 = (0..delta.nrows())
        .flat_map(|i| ((i + 1)..delta.nrows()).map(move |j| (i, j)))
        .map(|(i, j)| delta[(i, j)] * delta[(i, j)])
        .sum();
    let stress = if denom > 0.0 { (raw_stress(&x, delta) / denom).sqrt() } else { 0.0 };
    Ok(MdsSolution {
        labels: labels.to_vec(),
        points: x,
        stress,
        stress_history: history,
        transform,
    })
}
