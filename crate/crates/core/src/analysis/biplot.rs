use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, MdsSolution};
use crate::item::Domain;
use crate::ratings::FeatureRatingMatrix;

/// Which regression defines an arrow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrowFit {
    /// Each axis is regressed on all standardized features jointly; the
    /// coefficients of a feature across axes form its arrow.
    #[default]
    AxesOnFeatures,
    /// Each raw feature is regressed on the axes; its slopes form the arrow.
    FeatureOnAxes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureArrow {
    pub feature: String,
    pub domain: Domain,
    pub direction: Vec<f64>,
    pub explained_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneDistance {
    pub tone: String,
    pub distance: f64,
}

/// Least squares with an intercept column; returns the slopes only.
fn ols(design: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>, AnalysisError> {
    let n = design.nrows();
    let x = DMatrix::from_fn(n, design.ncols() + 1, |i, j| if j == 0 { 1.0 } else { design[(i, j - 1)] });
    if n < x.ncols() {
        return Err(AnalysisError::RankDeficient);
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-10 * smax.max(f64::MIN_POSITIVE) {
        return Err(AnalysisError::RankDeficient);
    }
    let beta = svd.solve(y, 0.0).map_err(|_| AnalysisError::RankDeficient)?;
    Ok(beta.rows(1, beta.nrows() - 1).into_owned())
}

fn standardize_columns(f: &DMatrix<f64>) -> Result<DMatrix<f64>, AnalysisError> {
    let mut z = f.clone();
    for mut col in z.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
        let sd = (col.norm_squared() / (col.len() as f64 - 1.0)).sqrt();
        if !(sd > 1e-12) {
            return Err(AnalysisError::RankDeficient);
        }
        col /= sd;
    }
    Ok(z)
}

/// Arrow directions (one row per feature column, one column per axis) for
/// `points` (n × dim) and `features` (n × p).
pub fn fit_arrows(points: &DMatrix<f64>, features: &DMatrix<f64>, fit: ArrowFit) -> Result<DMatrix<f64>, AnalysisError> {
    if points.nrows() != features.nrows() {
        return Err(AnalysisError::DimensionMismatch(format!(
            "{} points vs {} feature rows",
            points.nrows(),
            features.nrows()
        )));
    }
    match fit {
        ArrowFit::AxesOnFeatures => ols(&standardize_columns(features)?, points),
        ArrowFit::FeatureOnAxes => Ok(ols(points, features)?.transpose()),
    }
}

/// Arrows for the points of `domain`, matched to feature rows by tone.
pub fn biplot_arrows(
    solution: &MdsSolution,
    features: &FeatureRatingMatrix,
    domain: Domain,
    fit: ArrowFit,
) -> Result<Vec<FeatureArrow>, AnalysisError> {
    let rows = solution.domain_rows(domain.as_str());
    let suffix = format!("@{domain}");
    let mut f = DMatrix::zeros(rows.len(), features.features.len());
    for (k, &r) in rows.iter().enumerate() {
        let tone = solution.labels[r].trim_end_matches(&suffix);
        let i = features
            .tones
            .iter()
            .position(|t| t.as_str() == tone)
            .ok_or_else(|| AnalysisError::MissingCounterpart(tone.to_string()))?;
        f.row_mut(k).copy_from(&features.means.row(i));
    }
    let pts = DMatrix::from_fn(rows.len(), solution.points.ncols(), |k, a| solution.points[(rows[k], a)]);
    let dirs = fit_arrows(&pts, &f, fit)?;
    features
        .features
        .iter()
        .enumerate()
        .map(|(j, feat)| {
            let direction: Vec<f64> = dirs.row(j).iter().copied().collect();
            Ok(FeatureArrow {
                feature: feat.id().to_string(),
                domain,
                explained_variance: projection_variance(&pts, &direction)?,
                direction,
            })
        })
        .collect()
}

/// Variance of the projections of `points` onto `direction`, divided by the
/// total variance of the points.
pub fn projection_variance(points: &DMatrix<f64>, direction: &[f64]) -> Result<f64, AnalysisError> {
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(AnalysisError::ZeroVector);
    }
    let c = crate::linalg::center_columns(points);
    let total = c.norm_squared();
    if total == 0.0 {
        return Err(AnalysisError::ZeroVector);
    }
    let proj: f64 = c
        .row_iter()
        .map(|r| {
            let p: f64 = r.iter().zip(direction).map(|(x, d)| x * d / norm).sum();
            p * p
        })
        .sum();
    Ok(proj / total)
}

/// Explained variance of an arrow over its domain's points.
pub fn explained_variance(solution: &MdsSolution, arrow: &FeatureArrow) -> Result<f64, AnalysisError> {
    let rows = solution.domain_rows(arrow.domain.as_str());
    let pts = DMatrix::from_fn(rows.len(), solution.points.ncols(), |k, a| solution.points[(rows[k], a)]);
    projection_variance(&pts, &arrow.direction)
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, AnalysisError> {
    if u.len() != v.len() {
        return Err(AnalysisError::DimensionMismatch(format!("{} vs {}", u.len(), v.len())));
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(AnalysisError::ZeroVector);
    }
    Ok((u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (nu * nv)).clamp(-1.0, 1.0))
}

/// Distance between the two points of each tone, largest first.
pub fn same_tone_distances(solution: &MdsSolution, a: Domain, b: Domain) -> Result<Vec<ToneDistance>, AnalysisError> {
    let sa = format!("@{a}");
    let sb = format!("@{b}");
    let mut out = Vec::new();
    for (i, label) in solution.labels.iter().enumerate() {
        let Some(tone) = label.strip_suffix(&sa) else { continue };
        let j = solution
            .labels
            .iter()
            .position(|l| l.strip_suffix(&sb) == Some(tone))
            .ok_or_else(|| AnalysisError::MissingCounterpart(tone.to_string()))?;
        let d = (solution.points.row(i) - solution.points.row(j)).norm();
        out.push(ToneDistance {
            tone: tone.to_string(),
            distance: d,
        });
    }
    for label in &solution.labels {
        if let Some(tone) = label.strip_suffix(&sb) {
            if !out.iter().any(|t| t.tone == tone) {
                return Err(AnalysisError::MissingCounterpart(tone.to_string()));
            }
        }
    }
    out.sort_by(|x, y| y.distance.total_cmp(&x.distance).then_with(|| x.tone.cmp(&y.tone)));
    Ok(out)
}
