use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::ratings::RatingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Intra,
    Cross,
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: DMatrix<f64>,
    pub kind: CorrelationKind,
}

impl CorrelationMatrix {
    /// Checks range, and symmetry with unit diagonal for intra and combined
    /// matrices.
    pub fn check(&self) -> Result<(), AnalysisError> {
        let v = &self.values;
        if let Some(x) = v.iter().find(|x| !(x.abs() <= 1.0 + 1e-12)) {
            return Err(AnalysisError::OutOfRange(*x));
        }
        if self.kind != CorrelationKind::Cross {
            if v.nrows() != v.ncols() {
                return Err(AnalysisError::NotSquare(v.nrows(), v.ncols()));
            }
            for i in 0..v.nrows() {
                if (v[(i, i)] - 1.0).abs() > 1e-12 {
                    return Err(AnalysisError::OutOfRange(v[(i, i)]));
                }
                for j in 0..i {
                    if v[(i, j)] != v[(j, i)] {
                        return Err(AnalysisError::NotSymmetric(i, j));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rows centred and scaled to unit norm, so that `Z_a Z_bᵀ` is the Pearson
/// matrix.
fn standardized_rows(m: &DMatrix<f64>, labels: &[String]) -> Result<DMatrix<f64>, AnalysisError> {
    let mut z = m.clone();
    for i in 0..m.nrows() {
        let mut row = z.row_mut(i);
        let mean = row.mean();
        let scale = row.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        row.add_scalar_mut(-mean);
        let ss = row.norm_squared();
        if ss == 0.0 || ss <= 1e-24 * scale {
            return Err(AnalysisError::DegenerateRow(labels[i].clone()));
        }
        row /= ss.sqrt();
    }
    Ok(z)
}

pub(crate) fn row_correlations(
    a: &DMatrix<f64>,
    a_labels: &[String],
    b: &DMatrix<f64>,
    b_labels: &[String],
) -> Result<DMatrix<f64>, AnalysisError> {
    if a.ncols() < 2 || a.ncols() != b.ncols() {
        return Err(AnalysisError::DimensionMismatch(format!(
            "{} vs {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let za = standardized_rows(a, a_labels)?;
    let zb = standardized_rows(b, b_labels)?;
    Ok((za * zb.transpose()).map(|x| x.clamp(-1.0, 1.0)))
}

pub(crate) fn symmetrize_unit(mut c: DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    for i in 0..n {
        c[(i, i)] = 1.0;
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

fn labels(rm: &RatingMatrix) -> Vec<String> {
    rm.tones.iter().map(|t| t.to_string()).collect()
}

fn domain_labels(rm: &RatingMatrix) -> Vec<String> {
    rm.tones.iter().map(|t| format!("{t}@{}", rm.domain)).collect()
}

pub fn intra_correlation(rm: &RatingMatrix) -> Result<CorrelationMatrix, AnalysisError> {
    let l = labels(rm);
    let c = symmetrize_unit(row_correlations(&rm.means, &l, &rm.means, &l)?);
    let out = CorrelationMatrix {
        rows: l.clone(),
        cols: l,
        values: c,
        kind: CorrelationKind::Intra,
    };
    debug_assert!(out.check().is_ok());
    Ok(out)
}

/// Entry (i, j) correlates tone i of `a` with tone j of `b` over the shared
/// sentences.
pub fn cross_correlation(a: &RatingMatrix, b: &RatingMatrix) -> Result<CorrelationMatrix, AnalysisError> {
    if a.sentences != b.sentences {
        return Err(AnalysisError::SentenceMismatch);
    }
    let (la, lb) = (domain_labels(a), domain_labels(b));
    let c = row_correlations(&a.means, &la, &b.means, &lb)?;
    Ok(CorrelationMatrix {
        rows: la,
        cols: lb,
        values: c,
        kind: CorrelationKind::Cross,
    })
}

/// Block matrix `[[intra_a, cross], [crossᵀ, intra_b]]` over all tones of
/// both domains.
pub fn combined_matrix(a: &RatingMatrix, b: &RatingMatrix) -> Result<CorrelationMatrix, AnalysisError> {
    if a.sentences != b.sentences {
        return Err(AnalysisError::SentenceMismatch);
    }
    let mut l = domain_labels(a);
    l.extend(domain_labels(b));
    let stacked = DMatrix::from_fn(a.means.nrows() + b.means.nrows(), a.means.ncols(), |i, j| {
        if i < a.means.nrows() {
            a.means[(i, j)]
        } else {
            b.means[(i - a.means.nrows(), j)]
        }
    });
    let c = symmetrize_unit(row_correlations(&stacked, &l, &stacked, &l)?);
    let out = CorrelationMatrix {
        rows: l.clone(),
        cols: l,
        values: c,
        kind: CorrelationKind::Combined,
    };
    debug_assert!(out.check().is_ok());
    Ok(out)
}

/// `d = 1 − r` with a zero diagonal.
pub fn corr_to_dissimilarity(corr: &DMatrix<f64>) -> Result<DMatrix<f64>, AnalysisError> {
    if corr.nrows() != corr.ncols() {
        return Err(AnalysisError::NotSquare(corr.nrows(), corr.ncols()));
    }
    if let Some(x) = corr.iter().find(|x| !(x.abs() <= 1.0 + 1e-12)) {
        return Err(AnalysisError::OutOfRange(*x));
    }
    let mut d = corr.map(|r| (1.0 - r).max(0.0));
    d.fill_diagonal(0.0);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::item::{Domain, Tone};
    use crate::par::stream_rng;
    use crate::stats::pearson;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    pub(crate) fn rating_matrix(means: DMatrix<f64>, domain: Domain) -> RatingMatrix {
        let m = means.nrows();
        let n = means.ncols();
        RatingMatrix {
            tones: (0..m).map(|i| Tone::new(&format!("tone{}", char::from(b'a' + i as u8))).unwrap()).collect(),
            sentences: (0..n).map(|j| format!("sentence {j}")).collect(),
            counts: DMatrix::from_element(m, n, 5),
            means,
            domain,
        }
    }

    fn random(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = stream_rng(seed, 0);
        DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn duplicated_rows_are_all_ones() {
        let row = random(1, 10, 1);
        let m = DMatrix::from_fn(3, 10, |_, j| row[(0, j)]);
        let c = intra_correlation(&rating_matrix(m, Domain::Human)).unwrap();
        assert!(c.values.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn orthogonalized_rows_are_uncorrelated() {
        let mut m = random(2, 30, 2);
        let a: Vec<f64> = m.row(0).iter().map(|x| x - m.row(0).mean()).collect();
        let mb = m.row(1).mean();
        let b: Vec<f64> = m.row(1).iter().map(|x| x - mb).collect();
        let proj = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / a.iter().map(|x| x * x).sum::<f64>();
        for j in 0..30 {
            m[(1, j)] = b[j] - proj * a[j];
        }
        let c = intra_correlation(&rating_matrix(m, Domain::Human)).unwrap();
        assert!(c.values[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn two_rows_match_pearson() {
        let m = random(2, 12, 3);
        let r = pearson(&crate::linalg::row_vec(&m, 0), &crate::linalg::row_vec(&m, 1)).unwrap();
        let c = intra_correlation(&rating_matrix(m, Domain::Human)).unwrap();
        assert!((c.values[(0, 1)] - r).abs() < 1e-12);
        assert_eq!(c.values[(0, 1)], c.values[(1, 0)]);
    }

    #[test]
    fn constant_row_is_degenerate() {
        let mut m = random(3, 8, 4);
        m.row_mut(1).fill(3.0);
        assert_eq!(
            intra_correlation(&rating_matrix(m, Domain::Human)),
            Err(AnalysisError::DegenerateRow("toneb".into()))
        );
    }

    #[test]
    fn cross_and_combined_blocks() {
        let a = rating_matrix(random(2, 9, 5), Domain::Human);
        let b = rating_matrix(random(2, 9, 6), Domain::Llm);
        let same = cross_correlation(&a, &a).unwrap();
        assert!((0..2).all(|i| (same.values[(i, i)] - 1.0).abs() < 1e-12));
        let cross = cross_correlation(&a, &b).unwrap();
        let comb = combined_matrix(&a, &b).unwrap();
        assert_eq!(comb.values.shape(), (4, 4));
        assert_eq!(comb.rows[2], "tonea@llm");
        let ia = intra_correlation(&a).unwrap();
        let ib = intra_correlation(&b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let brute_x = pearson(&crate::linalg::row_vec(&a.means, i), &crate::linalg::row_vec(&b.means, j)).unwrap();
                assert!((cross.values[(i, j)] - brute_x).abs() < 1e-12);
                assert!((comb.values[(i, j)] - ia.values[(i, j)]).abs() < 1e-12);
                assert!((comb.values[(i + 2, j + 2)] - ib.values[(i, j)]).abs() < 1e-12);
                assert!((comb.values[(i, j + 2)] - cross.values[(i, j)]).abs() < 1e-12);
                assert!((comb.values[(j + 2, i)] - cross.values[(i, j)]).abs() < 1e-12);
            }
        }
        comb.check().unwrap();
        let twin = combined_matrix(&a, &a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let v = twin.values[(i, j)];
                assert!((twin.values[(i + 2, j)] - v).abs() < 1e-12);
                assert!((twin.values[(i, j + 2)] - v).abs() < 1e-12);
                assert!((twin.values[(i + 2, j + 2)] - v).abs() < 1e-12);
            }
        }
        let mut c = b.clone();
        c.sentences[0] = "different".into();
        assert_eq!(cross_correlation(&a, &c), Err(AnalysisError::SentenceMismatch));
    }

    #[test]
    fn independent_matrices_have_small_cross_correlation() {
        let a = rating_matrix(random(20, 200, 7), Domain::Human);
        let b = rating_matrix(random(20, 200, 8), Domain::Llm);
        let c = cross_correlation(&a, &b).unwrap();
        let mean_abs = c.values.iter().map(|x| x.abs()).sum::<f64>() / 400.0;
        // E|r| under the null is about sqrt(2 / (pi n)).
        let null = (2.0 / (std::f64::consts::PI * 200.0)).sqrt();
        assert!((mean_abs - null).abs() < 0.25 * null, "{mean_abs} vs {null}");
    }

    #[test]
    fn dissimilarity_transform() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let d = corr_to_dissimilarity(&c).unwrap();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]));
        let bad = DMatrix::from_element(2, 2, 1.5);
        assert_eq!(corr_to_dissimilarity(&bad), Err(AnalysisError::OutOfRange(1.5)));
    }

    proptest! {
        #[test]
        fn matches_pairwise_pearson(seed in 0u64..500, m in 2usize..6, n in 3usize..15) {
            let rm = rating_matrix(random(m, n, seed), Domain::Human);
            let c = intra_correlation(&rm).unwrap();
            c.check().unwrap();
            for i in 0..m {
                for j in 0..m {
                    let r = pearson(&crate::linalg::row_vec(&rm.means, i), &crate::linalg::row_vec(&rm.means, j)).unwrap();
                    prop_assert!((c.values[(i, j)] - r).abs() < 1e-12);
                }
            }
            let d = corr_to_dissimilarity(&c.values).unwrap();
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        for l in 0..m {
                            if c.values[(i, j)] < c.values[(k, l)] && i != j && k != l {
                                prop_assert!(d[(i, j)] >= d[(k, l)]);
                            }
                        }
                    }
                }
            }
        }
    }
}
