use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{AlignmentError, AlignmentResult};
use crate::linalg::{center_columns, column_means};
use crate::stats::{pearson, upper_triangle};

/// Definition of the kNN matching rate, recorded in report metadata.
pub const KNN_FORMULA: &str = "mean over source tones of |top-k predicted targets ∩ top-k ground-truth targets| / k; ties broken by lower index";

/// Definition of domain preservation, recorded in report metadata.
pub const PRESERVATION_DEFINITION: &str = "pearson r between upper triangles of the row-correlation matrix of a domain's embeddings before and after mapping into the other domain (centred rows rotated, target column means added back)";

/// Row-wise Pearson correlation between the rows of `a` and of `b`.
/// A constant row correlates 0 with everything.
pub fn row_cross_correlation(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    fn z(m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = m.clone();
        for mut row in z.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
        z
    }
    z(a) * z(b).transpose()
}

pub fn intra_row_correlation(a: &DMatrix<f64>) -> DMatrix<f64> {
    row_cross_correlation(a, a)
}

fn barycentric(coupling: &DMatrix<f64>, target: &DMatrix<f64>) -> DMatrix<f64> {
    let mut t = coupling.clone();
    for mut row in t.row_iter_mut() {
        let s = row.sum();
        if s > 0.0 {
            row /= s;
        }
    }
    t * target
}

/// Each domain's embeddings expressed in the other domain's coordinates.
/// Maps act on column-centred rows and the receiving domain's column means
/// are added back; couplings take barycentres of the raw rows.
fn mapped(result: &AlignmentResult, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), AlignmentError> {
    if let Some(q) = &result.map {
        if q.nrows() != x.ncols() || q.ncols() != y.ncols() {
            return Err(AlignmentError::ShapeMismatch(q.shape(), (x.ncols(), y.ncols())));
        }
        let (xbar, ybar) = (column_means(x).transpose(), column_means(y).transpose());
        let mut xm = center_columns(x) * q;
        let mut ym = center_columns(y) * q.transpose();
        for mut row in xm.row_iter_mut() {
            row += &ybar;
        }
        for mut row in ym.row_iter_mut() {
            row += &xbar;
        }
        return Ok((xm, ym));
    }
    if let Some(t) = &result.coupling {
        if t.shape() != (x.nrows(), y.nrows()) {
            return Err(AlignmentError::ShapeMismatch(t.shape(), (x.nrows(), y.nrows())));
        }
        return Ok((barycentric(t, y), barycentric(&t.transpose(), x)));
    }
    Err(AlignmentError::MethodMismatch {
        method: result.method,
        missing: "map or coupling",
    })
}

/// Predicted cross-domain similarity: correlation between each mapped
/// source row and each target row.
pub fn predict_cross_similarity(result: &AlignmentResult, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>, AlignmentError> {
    let (xm, _) = mapped(result, x, y)?;
    Ok(row_cross_correlation(&xm, y))
}

/// Pearson correlation over all entries.
pub fn eval_similarity_recovery(predicted: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64, AlignmentError> {
    if predicted.shape() != truth.shape() {
        return Err(AlignmentError::ShapeMismatch(predicted.shape(), truth.shape()));
    }
    Ok(pearson(predicted.as_slice(), truth.as_slice())?)
}

/// Correlation between the upper triangles of two intra-similarity matrices.
pub fn preservation_r(before: &DMatrix<f64>, after: &DMatrix<f64>) -> Result<f64, AlignmentError> {
    if !before.is_square() || before.shape() != after.shape() {
        return Err(AlignmentError::ShapeMismatch(before.shape(), after.shape()));
    }
    Ok(pearson(&upper_triangle(before), &upper_triangle(after))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainPreservation {
    pub source: f64,
    pub target: f64,
}

pub fn eval_domain_preservation(result: &AlignmentResult, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DomainPreservation, AlignmentError> {
    let (xm, ym) = mapped(result, x, y)?;
    Ok(DomainPreservation {
        source: preservation_r(&intra_row_correlation(x), &intra_row_correlation(&xm))?,
        target: preservation_r(&intra_row_correlation(y), &intra_row_correlation(&ym))?,
    })
}

fn top_k(row: impl Iterator<Item = f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<(usize, f64)> = row.enumerate().collect();
    idx.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    idx.into_iter().take(k).map(|(i, _)| i).collect()
}

/// Rate at which the `k` nearest targets under `predicted` agree with the
/// `k` nearest under `truth`. See [`KNN_FORMULA`].
pub fn eval_knn_matching(predicted: &DMatrix<f64>, truth: &DMatrix<f64>, k: usize) -> Result<f64, AlignmentError> {
    if predicted.shape() != truth.shape() {
        return Err(AlignmentError::ShapeMismatch(predicted.shape(), truth.shape()));
    }
    let m = predicted.ncols();
    if k == 0 || k >= m {
        return Err(AlignmentError::InvalidK { k, m });
    }
    let total: usize = (0..predicted.nrows())
        .map(|i| {
            let p = top_k(predicted.row(i).iter().copied(), k);
            let t = top_k(truth.row(i).iter().copied(), k);
            p.iter().filter(|j| t.contains(j)).count()
        })
        .sum();
    Ok(total as f64 / (k * predicted.nrows()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{align, AlignConfig, Method};
    use crate::linalg::{gaussian_matrix, random_orthogonal};
    use crate::par::stream_rng;
    use proptest::prelude::*;

    fn result_with_map(q: DMatrix<f64>) -> AlignmentResult {
        AlignmentResult {
            method: Method::Procrustes,
            map: Some(q),
            coupling: None,
            matching: None,
            seed: 0,
            hyperparameters: serde_json::json!({}),
            flags: vec![],
        }
    }

    #[test]
    fn identical_sets_have_unit_diagonal() {
        let x = gaussian_matrix(10, 15, &mut stream_rng(1, 0));
        for m in Method::ALL.into_iter().filter(|&m| m != Method::Random) {
            let r = align(m, &x, &x, &AlignConfig::default(), 0).unwrap();
            let p = predict_cross_similarity(&r, &x, &x).unwrap();
            for i in 0..10 {
                assert!(p[(i, i)] > 0.9, "{m}: {}", p[(i, i)]);
            }
        }
    }

    fn mean_sd(m: &DMatrix<f64>) -> (f64, f64) {
        let mean = m.mean();
        (mean, (m.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m.len() as f64).sqrt())
    }

    #[test]
    fn independent_sets_match_permutation_null() {
        use rand::seq::SliceRandom;
        let mut rng = stream_rng(2, 0);
        let (x, y) = (gaussian_matrix(30, 200, &mut rng), gaussian_matrix(30, 200, &mut rng));
        let r = result_with_map(DMatrix::identity(200, 200));
        let (mean, sd) = mean_sd(&predict_cross_similarity(&r, &x, &y).unwrap());
        let mut null = Vec::new();
        for _ in 0..20 {
            let mut cols: Vec<usize> = (0..200).collect();
            cols.shuffle(&mut rng);
            let xp = DMatrix::from_fn(30, 200, |i, j| x[(i, cols[j])]);
            null.push(mean_sd(&predict_cross_similarity(&r, &xp, &y).unwrap()));
        }
        let null_mean = null.iter().map(|v| v.0).sum::<f64>() / 20.0;
        let null_sd = null.iter().map(|v| v.1).sum::<f64>() / 20.0;
        assert!((mean - null_mean).abs() < 0.01, "{mean} vs {null_mean}");
        assert!((sd / null_sd - 1.0).abs() < 0.15, "{sd} vs {null_sd}");
    }

    #[test]
    fn recovery_sign_and_null() {
        let t = gaussian_matrix(8, 8, &mut stream_rng(3, 0));
        assert!((eval_similarity_recovery(&t, &t).unwrap() - 1.0).abs() < 1e-12);
        let neg = -&t;
        assert!((eval_similarity_recovery(&neg, &t).unwrap() + 1.0).abs() < 1e-12);
        let big_t = gaussian_matrix(40, 40, &mut stream_rng(3, 1));
        let rand_p = gaussian_matrix(40, 40, &mut stream_rng(3, 2));
        assert!(eval_similarity_recovery(&rand_p, &big_t).unwrap().abs() < 0.1);
        assert!(eval_similarity_recovery(&t, &big_t).is_err());
    }

    /// Random rotation that fixes the all-ones direction, i.e. an isometry of
    /// the row-correlation geometry.
    fn ones_fixing_rotation(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = stream_rng(seed, 1);
        let mut basis = DMatrix::from_element(n, n, 0.0);
        basis.column_mut(0).fill(1.0 / (n as f64).sqrt());
        let g = gaussian_matrix(n, n - 1, &mut rng);
        basis.columns_mut(1, n - 1).copy_from(&g);
        let h = basis.qr().q();
        let mut inner = DMatrix::identity(n, n);
        inner.view_mut((1, 1), (n - 1, n - 1)).copy_from(&random_orthogonal(n - 1, &mut rng));
        &h * inner * h.transpose()
    }

    #[test]
    fn correlation_isometry_preserves_domains() {
        let mut rng = stream_rng(4, 0);
        let x = gaussian_matrix(40, 80, &mut rng);
        let q = ones_fixing_rotation(80, 4);
        assert!((&q * DMatrix::from_element(80, 1, 1.0) - DMatrix::from_element(80, 1, 1.0)).norm() < 1e-10);
        let y = &x * &q;
        let d = eval_domain_preservation(&result_with_map(q), &x, &y).unwrap();
        assert!(d.source >= 0.999 && d.target >= 0.999, "{d:?}");
    }

    #[test]
    fn generic_rotation_nearly_preserves_domains() {
        let mut rng = stream_rng(4, 2);
        let x = gaussian_matrix(40, 80, &mut rng);
        let q = random_orthogonal(80, &mut rng);
        let y = &x * &q;
        let d = eval_domain_preservation(&result_with_map(q), &x, &y).unwrap();
        assert!(d.source > 0.95 && d.target > 0.95, "{d:?}");
    }

    #[test]
    fn rank_one_collapse_destroys_structure() {
        let mut rng = stream_rng(5, 0);
        let x = gaussian_matrix(40, 20, &mut rng);
        let u = gaussian_matrix(20, 1, &mut rng);
        let v = gaussian_matrix(1, 20, &mut rng);
        let collapse = u * v;
        let d = eval_domain_preservation(&result_with_map(collapse), &x, &x).unwrap();
        assert!(d.source < 0.5, "{d:?}");
    }

    #[test]
    fn knn_exact_and_adversarial() {
        let t = gaussian_matrix(30, 30, &mut stream_rng(6, 0));
        for k in 1..30 {
            assert_eq!(eval_knn_matching(&t, &t, k).unwrap(), 1.0);
        }
        assert_eq!(eval_knn_matching(&-&t, &t, 1).unwrap(), 0.0);
        assert!(matches!(eval_knn_matching(&t, &t, 30), Err(AlignmentError::InvalidK { .. })));
        assert!(eval_knn_matching(&t, &t, 0).is_err());
    }

    #[test]
    fn knn_overlap_hand_case() {
        let pred = DMatrix::from_row_slice(2, 3, &[0.9, 0.8, 0.1, 0.1, 0.2, 0.3]);
        let truth = DMatrix::from_row_slice(2, 3, &[0.9, 0.1, 0.8, 0.3, 0.2, 0.1]);
        // row 0: {0,1} vs {0,2} -> 1; row 1: {2,1} vs {0,1} -> 1
        assert!((eval_knn_matching(&pred, &truth, 2).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gwot_requires_matching_coupling() {
        let x = gaussian_matrix(5, 3, &mut stream_rng(7, 0));
        let mut r = result_with_map(DMatrix::identity(3, 3));
        r.map = None;
        assert!(matches!(predict_cross_similarity(&r, &x, &x), Err(AlignmentError::MethodMismatch { .. })));
        r.coupling = Some(DMatrix::from_element(4, 5, 0.05));
        assert!(predict_cross_similarity(&r, &x, &x).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn metrics_invariant_under_relabeling(seed in 0u64..1000, shift in 1usize..9) {
            let mut rng = stream_rng(seed, 0);
            let (x, y) = (gaussian_matrix(10, 6, &mut rng), gaussian_matrix(10, 6, &mut rng));
            let r = align(Method::Procrustes, &x, &y, &AlignConfig::default(), 0).unwrap();
            let truth = row_cross_correlation(&x, &y);
            let pred = predict_cross_similarity(&r, &x, &y).unwrap();
            let perm: Vec<usize> = (0..10).map(|i| (i + shift) % 10).collect();
            let px = crate::linalg::permute_rows(&x, &perm);
            let py = crate::linalg::permute_rows(&y, &perm);
            let rp = align(Method::Procrustes, &px, &py, &AlignConfig::default(), 0).unwrap();
            let pt = row_cross_correlation(&px, &py);
            let pp = predict_cross_similarity(&rp, &px, &py).unwrap();
            let a = eval_similarity_recovery(&pred, &truth).unwrap();
            let b = eval_similarity_recovery(&pp, &pt).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
            let d1 = eval_domain_preservation(&r, &x, &y).unwrap();
            let d2 = eval_domain_preservation(&rp, &px, &py).unwrap();
            prop_assert!((d1.source - d2.source).abs() < 1e-9 && (d1.target - d2.target).abs() < 1e-9);
            for k in 1..4 {
                let ka = eval_knn_matching(&pred, &truth, k).unwrap();
                let kb = eval_knn_matching(&pp, &pt, k).unwrap();
                prop_assert!((ka - kb).abs() < 1e-12);
            }
        }
    }
}
