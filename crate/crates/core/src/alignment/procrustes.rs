use nalgebra::DMatrix;

use super::AlignmentError;
use crate::linalg::center_columns;

/// Orthogonal `Q` minimising `‖XQ − Y‖_F`, without centring. When `XᵀY` is
/// rank deficient the minimiser is not unique; the one closest to the
/// identity is returned.
pub fn orthogonal_map(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>, AlignmentError> {
    if x.shape() != y.shape() {
        return Err(AlignmentError::ShapeMismatch(x.shape(), y.shape()));
    }
    let n = x.ncols();
    let a = x.transpose() * y;
    let svd = a.try_svd(true, true, f64::EPSILON, 10_000).ok_or(AlignmentError::SvdFailure)?;
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let s = &svd.singular_values;
    let smax = s.max();
    let thresh = smax * n as f64 * 1e-12;
    let keep: Vec<usize> = (0..n).filter(|&k| s[k] > thresh).collect();
    let null: Vec<usize> = (0..n).filter(|&k| s[k] <= thresh).collect();
    let cols = |m: &DMatrix<f64>, idx: &[usize]| DMatrix::from_fn(n, idx.len(), |i, j| m[(i, idx[j])]);
    let v = vt.transpose();
    let mut q = cols(&u, &keep) * cols(&v, &keep).transpose();
    if !null.is_empty() {
        let (un, vn) = (cols(&u, &null), cols(&v, &null));
        // maximise tr(Un W Vnᵀ) over orthogonal W
        let m = vn.transpose() * &un;
        let inner = m.svd(true, true);
        let w = inner.v_t.expect("requested").transpose() * inner.u.expect("requested").transpose();
        q += un * w * vn.transpose();
    }
    Ok(q)
}

/// Orthogonal Procrustes on column-centred inputs.
pub fn procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>, AlignmentError> {
    if x.shape() != y.shape() {
        return Err(AlignmentError::ShapeMismatch(x.shape(), y.shape()));
    }
    orthogonal_map(&center_columns(x), &center_columns(y))
}

/// `min_Q ‖XQ − Y‖_F` over orthogonal `Q`, without centring.
pub fn procrustes_residual(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, AlignmentError> {
    let q = orthogonal_map(x, y)?;
    Ok((x * q - y).norm())
}

/// Expected residual of a centred Procrustes fit when `Y = XQ* + σE` with
/// `m × n` inputs: `σ·sqrt(dof)` where dof discounts the parameters of the
/// orthogonal map that the `r = min(m − 1, n)` dimensional row space can
/// absorb.
pub fn procrustes_noise_floor(m: usize, n: usize, sigma: f64) -> f64 {
    let r = (m - 1).min(n) as f64;
    let n = n as f64;
    let dof = (m as f64 - 1.0) * n - (n * r - r * (r + 1.0) / 2.0);
    sigma * dof.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, orthogonality_defect, random_orthogonal};
    use crate::par::stream_rng;

    #[test]
    fn identity_for_identical_inputs() {
        let mut rng = stream_rng(1, 0);
        for (m, n) in [(60, 10), (40, 80)] {
            let x = gaussian_matrix(m, n, &mut rng);
            let q = procrustes(&x, &x).unwrap();
            assert!((q - DMatrix::<f64>::identity(n, n)).norm() < 1e-10, "{m}x{n}");
        }
    }

    #[test]
    fn recovers_rotation_when_identifiable() {
        let mut rng = stream_rng(2, 0);
        let x = gaussian_matrix(60, 12, &mut rng);
        let qs = random_orthogonal(12, &mut rng);
        let q = procrustes(&x, &(&x * &qs)).unwrap();
        assert!((q - qs).norm() < 1e-8);
    }

    #[test]
    fn wide_inputs_fit_the_row_space() {
        let mut rng = stream_rng(3, 0);
        let x = gaussian_matrix(40, 80, &mut rng);
        let qs = random_orthogonal(80, &mut rng);
        let y = &x * &qs;
        let q = procrustes(&x, &y).unwrap();
        assert!(orthogonality_defect(&q) < 1e-8);
        let xc = center_columns(&x);
        assert!((&xc * &q - &xc * &qs).norm() < 1e-8);
    }

    #[test]
    fn optimal_against_random_maps() {
        let mut rng = stream_rng(4, 0);
        let x = gaussian_matrix(30, 6, &mut rng);
        let y = gaussian_matrix(30, 6, &mut rng);
        let (xc, yc) = (center_columns(&x), center_columns(&y));
        let best = (&xc * procrustes(&x, &y).unwrap() - &yc).norm();
        for _ in 0..100 {
            let q = random_orthogonal(6, &mut rng);
            assert!(best <= (&xc * q - &yc).norm() + 1e-12);
        }
        assert!(matches!(
            procrustes(&x, &gaussian_matrix(30, 5, &mut rng)),
            Err(AlignmentError::ShapeMismatch(..))
        ));
    }

    #[test]
    fn noise_floor_matches_simulation() {
        let (m, n, sigma) = (40, 80, 0.01);
        let mut ratios = Vec::new();
        for seed in 0..10 {
            let mut rng = stream_rng(50 + seed, 0);
            let x = gaussian_matrix(m, n, &mut rng);
            let y = &x * random_orthogonal(n, &mut rng) + gaussian_matrix(m, n, &mut rng) * sigma;
            let q = procrustes(&x, &y).unwrap();
            let res = (center_columns(&x) * q - center_columns(&y)).norm();
            ratios.push(res / procrustes_noise_floor(m, n, sigma));
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean - 1.0).abs() < 0.03, "{ratios:?}");
    }
}
