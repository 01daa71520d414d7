use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::hungarian::{assign_max, assign_min};
use super::procrustes::orthogonal_map;
use super::AlignmentError;
use crate::linalg::{center_columns, normalize_rows, permute_rows};
use crate::par::stream_rng;

/// Domain in which candidate neighbours are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborDirection {
    /// Each source keeps its most similar targets.
    Forward,
    /// Each target keeps its most similar sources.
    #[default]
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BliParams {
    pub k_neighbors: usize,
    pub direction: NeighborDirection,
    pub max_em_iters: usize,
    /// Rounds of relational refinement of the initial matching.
    pub refine_rounds: usize,
    /// Restart 0 is deterministic; later restarts perturb the initial scores.
    pub restarts: usize,
    /// Perturbation scale relative to the spread of the initial scores.
    pub restart_noise: f64,
    pub seed: u64,
}

impl Default for BliParams {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            direction: NeighborDirection::Backward,
            max_em_iters: 50,
            refine_rounds: 10,
            restarts: 3,
            restart_noise: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BliSolution {
    /// `matching[i]` is the target row matched to source row `i`.
    pub matching: Vec<usize>,
    pub map: DMatrix<f64>,
    /// Total matched cosine similarity under the fitted map.
    pub objective: f64,
    pub objective_history: Vec<f64>,
    /// The neighbour restriction admitted no perfect matching at some step.
    pub fallback_used: bool,
    pub restart: usize,
}

/// Rows centred and scaled so that their dot products are correlations.
fn zrows(m: &DMatrix<f64>) -> DMatrix<f64> {
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

fn row_corr(m: &DMatrix<f64>) -> DMatrix<f64> {
    let z = zrows(m);
    &z * z.transpose()
}

fn sort_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        let mut row: Vec<f64> = m.row(i).iter().copied().collect();
        row.sort_by(f64::total_cmp);
        for (j, v) in row.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

fn permute_cols(m: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), order.len(), |i, j| m[(i, order[j])])
}

/// Sum of singular values of `xᵀ y[pi]`: the best total similarity any
/// orthogonal map achieves for matching `pi`.
fn matching_objective(xn: &DMatrix<f64>, yn: &DMatrix<f64>, pi: &[usize]) -> f64 {
    (xn.transpose() * permute_rows(yn, pi)).singular_values().sum()
}

fn restricted_assignment(s: &DMatrix<f64>, k: usize, direction: NeighborDirection) -> Option<Vec<usize>> {
    let m = s.nrows();
    let k = k.min(m);
    let mut allowed = DMatrix::from_element(m, m, false);
    let top = |vals: Vec<(usize, f64)>| {
        let mut v = vals;
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.truncate(k);
        v
    };
    for a in 0..m {
        match direction {
            NeighborDirection::Backward => {
                for (i, _) in top((0..m).map(|i| (i, s[(i, a)])).collect()) {
                    allowed[(i, a)] = true;
                }
            }
            NeighborDirection::Forward => {
                for (j, _) in top((0..m).map(|j| (j, s[(a, j)])).collect()) {
                    allowed[(a, j)] = true;
                }
            }
        }
    }
    let big = 1e6;
    let cost = DMatrix::from_fn(m, m, |i, j| if allowed[(i, j)] { -s[(i, j)] } else { big });
    let a = assign_min(&cost);
    a.iter().enumerate().all(|(i, &j)| allowed[(i, j)]).then_some(a)
}

/// Unsupervised lexicon induction between `x` and `y` (same shape).
///
/// An initial matching compares each item's sorted similarity profile and
/// is refined by matching full similarity profiles under the current
/// correspondence. Hard EM then alternates an orthogonal Procrustes map with
/// an optimal one-to-one assignment restricted to the `k_neighbors` most
/// similar candidates. A step that would lower the objective ends the
/// iteration, so the objective never decreases.
pub fn bli(x: &DMatrix<f64>, y: &DMatrix<f64>, params: &BliParams) -> Result<BliSolution, AlignmentError> {
    if x.shape() != y.shape() {
        return Err(AlignmentError::ShapeMismatch(x.shape(), y.shape()));
    }
    if x.nrows() < 2 {
        return Err(AlignmentError::TooFewPoints(x.nrows()));
    }
    if params.k_neighbors == 0 {
        return Err(AlignmentError::InvalidParameter("k_neighbors must be at least 1".into()));
    }
    let (xc, yc) = (center_columns(x), center_columns(y));
    let (xn, yn) = (normalize_rows(&xc), normalize_rows(&yc));
    let (sx, sy) = (row_corr(&xc), row_corr(&yc));
    let profile = zrows(&sort_rows(&sx)) * zrows(&sort_rows(&sy)).transpose();
    let spread = {
        let mean = profile.mean();
        (profile.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / profile.len() as f64).sqrt()
    };
    let mut sx0 = sx.clone();
    let mut sy0 = sy.clone();
    sx0.fill_diagonal(0.0);
    sy0.fill_diagonal(0.0);
    let zx = zrows(&sx0);

    let mut best: Option<BliSolution> = None;
    for restart in 0..params.restarts.max(1) {
        let mut init = profile.clone();
        if restart > 0 && spread > 0.0 {
            let mut rng = stream_rng(params.seed, restart as u64);
            let noise = Normal::new(0.0, params.restart_noise * spread).expect("finite scale");
            init.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
        }
        let mut pi = assign_max(&init);
        for _ in 0..params.refine_rounds {
            let next = assign_max(&(&zx * zrows(&permute_cols(&sy0, &pi)).transpose()));
            if next == pi {
                break;
            }
            pi = next;
        }
        let mut objective = matching_objective(&xn, &yn, &pi);
        let mut history = vec![objective];
        let mut fallback_used = false;
        for _ in 0..params.max_em_iters {
            let q = orthogonal_map(&xn, &permute_rows(&yn, &pi))?;
            let s = &xn * q * yn.transpose();
            let next = match restricted_assignment(&s, params.k_neighbors, params.direction) {
                Some(a) => a,
                None => {
                    fallback_used = true;
                    assign_max(&s)
                }
            };
            if next == pi {
                break;
            }
            let value = matching_objective(&xn, &yn, &next);
            if value < objective {
                break;
            }
            pi = next;
            objective = value;
            history.push(value);
        }
        let map = orthogonal_map(&xn, &permute_rows(&yn, &pi))?;
        let sol = BliSolution {
            matching: pi,
            map,
            objective,
            objective_history: history,
            fallback_used,
            restart,
        };
        if best.as_ref().is_none_or(|b| sol.objective > b.objective) {
            best = Some(sol);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, random_orthogonal};
    use rand::seq::SliceRandom;

    #[test]
    fn identical_sets_give_identity() {
        let x = gaussian_matrix(20, 30, &mut stream_rng(1, 0));
        let s = bli(&x, &x, &BliParams::default()).unwrap();
        assert_eq!(s.matching, (0..20).collect::<Vec<_>>());
        let xn = normalize_rows(&center_columns(&x));
        assert!((&xn * &s.map - &xn).norm() < 1e-8);
    }

    #[test]
    fn recovers_permutation_and_rotation() {
        let mut rng = stream_rng(2, 0);
        let (m, n) = (40, 80);
        let x = gaussian_matrix(m, n, &mut rng);
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut rng);
        let y = permute_rows(&x, &perm) * random_orthogonal(n, &mut rng) + gaussian_matrix(m, n, &mut rng) * 0.05;
        let s = bli(&x, &y, &BliParams::default()).unwrap();
        let correct = (0..m).filter(|&k| s.matching[perm[k]] == k).count();
        assert!(correct >= 38, "{correct}/40");
        for w in s.objective_history.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn duplicate_rows_keep_objective() {
        let mut x = gaussian_matrix(10, 12, &mut stream_rng(3, 0));
        let row = x.row(0).into_owned();
        x.row_mut(1).copy_from(&row);
        let a = bli(&x, &x, &BliParams::default()).unwrap();
        let xn = normalize_rows(&center_columns(&x));
        let best = matching_objective(&xn, &xn, &(0..10).collect::<Vec<_>>());
        assert!((a.objective - best).abs() < 1e-9);
    }

    #[test]
    fn forward_direction_and_validation() {
        let x = gaussian_matrix(8, 6, &mut stream_rng(4, 0));
        let p = BliParams {
            direction: NeighborDirection::Forward,
            ..BliParams::default()
        };
        assert_eq!(bli(&x, &x, &p).unwrap().matching, (0..8).collect::<Vec<_>>());
        let bad = BliParams {
            k_neighbors: 0,
            ..BliParams::default()
        };
        assert!(matches!(bli(&x, &x, &bad), Err(AlignmentError::InvalidParameter(_))));
        let y = gaussian_matrix(8, 5, &mut stream_rng(4, 1));
        assert!(matches!(bli(&x, &y, &p), Err(AlignmentError::ShapeMismatch(..))));
    }
}
