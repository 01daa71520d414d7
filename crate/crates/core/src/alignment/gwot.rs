use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::AlignmentError;
use crate::linalg::{center_columns, squared_distances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GwotParams {
    /// Entropic regularisation, relative to the median-normalised costs.
    pub epsilon: f64,
    pub max_outer: usize,
    pub inner_sinkhorn_iters: usize,
    /// Stop when no coupling entry moves by more than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for GwotParams {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            max_outer: 200,
            inner_sinkhorn_iters: 500,
            tol: 1e-9,
            seed: 0,
        }
    }
}

impl GwotParams {
    /// Regularisation coefficient of the reference stochastic solver. Its
    /// learning rate and batch size have no counterpart here.
    pub fn reference_preset() -> Self {
        Self {
            epsilon: 0.5,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwotSolution {
    pub coupling: DMatrix<f64>,
    /// GW objective at the start and after every outer step.
    pub objective_history: Vec<f64>,
    pub converged: bool,
    /// Largest marginal violation of the final coupling.
    pub marginal_error: f64,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log-domain Sinkhorn: the coupling `exp(K + f ⊕ g)` with marginals `p`, `q`.
pub fn sinkhorn_log(k: &DMatrix<f64>, p: &[f64], q: &[f64], iters: usize, tol: f64) -> DMatrix<f64> {
    let (m, n) = k.shape();
    let lp: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    let lq: Vec<f64> = q.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    for _ in 0..iters {
        for i in 0..m {
            f[i] = lp[i] - log_sum_exp((0..n).map(|j| k[(i, j)] + g[j]));
        }
        let mut delta: f64 = 0.0;
        for j in 0..n {
            let gj = lq[j] - log_sum_exp((0..m).map(|i| k[(i, j)] + f[i]));
            delta = delta.max((gj - g[j]).abs());
            g[j] = gj;
        }
        if delta < tol {
            break;
        }
    }
    DMatrix::from_fn(m, n, |i, j| (k[(i, j)] + f[i] + g[j]).exp())
}

struct Problem {
    c1: DMatrix<f64>,
    c2: DMatrix<f64>,
    constant: DMatrix<f64>,
}

impl Problem {
    fn new(x: &DMatrix<f64>, y: &DMatrix<f64>, p: &[f64], q: &[f64]) -> Self {
        let c1 = normalized_costs(x);
        let c2 = normalized_costs(y);
        let c1sq = c1.component_mul(&c1);
        let c2sq = c2.component_mul(&c2);
        let a: Vec<f64> = (0..c1.nrows()).map(|i| (0..p.len()).map(|k| c1sq[(i, k)] * p[k]).sum()).collect();
        let b: Vec<f64> = (0..c2.nrows()).map(|j| (0..q.len()).map(|k| c2sq[(j, k)] * q[k]).sum()).collect();
        let constant = DMatrix::from_fn(a.len(), b.len(), |i, j| a[i] + b[j]);
        Self { c1, c2, constant }
    }

    /// `L(C1, C2) ⊗ T` for the square loss.
    fn tensor(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        &self.constant - (&self.c1 * t * self.c2.transpose()) * 2.0
    }

    fn objective(&self, t: &DMatrix<f64>) -> f64 {
        self.tensor(t).component_mul(t).sum()
    }
}

fn normalized_costs(x: &DMatrix<f64>) -> DMatrix<f64> {
    let c = squared_distances(&center_columns(x));
    let mut off: Vec<f64> = crate::stats::upper_triangle(&c);
    off.sort_by(f64::total_cmp);
    let med = if off.is_empty() { 1.0 } else { crate::stats::percentile_sorted(&off, 0.5) };
    if med > 0.0 {
        c / med
    } else {
        c
    }
}

/// Entropic Gromov-Wasserstein between the squared-Euclidean structures of
/// `x` and `y` with uniform marginals.
///
/// Each outer step solves a KL-proximal linearisation by Sinkhorn, then
/// moves towards it with an exact line search on the quadratic objective,
/// so the objective never increases.
pub fn gwot(x: &DMatrix<f64>, y: &DMatrix<f64>, params: &GwotParams) -> Result<GwotSolution, AlignmentError> {
    if !(params.epsilon > 0.0) {
        return Err(AlignmentError::InvalidParameter(format!("epsilon must be positive, got {}", params.epsilon)));
    }
    let (m, n) = (x.nrows(), y.nrows());
    if m < 2 || n < 2 {
        return Err(AlignmentError::TooFewPoints(m.min(n)));
    }
    let p = vec![1.0 / m as f64; m];
    let q = vec![1.0 / n as f64; n];
    let prob = Problem::new(x, y, &p, &q);
    let mut t = DMatrix::from_fn(m, n, |i, j| p[i] * q[j]);
    let mut history = vec![prob.objective(&t)];
    let mut converged = false;
    for _ in 0..params.max_outer {
        let grad = prob.tensor(&t);
        let k = DMatrix::from_fn(m, n, |i, j| t[(i, j)].max(1e-300).ln() - grad[(i, j)] / params.epsilon);
        let target = sinkhorn_log(&k, &p, &q, params.inner_sinkhorn_iters, 1e-10);
        let d = &target - &t;
        // objective(t + a d) = f0 + a·b + a²·c
        let f0 = history[history.len() - 1];
        let c = -2.0 * (&prob.c1 * &d * prob.c2.transpose()).component_mul(&d).sum();
        let b = 2.0 * grad.component_mul(&d).sum() - (prob.constant.component_mul(&d)).sum();
        let alpha = if c > 0.0 {
            (-b / (2.0 * c)).clamp(0.0, 1.0)
        } else if b + c < 0.0 {
            1.0
        } else {
            0.0
        };
        let next = &t + &d * alpha;
        let step = (&next - &t).amax();
        let f1 = prob.objective(&next);
        if f1 > f0 {
            // rounding made the step uphill; no further progress is possible
            break;
        }
        t = next;
        history.push(f1);
        if step < params.tol {
            converged = true;
            break;
        }
    }
    let marginal_error = marginal_error(&t, &p, &q);
    Ok(GwotSolution {
        coupling: t,
        objective_history: history,
        converged,
        marginal_error,
    })
}

pub fn marginal_error(t: &DMatrix<f64>, p: &[f64], q: &[f64]) -> f64 {
    let rows = (0..t.nrows()).map(|i| (t.row(i).sum() - p[i]).abs());
    let cols = (0..t.ncols()).map(|j| (t.column(j).sum() - q[j]).abs());
    rows.chain(cols).fold(0.0, f64::max)
}
