use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::agents::synthetic::SyntheticJoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stationary {
    pub tone: Vec<f64>,
    pub sentence: Vec<f64>,
    /// `‖πK − π‖₁` at termination.
    pub residual: f64,
    pub iterations: usize,
}

const TOLERANCE: f64 = 1e-12;
const MAX_ITER: usize = 1_000_000;

/// Tone-to-tone kernel `K[t, t'] = Σ_s p(s | t) p(t' | s)` of one S/T round.
pub fn tone_kernel(joint: &SyntheticJoint) -> DMatrix<f64> {
    let (m, n) = (joint.tones().len(), joint.sentences().len());
    let s_given_t = DMatrix::from_fn(m, n, |i, j| joint.sentence_given_tone(i)[j]);
    let t_given_s = DMatrix::from_fn(n, m, |j, i| joint.tone_given_sentence(j)[i]);
    s_given_t * t_given_s
}

fn connected(p: &DMatrix<f64>) -> bool {
    let (m, n) = p.shape();
    let mut seen_t = vec![false; m];
    let mut seen_s = vec![false; n];
    let mut stack = vec![0usize];
    seen_t[0] = true;
    while let Some(t) = stack.pop() {
        for s in 0..n {
            if p[(t, s)] > 0.0 && !seen_s[s] {
                seen_s[s] = true;
                for t2 in 0..m {
                    if p[(t2, s)] > 0.0 && !seen_t[t2] {
                        seen_t[t2] = true;
                        stack.push(t2);
                    }
                }
            }
        }
    }
    seen_t.iter().all(|&x| x) && seen_s.iter().all(|&x| x)
}

/// Stationary tone and sentence marginals of the alternating Gibbs chain,
/// by power iteration on the tone kernel.
pub fn gibbs_stationary_exact(joint: &SyntheticJoint) -> Result<Stationary, AnalysisError> {
    if joint.tones().is_empty() || !connected(joint.probs()) {
        return Err(AnalysisError::NonErgodic);
    }
    let k = tone_kernel(joint);
    let m = k.nrows();
    let mut pi = DMatrix::from_element(1, m, 1.0 / m as f64);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut next = &pi * &k;
        let z = next.sum();
        next /= z;
        residual = (&next - &pi).abs().sum();
        pi = next;
        if residual < TOLERANCE {
            break;
        }
    }
    if residual >= TOLERANCE {
        return Err(AnalysisError::NoConvergence(residual));
    }
    let tone: Vec<f64> = pi.iter().copied().collect();
    let n = joint.sentences().len();
    let sentence = (0..n)
        .map(|j| (0..m).map(|i| tone[i] * joint.sentence_given_tone(i)[j]).sum())
        .collect();
    Ok(Stationary {
        tone,
        sentence,
        residual,
        iterations,
    })
}
