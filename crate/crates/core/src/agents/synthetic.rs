//! Synthetic agents with known ground truth.
//!
//! [`SyntheticJoint`] is a finite joint distribution over tones and
//! template sentences; [`SyntheticAgent`] answers trials by sampling its
//! exact conditionals, so the stationary distribution of the resulting Gibbs
//! chains is computable. [`SyntheticRater`] answers judgments from a
//! latent-factor model.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Agent, AgentError, CallContext, JudgmentContext, Rater};
use crate::item::{ChainItem, Sentence, Tone};
use crate::par::{hash_str, mix_seed};
use crate::ratings::{Feature, SimilarityScale, SimilarityValue};
use crate::validation::overlaps;

/// Tones used by generated joints, in order.
pub const SYNTHETIC_TONES: [&str; 20] = [
    "polite",
    "excited",
    "grateful",
    "sad",
    "angry",
    "curious",
    "anxious",
    "calm",
    "proud",
    "worried",
    "cheerful",
    "sincere",
    "hopeful",
    "bored",
    "apologetic",
    "playful",
    "serious",
    "friendly",
    "frustrated",
    "relieved",
];

const SUBJECTS: [&str; 8] = [
    "We",
    "My brother",
    "The committee",
    "Our neighbours",
    "The new manager",
    "Your sister",
    "The students",
    "My colleague",
];

const PREDICATES: [&str; 8] = [
    "will finish the report before the deadline",
    "moved the furniture into the garage",
    "booked a table for seven people",
    "painted the fence on Sunday morning",
    "sent the parcel to the wrong address",
    "found the keys under the sofa",
    "cancelled the meeting at the last minute",
    "planted tomatoes along the back wall",
];

/// Maximum number of template sentences.
pub const MAX_TEMPLATE_SENTENCES: usize = SUBJECTS.len() * PREDICATES.len();

/// The first `n` template sentences. All are distinct and have more than
/// five words.
pub fn template_sentences(n: usize) -> Vec<Sentence> {
    assert!(n <= MAX_TEMPLATE_SENTENCES, "at most {MAX_TEMPLATE_SENTENCES} template sentences");
    (0..n)
        .map(|i| {
            let s = SUBJECTS[i % SUBJECTS.len()];
            let p = PREDICATES[(i / SUBJECTS.len() + i) % PREDICATES.len()];
            Sentence::new(&format!("{s} {p}.")).expect("template sentences are long enough")
        })
        .collect()
}

pub fn synthetic_tones(m: usize) -> Vec<Tone> {
    assert!(m <= SYNTHETIC_TONES.len(), "at most {} synthetic tones", SYNTHETIC_TONES.len());
    SYNTHETIC_TONES[..m].iter().map(|t| Tone::new(t).expect("valid tone")).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JointError {
    #[error("probability matrix is {rows}x{cols}, expected {m}x{n}")]
    Shape { rows: usize, cols: usize, m: usize, n: usize },
    #[error("negative or non-finite probability at ({0}, {1})")]
    Negative(usize, usize),
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("tone {0} has no mass")]
    EmptyRow(String),
    #[error("sentence {0:?} has no mass")]
    EmptyColumn(String),
    #[error("duplicate item {0:?}")]
    Duplicate(String),
    #[error("tone {tone} shares a stem with sentence {sentence:?}")]
    Overlap { tone: String, sentence: String },
}

/// Joint distribution p(T, S) over a finite set of tones and sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticJoint {
    tones: Vec<Tone>,
    sentences: Vec<Sentence>,
    probs: DMatrix<f64>,
    #[serde(skip)]
    tone_index: HashMap<String, usize>,
    #[serde(skip)]
    sentence_index: HashMap<String, usize>,
}

impl SyntheticJoint {
    /// Entries must be non-negative, sum to 1 within 1e-12, and every row and
    /// column must carry mass. Tones and sentences must not share stems, so
    /// that every pair passes the response filters.
    pub fn new(tones: Vec<Tone>, sentences: Vec<Sentence>, probs: DMatrix<f64>) -> Result<Self, JointError> {
        let (m, n) = (tones.len(), sentences.len());
        if probs.nrows() != m || probs.ncols() != n {
            return Err(JointError::Shape {
                rows: probs.nrows(),
                cols: probs.ncols(),
                m,
                n,
            });
        }
        for i in 0..m {
            for j in 0..n {
                let p = probs[(i, j)];
                if !p.is_finite() || p < 0.0 {
                    return Err(JointError::Negative(i, j));
                }
            }
        }
        let total = probs.sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(JointError::NotNormalized(total));
        }
        for (i, t) in tones.iter().enumerate() {
            if probs.row(i).sum() <= 0.0 {
                return Err(JointError::EmptyRow(t.to_string()));
            }
        }
        for (j, s) in sentences.iter().enumerate() {
            if probs.column(j).sum() <= 0.0 {
                return Err(JointError::EmptyColumn(s.text().to_string()));
            }
        }
        let mut tone_index = HashMap::new();
        for (i, t) in tones.iter().enumerate() {
            if tone_index.insert(t.as_str().to_string(), i).is_some() {
                return Err(JointError::Duplicate(t.to_string()));
            }
        }
        let mut sentence_index = HashMap::new();
        for (j, s) in sentences.iter().enumerate() {
            if sentence_index.insert(s.text().to_string(), j).is_some() {
                return Err(JointError::Duplicate(s.text().to_string()));
            }
        }
        for t in &tones {
            for s in &sentences {
                if overlaps(t.as_str(), s.text()) {
                    return Err(JointError::Overlap {
                        tone: t.to_string(),
                        sentence: s.text().to_string(),
                    });
                }
            }
        }
        Ok(Self {
            tones,
            sentences,
            probs,
            tone_index,
            sentence_index,
        })
    }

    /// Normalizes non-negative weights into a joint.
    pub fn from_weights(tones: Vec<Tone>, sentences: Vec<Sentence>, weights: DMatrix<f64>) -> Result<Self, JointError> {
        let total = weights.sum();
        if !(total > 0.0) {
            return Err(JointError::NotNormalized(total));
        }
        Self::new(tones, sentences, weights / total)
    }

    /// Random joint over the first `m` synthetic tones and `n` template
    /// sentences, with log-normal weights. Every entry is positive.
    pub fn random(m: usize, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DMatrix::from_fn(m, n, |_, _| {
            let z: f64 = rng.sample(StandardNormal);
            z.exp()
        });
        Self::from_weights(synthetic_tones(m), template_sentences(n), w).expect("generated joint is valid")
    }

    pub fn uniform(m: usize, n: usize) -> Self {
        Self::from_weights(synthetic_tones(m), template_sentences(n), DMatrix::from_element(m, n, 1.0))
            .expect("uniform joint is valid")
    }

    pub fn tones(&self) -> &[Tone] {
        &self.tones
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn tone_index(&self, tone: &str) -> Option<usize> {
        self.tone_index.get(tone).copied()
    }

    pub fn sentence_index(&self, sentence: &str) -> Option<usize> {
        self.sentence_index.get(sentence).copied()
    }

    /// p(T) as row sums.
    pub fn tone_marginal(&self) -> Vec<f64> {
        (0..self.tones.len()).map(|i| self.probs.row(i).sum()).collect()
    }

    /// p(S) as column sums.
    pub fn sentence_marginal(&self) -> Vec<f64> {
        (0..self.sentences.len()).map(|j| self.probs.column(j).sum()).collect()
    }

    /// p(T | S = sentence j).
    pub fn tone_given_sentence(&self, j: usize) -> Vec<f64> {
        let col = self.probs.column(j);
        let z = col.sum();
        col.iter().map(|p| p / z).collect()
    }

    /// p(S | T = tone i).
    pub fn sentence_given_tone(&self, i: usize) -> Vec<f64> {
        let row = self.probs.row(i);
        let z = row.sum();
        row.iter().map(|p| p / z).collect()
    }

    pub fn sample_tone<R: Rng + ?Sized>(&self, sentence: &str, rng: &mut R) -> Result<&Tone, AgentError> {
        let j = self
            .sentence_index(sentence)
            .ok_or_else(|| AgentError::UnknownItem(sentence.to_string()))?;
        let dist = WeightedIndex::new(self.probs.column(j).iter().copied()).expect("column has mass");
        Ok(&self.tones[dist.sample(rng)])
    }

    pub fn sample_sentence<R: Rng + ?Sized>(&self, tone: &str, rng: &mut R) -> Result<&Sentence, AgentError> {
        let i = self
            .tone_index(tone)
            .ok_or_else(|| AgentError::UnknownItem(tone.to_string()))?;
        let dist = WeightedIndex::new(self.probs.row(i).iter().copied()).expect("row has mass");
        Ok(&self.sentences[dist.sample(rng)])
    }

    /// Rebuilds the lookup tables after deserialization.
    pub fn reindex(self) -> Result<Self, JointError> {
        Self::new(self.tones, self.sentences, self.probs)
    }
}

/// Answers trials by sampling the joint's conditionals. Each call uses its
/// own RNG stream keyed by the seed and the call context.
#[derive(Debug, Clone)]
pub struct SyntheticAgent {
    joint: Arc<SyntheticJoint>,
    seed: u64,
}

impl SyntheticAgent {
    pub fn new(joint: Arc<SyntheticJoint>, seed: u64) -> Self {
        Self { joint, seed }
    }

    pub fn joint(&self) -> &SyntheticJoint {
        &self.joint
    }

    fn rng(&self, ctx: &CallContext) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix_seed(&[
            self.seed,
            hash_str(&ctx.agent_id),
            ctx.chain_id as u64,
            ctx.iteration as u64,
            u64::from(ctx.attempt),
        ]))
    }
}

impl Agent for SyntheticAgent {
    fn respond(&self, prompt: &ChainItem, ctx: &CallContext) -> Result<String, AgentError> {
        let mut rng = self.rng(ctx);
        match prompt {
            ChainItem::Tone(t) => Ok(self.joint.sample_sentence(t.as_str(), &mut rng)?.text().to_string()),
            ChainItem::Sentence(s) => Ok(self.joint.sample_tone(s.text(), &mut rng)?.as_str().to_string()),
        }
    }
}

/// Latent-factor judge. Every tone, sentence and feature has a latent
/// vector derived from its text; judgments are noisy affine functions of
/// cosine similarities, rounded to the Likert grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticRater {
    pub seed: u64,
    /// Latent dimension; must be at least 4 so each feature owns an axis.
    pub dim: usize,
    /// Standard deviation of the per-judgment noise, in Likert units.
    pub noise: f64,
    /// Scale of the domain-specific latent perturbation.
    pub domain_shift: f64,
    /// Key selecting the domain perturbation.
    pub domain: String,
    pub similarity_scale: SimilarityScale,
}

impl Default for SyntheticRater {
    fn default() -> Self {
        Self {
            seed: 0,
            dim: 6,
            noise: 0.5,
            domain_shift: 0.0,
            domain: "synthetic".into(),
            similarity_scale: SimilarityScale::Likert5,
        }
    }
}

impl SyntheticRater {
    fn latent(&self, kind: &str, text: &str) -> Vec<f64> {
        let key = [self.seed, hash_str(kind), hash_str(text)];
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&key));
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        if self.domain_shift != 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[key[0], key[1], key[2], hash_str(&self.domain)]));
            for x in &mut v {
                let z: f64 = rng.sample(StandardNormal);
                *x += self.domain_shift * z;
            }
        }
        v
    }

    fn noise_rng(&self, ctx: &JudgmentContext, keys: &[&str]) -> ChaCha8Rng {
        let mut k = vec![self.seed, hash_str(&self.domain), hash_str(&ctx.rater_id), ctx.slot as u64];
        k.extend(keys.iter().map(|s| hash_str(s)));
        ChaCha8Rng::seed_from_u64(mix_seed(&k))
    }

    fn likert(score: f64) -> u8 {
        score.round().clamp(1.0, 5.0) as u8
    }

    /// Noise-free expected fit score, before rounding.
    pub fn fit_score(&self, tone: &str, sentence: &str) -> f64 {
        3.0 + 2.0 * cosine(&self.latent("tone", tone), &self.latent("sentence", sentence))
    }

    fn feature_axis(feature: Feature) -> usize {
        Feature::ALL.iter().position(|f| *f == feature).expect("listed feature")
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

impl Rater for SyntheticRater {
    fn rate_fit(&self, tone: &Tone, sentence: &Sentence, ctx: &JudgmentContext) -> Result<u8, AgentError> {
        let mut rng = self.noise_rng(ctx, &["fit", tone.as_str(), sentence.text()]);
        let z: f64 = rng.sample(StandardNormal);
        Ok(Self::likert(self.fit_score(tone.as_str(), sentence.text()) + self.noise * z))
    }

    fn rate_similarity(&self, a: &Tone, b: &Tone, ctx: &JudgmentContext) -> Result<SimilarityValue, AgentError> {
        let mut rng = self.noise_rng(ctx, &["similarity", a.as_str(), b.as_str()]);
        let z: f64 = rng.sample(StandardNormal);
        let c = cosine(&self.latent("tone", a.as_str()), &self.latent("tone", b.as_str()));
        Ok(match self.similarity_scale {
            SimilarityScale::Likert5 => SimilarityValue::Likert5(Self::likert(3.0 + 2.0 * c + self.noise * z)),
            SimilarityScale::Unit => SimilarityValue::Unit(((1.0 + c) / 2.0 + self.noise * z / 4.0).clamp(0.0, 1.0)),
        })
    }

    fn rate_feature(&self, tone: &Tone, feature: Feature, ctx: &JudgmentContext) -> Result<u8, AgentError> {
        let mut rng = self.noise_rng(ctx, &["feature", tone.as_str(), feature.id()]);
        let z: f64 = rng.sample(StandardNormal);
        let v = self.latent("tone", tone.as_str());
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let axis = Self::feature_axis(feature) % self.dim.max(1);
        let loading = if norm > 0.0 { v[axis] / norm } else { 0.0 };
        Ok(Self::likert(3.0 + 2.0 * loading + self.noise * z))
    }
}
