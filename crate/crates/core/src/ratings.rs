//! Judgment experiments: quality-of-fit ratings, pairwise tone similarity
//! and tone feature ratings.
//!
//! Plans assign every pair to `repeats` rater sessions without repeating a
//! pair inside a session. Aggregation turns records into mean matrices.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentError, JudgmentContext, Rater};
use crate::item::{Domain, Sentence, Tone};
use crate::par::{map_indices, Execution};

const FEATURE_DEFINITIONS: &str = include_str!("../prompts/feature_definitions.txt");

#[derive(Debug, Error)]
pub enum RatingError {
    #[error("repeats must be at least 1")]
    ZeroRepeats,
    #[error("session size must be at least 1")]
    ZeroSessionSize,
    #[error("infeasible plan: {raters} raters x {session_size} trials < {pairs} pairs x {repeats} repeats")]
    Infeasible {
        raters: usize,
        session_size: usize,
        pairs: usize,
        repeats: usize,
    },
    #[error("unknown item {0:?}")]
    UnknownItem(String),
    #[error("no ratings for cell ({0}, {1})")]
    EmptyCell(String, String),
    #[error("no similarity ratings for pair ({0}, {1})")]
    MissingPair(String, String),
    #[error("rating {0} outside 1..=5")]
    OutOfRange(f64),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Tone features rated in the feature experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feature {
    ValencePositive,
    Aroused,
    Informational,
    Relational,
}

struct FeatureText {
    label: String,
    definition: String,
}

fn feature_texts() -> &'static HashMap<String, FeatureText> {
    static TEXTS: OnceLock<HashMap<String, FeatureText>> = OnceLock::new();
    TEXTS.get_or_init(|| {
        FEATURE_DEFINITIONS
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                let mut parts = l.splitn(3, '\t');
                let id = parts.next().expect("id").to_string();
                let label = parts.next().expect("label").to_string();
                let definition = parts.next().expect("definition").to_string();
                (id, FeatureText { label, definition })
            })
            .collect()
    })
}

impl Feature {
    pub const ALL: [Feature; 4] = [
        Feature::ValencePositive,
        Feature::Aroused,
        Feature::Informational,
        Feature::Relational,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Feature::ValencePositive => "valence-positive",
            Feature::Aroused => "aroused",
            Feature::Informational => "informational",
            Feature::Relational => "relational",
        }
    }

    /// Wording used inside the feature prompt ("how {label} is ...").
    pub fn label(self) -> &'static str {
        &feature_texts()[self.id()].label
    }

    pub fn definition(self) -> &'static str {
        &feature_texts()[self.id()].definition
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Feature {
    type Err = RatingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.id() == s || f.label() == s)
            .ok_or_else(|| RatingError::UnknownFeature(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityScale {
    #[default]
    Likert5,
    Unit,
}

/// A similarity judgment on the 1..=5 scale or directly on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scale", content = "value", rename_all = "kebab-case")]
pub enum SimilarityValue {
    Likert5(u8),
    Unit(f64),
}

impl SimilarityValue {
    /// Value on [0, 1]; Likert values map through (v - 1) / 4.
    pub fn normalized(self) -> f64 {
        match self {
            SimilarityValue::Likert5(v) => (f64::from(v) - 1.0) / 4.0,
            SimilarityValue::Unit(v) => v,
        }
    }

    pub fn is_valid(self) -> bool {
        match self {
            SimilarityValue::Likert5(v) => (1..=5).contains(&v),
            SimilarityValue::Unit(v) => (0.0..=1.0).contains(&v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub tone: Tone,
    pub sentence: String,
    pub rater_id: String,
    pub value: u8,
    #[serde(default)]
    pub experiment: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRecord {
    pub tone_a: Tone,
    pub tone_b: Tone,
    pub rater_id: String,
    pub value: SimilarityValue,
    #[serde(default)]
    pub experiment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub tone: Tone,
    pub feature: Feature,
    pub rater_id: String,
    pub value: u8,
    #[serde(default)]
    pub experiment: String,
}

/// One scheduled judgment: `pair` is rated in rater session `session`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanSlot {
    pub pair: usize,
    pub session: usize,
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanOptions {
    pub repeats: usize,
    pub session_size: usize,
    /// Upper bound on the number of rater sessions, if any.
    pub max_raters: Option<usize>,
    pub seed: u64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            repeats: 5,
            session_size: 12,
            max_raters: None,
            seed: 0,
        }
    }
}

/// Schedules `pairs x repeats` slots. Pairs are visited in one shuffled
/// order, repeated `repeats` times, and cut into consecutive sessions of
/// `min(session_size, pairs)` slots; a session therefore never sees a pair
/// twice.
pub fn schedule_pairs(pairs: usize, opts: &PlanOptions) -> Result<Vec<PlanSlot>, RatingError> {
    if opts.repeats == 0 {
        return Err(RatingError::ZeroRepeats);
    }
    if opts.session_size == 0 {
        return Err(RatingError::ZeroSessionSize);
    }
    if pairs == 0 {
        return Ok(Vec::new());
    }
    let size = opts.session_size.min(pairs);
    if let Some(raters) = opts.max_raters {
        if raters * size < pairs * opts.repeats {
            return Err(RatingError::Infeasible {
                raters,
                session_size: size,
                pairs,
                repeats: opts.repeats,
            });
        }
    }
    let mut order: Vec<usize> = (0..pairs).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    Ok((0..pairs * opts.repeats)
        .map(|k| PlanSlot {
            pair: order[k % pairs],
            session: k / size,
            position: k % size,
        })
        .collect())
}

/// Quality-of-fit plan over all (tone, sentence) pairs; pair index is
/// `tone * n_sentences + sentence`.
pub fn schedule_rating_plan(
    tones: &[Tone],
    sentences: &[Sentence],
    opts: &PlanOptions,
) -> Result<Vec<PlanSlot>, RatingError> {
    schedule_pairs(tones.len() * sentences.len(), opts)
}

/// Unordered distinct tone pairs (i < j) in row-major order.
pub fn distinct_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect()
}

/// Tone-by-sentence mean ratings. Row i is the embedding of tone i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingMatrix {
    pub tones: Vec<Tone>,
    pub sentences: Vec<String>,
    pub means: DMatrix<f64>,
    pub counts: DMatrix<usize>,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    #[default]
    Error,
    /// Empty cells take the scale midpoint 3.0.
    FillMidpoint,
}

fn index_of<'a, I: Iterator<Item = &'a str>>(items: I) -> HashMap<&'a str, usize> {
    items.enumerate().map(|(i, s)| (s, i)).collect()
}

pub fn aggregate_matrix(
    records: &[RatingRecord],
    tones: &[Tone],
    sentences: &[String],
    policy: MissingPolicy,
    domain: Domain,
) -> Result<RatingMatrix, RatingError> {
    let ti = index_of(tones.iter().map(Tone::as_str));
    let si = index_of(sentences.iter().map(String::as_str));
    let (m, n) = (tones.len(), sentences.len());
    let mut sums = DMatrix::<f64>::zeros(m, n);
    let mut counts = DMatrix::<usize>::zeros(m, n);
    for r in records {
        if !(1..=5).contains(&r.value) {
            return Err(RatingError::OutOfRange(f64::from(r.value)));
        }
        let i = *ti.get(r.tone.as_str()).ok_or_else(|| RatingError::UnknownItem(r.tone.to_string()))?;
        let j = *si.get(r.sentence.as_str()).ok_or_else(|| RatingError::UnknownItem(r.sentence.clone()))?;
        sums[(i, j)] += f64::from(r.value);
        counts[(i, j)] += 1;
    }
    let mut means = DMatrix::<f64>::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            means[(i, j)] = match (counts[(i, j)], policy) {
                (0, MissingPolicy::Error) => {
                    return Err(RatingError::EmptyCell(tones[i].to_string(), sentences[j].clone()))
                }
                (0, MissingPolicy::FillMidpoint) => 3.0,
                (c, _) => sums[(i, j)] / c as f64,
            };
        }
    }
    Ok(RatingMatrix {
        tones: tones.to_vec(),
        sentences: sentences.to_vec(),
        means,
        counts,
        domain,
    })
}

/// Symmetric tone similarity on [0, 1] with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub tones: Vec<Tone>,
    pub values: DMatrix<f64>,
}

/// Per unordered pair, the mean normalized judgment. Self-pairs are ignored
/// and the diagonal is fixed at 1.
pub fn aggregate_similarity(records: &[SimilarityRecord], tones: &[Tone]) -> Result<SimilarityMatrix, RatingError> {
    let ti = index_of(tones.iter().map(Tone::as_str));
    let m = tones.len();
    let mut sums = DMatrix::<f64>::zeros(m, m);
    let mut counts = DMatrix::<usize>::zeros(m, m);
    for r in records {
        if !r.value.is_valid() {
            return Err(RatingError::OutOfRange(r.value.normalized()));
        }
        let a = *ti.get(r.tone_a.as_str()).ok_or_else(|| RatingError::UnknownItem(r.tone_a.to_string()))?;
        let b = *ti.get(r.tone_b.as_str()).ok_or_else(|| RatingError::UnknownItem(r.tone_b.to_string()))?;
        if a == b {
            continue;
        }
        let (i, j) = (a.min(b), a.max(b));
        sums[(i, j)] += r.value.normalized();
        counts[(i, j)] += 1;
    }
    let mut values = DMatrix::<f64>::identity(m, m);
    for (i, j) in distinct_pairs(m) {
        if counts[(i, j)] == 0 {
            return Err(RatingError::MissingPair(tones[i].to_string(), tones[j].to_string()));
        }
        let v = sums[(i, j)] / counts[(i, j)] as f64;
        values[(i, j)] = v;
        values[(j, i)] = v;
    }
    Ok(SimilarityMatrix {
        tones: tones.to_vec(),
        values,
    })
}

/// Tone-by-feature mean ratings, columns in [`Feature::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRatingMatrix {
    pub tones: Vec<Tone>,
    pub features: Vec<Feature>,
    pub means: DMatrix<f64>,
}

impl FeatureRatingMatrix {
    pub fn column(&self, feature: Feature) -> Vec<f64> {
        let j = self.features.iter().position(|f| *f == feature).expect("feature present");
        self.means.column(j).iter().copied().collect()
    }
}

pub fn aggregate_features(records: &[FeatureRecord], tones: &[Tone]) -> Result<FeatureRatingMatrix, RatingError> {
    let ti = index_of(tones.iter().map(Tone::as_str));
    let m = tones.len();
    let mut sums = DMatrix::<f64>::zeros(m, Feature::ALL.len());
    let mut counts = DMatrix::<usize>::zeros(m, Feature::ALL.len());
    for r in records {
        if !(1..=5).contains(&r.value) {
            return Err(RatingError::OutOfRange(f64::from(r.value)));
        }
        let i = *ti.get(r.tone.as_str()).ok_or_else(|| RatingError::UnknownItem(r.tone.to_string()))?;
        let j = Feature::ALL.iter().position(|f| *f == r.feature).expect("listed feature");
        sums[(i, j)] += f64::from(r.value);
        counts[(i, j)] += 1;
    }
    let mut means = DMatrix::<f64>::zeros(m, Feature::ALL.len());
    for i in 0..m {
        for (j, f) in Feature::ALL.iter().enumerate() {
            if counts[(i, j)] == 0 {
                return Err(RatingError::EmptyCell(tones[i].to_string(), f.to_string()));
            }
            means[(i, j)] = sums[(i, j)] / counts[(i, j)] as f64;
        }
    }
    Ok(FeatureRatingMatrix {
        tones: tones.to_vec(),
        features: Feature::ALL.to_vec(),
        means,
    })
}

fn sessions(plan: &[PlanSlot]) -> BTreeMap<usize, Vec<(usize, PlanSlot)>> {
    let mut out: BTreeMap<usize, Vec<(usize, PlanSlot)>> = BTreeMap::new();
    for (k, s) in plan.iter().enumerate() {
        out.entry(s.session).or_default().push((k, *s));
    }
    out
}

fn run_sessions<T, F>(plan: &[PlanSlot], prefix: &str, exec: Execution, f: F) -> Result<Vec<T>, RatingError>
where
    T: Send,
    F: Fn(usize, &JudgmentContext) -> Result<T, RatingError> + Sync + Send,
{
    let groups: Vec<Vec<(usize, PlanSlot)>> = sessions(plan).into_values().collect();
    let results = map_indices(groups.len(), exec, |g| {
        groups[g]
            .iter()
            .map(|(k, slot)| {
                let ctx = JudgmentContext {
                    rater_id: format!("{prefix}-{:05}", slot.session),
                    slot: *k,
                };
                f(slot.pair, &ctx)
            })
            .collect::<Result<Vec<T>, RatingError>>()
    });
    let mut out = Vec::with_capacity(plan.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Runs a quality-of-fit plan against `rater`. Each session is one rater id.
pub fn collect_ratings(
    rater: &dyn Rater,
    tones: &[Tone],
    sentences: &[Sentence],
    plan: &[PlanSlot],
    prefix: &str,
    exec: Execution,
) -> Result<Vec<RatingRecord>, RatingError> {
    let n = sentences.len();
    run_sessions(plan, prefix, exec, |pair, ctx| {
        let (t, s) = (&tones[pair / n], &sentences[pair % n]);
        Ok(RatingRecord {
            tone: t.clone(),
            sentence: s.text().to_string(),
            rater_id: ctx.rater_id.clone(),
            value: rater.rate_fit(t, s, ctx)?,
            experiment: "fit".into(),
        })
    })
}

/// Runs a similarity plan over [`distinct_pairs`] of `tones`.
pub fn collect_similarity(
    rater: &dyn Rater,
    tones: &[Tone],
    plan: &[PlanSlot],
    prefix: &str,
    exec: Execution,
) -> Result<Vec<SimilarityRecord>, RatingError> {
    let pairs = distinct_pairs(tones.len());
    run_sessions(plan, prefix, exec, |pair, ctx| {
        let (a, b) = pairs[pair];
        Ok(SimilarityRecord {
            tone_a: tones[a].clone(),
            tone_b: tones[b].clone(),
            rater_id: ctx.rater_id.clone(),
            value: rater.rate_similarity(&tones[a], &tones[b], ctx)?,
            experiment: "similarity".into(),
        })
    })
}

/// Runs a feature plan; pair index is `tone * 4 + feature`.
pub fn collect_features(
    rater: &dyn Rater,
    tones: &[Tone],
    plan: &[PlanSlot],
    prefix: &str,
    exec: Execution,
) -> Result<Vec<FeatureRecord>, RatingError> {
    let nf = Feature::ALL.len();
    run_sessions(plan, prefix, exec, |pair, ctx| {
        let (t, f) = (&tones[pair / nf], Feature::ALL[pair % nf]);
        Ok(FeatureRecord {
            tone: t.clone(),
            feature: f,
            rater_id: ctx.rater_id.clone(),
            value: rater.rate_feature(t, f, ctx)?,
            experiment: "feature".into(),
        })
    })
}
