use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::item::Tone;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToneHistogram {
    pub counts: BTreeMap<Tone, usize>,
    pub total: usize,
}

impl ToneHistogram {
    pub fn count(&self, tone: &Tone) -> usize {
        self.counts.get(tone).copied().unwrap_or(0)
    }

    pub fn frequency(&self, tone: &Tone) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(tone) as f64 / self.total as f64
        }
    }

    /// Tones by descending count, ties in lexicographic order.
    pub fn ranked(&self) -> Vec<(Tone, usize)> {
        let mut v: Vec<_> = self.counts.iter().map(|(t, &c)| (t.clone(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    pub fn top(&self, k: usize) -> Vec<Tone> {
        self.ranked().into_iter().take(k).map(|(t, _)| t).collect()
    }
}

pub fn tone_histogram<'a, I>(tones: I) -> ToneHistogram
where
    I: IntoIterator<Item = &'a Tone>,
{
    let mut h = ToneHistogram::default();
    for t in tones {
        *h.counts.entry(t.clone()).or_default() += 1;
        h.total += 1;
    }
    h
}

/// Shannon entropy of the empirical distribution in bits.
pub fn entropy_bits(hist: &ToneHistogram) -> Result<f64, AnalysisError> {
    if hist.total == 0 {
        return Err(AnalysisError::EmptyHistogram);
    }
    let n = hist.total as f64;
    Ok(hist
        .counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0))
}

/// Union of the top-`k` tones of both histograms, ordered by descending
/// combined relative frequency with lexicographic ties.
pub fn select_taxonomy(a: &ToneHistogram, b: &ToneHistogram, k: usize) -> Vec<Tone> {
    let mut union: Vec<Tone> = a.top(k);
    for t in b.top(k) {
        if !union.contains(&t) {
            union.push(t);
        }
    }
    let combined: HashMap<&Tone, f64> = union.iter().map(|t| (t, a.frequency(t) + b.frequency(t))).collect();
    let mut out = union.clone();
    out.sort_by(|x, y| combined[y].total_cmp(&combined[x]).then_with(|| x.cmp(y)));
    out
}
