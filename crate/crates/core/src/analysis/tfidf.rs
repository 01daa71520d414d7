use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::validation::tokens;

/// All sentences of one domain, treated as a single document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainDocument {
    pub domain: String,
    pub sentences: Vec<String>,
}

/// Per-domain TF-IDF with relative term frequency and smoothed
/// `idf = ln((1 + N) / (1 + df)) + 1`.
pub fn tfidf(docs: &[DomainDocument]) -> Vec<(String, BTreeMap<String, f64>)> {
    let counts: Vec<BTreeMap<String, usize>> = docs
        .iter()
        .map(|d| {
            let mut c = BTreeMap::new();
            for s in &d.sentences {
                for t in tokens(s) {
                    *c.entry(t).or_default() += 1;
                }
            }
            c
        })
        .collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &counts {
        for w in c.keys() {
            *df.entry(w.as_str()).or_default() += 1;
        }
    }
    let n = docs.len() as f64;
    docs.iter()
        .zip(&counts)
        .map(|(d, c)| {
            let total: usize = c.values().sum();
            let scores = c
                .iter()
                .map(|(w, &k)| {
                    let idf = ((1.0 + n) / (1.0 + df[w.as_str()] as f64)).ln() + 1.0;
                    (w.clone(), k as f64 / total as f64 * idf)
                })
                .collect();
            (d.domain.clone(), scores)
        })
        .collect()
}

/// The `k` highest-scoring terms, ties in lexicographic order.
pub fn top_terms(scores: &BTreeMap<String, f64>, k: usize) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = scores.iter().map(|(w, &s)| (w.clone(), s)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(domain: &str, s: &[&str]) -> DomainDocument {
        DomainDocument {
            domain: domain.into(),
            sentences: s.iter().map(|x| x.to_string()).collect(),
        }
    }

    #[test]
    fn smoothing_cases() {
        let docs = [doc("human", &["The cat sat."]), doc("llm", &["The dog ran, the end!"])];
        let out = tfidf(&docs);
        let h = &out[0].1;
        let l = &out[1].1;
        assert!((h["the"] - 1.0 / 3.0).abs() < 1e-15);
        assert!((l["the"] - 2.0 / 5.0).abs() < 1e-15);
        assert!((h["cat"] - (1.5f64.ln() + 1.0) / 3.0).abs() < 1e-15);
        let empty = tfidf(&[doc("human", &[]), doc("llm", &["hi there"])]);
        assert!(empty[0].1.is_empty());
        let top: Vec<String> = top_terms(l, 2).into_iter().map(|(w, _)| w).collect();
        assert_eq!(top, ["the", "dog"]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(words in proptest::collection::vec((0usize..2, 0usize..5), 1..40)) {
            let vocab = ["alpha", "beta", "gamma", "delta", "eps"];
            let docs: Vec<DomainDocument> = (0..2)
                .map(|d| DomainDocument {
                    domain: format!("d{d}"),
                    sentences: words.iter().filter(|w| w.0 == d).map(|w| vocab[w.1].to_string()).collect(),
                })
                .collect();
            let out = tfidf(&docs);
            for d in 0..2 {
                let total = words.iter().filter(|w| w.0 == d).count() as f64;
                for (v, name) in vocab.iter().enumerate() {
                    let k = words.iter().filter(|w| w.0 == d && w.1 == v).count() as f64;
                    let dfc = (0..2).filter(|&e| words.iter().any(|w| w.0 == e && w.1 == v)).count() as f64;
                    match out[d].1.get(*name) {
                        Some(s) => prop_assert!((s - k / total * ((3.0 / (1.0 + dfc)).ln() + 1.0)).abs() < 1e-12),
                        None => prop_assert_eq!(k, 0.0),
                    }
                }
            }
        }
    }
}
