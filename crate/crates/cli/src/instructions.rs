//! Static instruction pages served to participants.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use swp_core::ratings::Feature;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instructions {
    pub title: String,
    pub body: Vec<String>,
    #[serde(default)]
    pub examples: Vec<String>,
}

const TONE_DEFINITION: &str = "A conversational tone is a single adjective for the attitude or manner a speaker \
    conveys in a sentence, for example grateful, sarcastic or curious.";

fn page(title: &str, body: &[&str], examples: &[&str]) -> Instructions {
    Instructions {
        title: title.into(),
        body: body.iter().map(|s| s.to_string()).collect(),
        examples: examples.iter().map(|s| s.to_string()).collect(),
    }
}

/// Instruction kinds served by the API.
pub const KINDS: [&str; 5] = ["sentence", "tone", "rating", "similarity", "feature"];

pub fn builtin() -> BTreeMap<String, Instructions> {
    let features: Vec<String> = Feature::ALL.iter().map(|f| f.definition().to_string()).collect();
    let feature_refs: Vec<&str> = features.iter().map(String::as_str).collect();
    let mut body = vec![
        TONE_DEFINITION,
        "You will see a tone and a feature. Rate how well the feature describes the tone on a scale from 1 to 5.",
    ];
    body.extend(feature_refs);
    [
        (
            "sentence",
            page(
                "Write a sentence",
                &[
                    TONE_DEFINITION,
                    "You will see a tone. Write one sentence of more than five words that a speaker could say in that tone.",
                    "Do not use the tone word itself or another form of it, and avoid offensive language.",
                ],
                &["Tone: grateful. Sentence: Thank you so much for everything today."],
            ),
        ),
        (
            "tone",
            page(
                "Name the tone",
                &[
                    TONE_DEFINITION,
                    "You will see a sentence. Enter one correctly spelled adjective that describes its tone.",
                    "Do not reuse a word from the sentence or another form of it.",
                ],
                &["Sentence: We won the game! Tone: excited."],
            ),
        ),
        (
            "rating",
            page(
                "Rate the fit",
                &[
                    TONE_DEFINITION,
                    "You will see a sentence and a tone. Rate how strongly the sentence conveys the tone, from 1 (not at all) to 5 (very strongly).",
                ],
                &[],
            ),
        ),
        (
            "similarity",
            page(
                "Rate the similarity",
                &[
                    TONE_DEFINITION,
                    "You will see two tones. Rate how similar they are, from 1 (very dissimilar) to 5 (very similar).",
                ],
                &[],
            ),
        ),
        ("feature", page("Rate a feature", &body, &[])),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Built-in pages with `overrides` applied by kind.
pub fn merged(overrides: &BTreeMap<String, Instructions>) -> BTreeMap<String, Instructions> {
    let mut pages = builtin();
    pages.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
    pages
}
