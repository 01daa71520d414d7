use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slot names a template may reference.
pub const SLOT_NAMES: [&str; 6] = ["tone", "sentence", "feature", "feature_definition", "tone_a", "tone_b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseFormat {
    Adjective,
    Sentence,
    #[serde(rename = "integer_1_to_5")]
    Integer1To5,
    #[serde(rename = "number_0_to_1")]
    Number0To1,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("template {template}: slot {{{slot}}} is not bound")]
    MissingSlot { template: String, slot: String },
    #[error("template {template}: undeclared slot {{{slot}}}")]
    UndeclaredSlot { template: String, slot: String },
    #[error("template {template}: unterminated slot at byte {at}")]
    Unterminated { template: String, at: usize },
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(String),
}

/// A prompt with `{slot}` placeholders and the response format it expects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    id: String,
    text: String,
    format: ResponseFormat,
    pieces: Vec<Piece>,
}

impl PromptTemplate {
    pub fn new(id: &str, text: &str, format: ResponseFormat) -> Result<Self, PromptError> {
        let mut pieces = Vec::new();
        let mut rest = text;
        let mut offset = 0;
        while let Some(open) = rest.find('{') {
            let Some(close) = rest[open..].find('}') else {
                return Err(PromptError::Unterminated {
                    template: id.to_string(),
                    at: offset + open,
                });
            };
            let name = &rest[open + 1..open + close];
            if !SLOT_NAMES.contains(&name) {
                return Err(PromptError::UndeclaredSlot {
                    template: id.to_string(),
                    slot: name.to_string(),
                });
            }
            if open > 0 {
                pieces.push(Piece::Text(rest[..open].to_string()));
            }
            pieces.push(Piece::Slot(name.to_string()));
            offset += open + close + 1;
            rest = &rest[open + close + 1..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.to_string()));
        }
        Ok(Self {
            id: id.to_string(),
            text: text.to_string(),
            format,
            pieces,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn format(&self) -> ResponseFormat {
        self.format
    }

    /// Distinct slot names in order of first use.
    pub fn slots(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.pieces {
            if let Piece::Slot(s) = p {
                if !out.contains(&s.as_str()) {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Substitutes every slot in one pass. Bound values are inserted verbatim.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<String, PromptError> {
        let mut out = String::with_capacity(self.text.len());
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(s) => {
                    let value = bindings
                        .iter()
                        .find(|(k, _)| k == s)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| PromptError::MissingSlot {
                            template: self.id.clone(),
                            slot: s.clone(),
                        })?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

/// The five prompts used by LLM agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub tone_given_sentence: PromptTemplate,
    pub sentence_given_tone: PromptTemplate,
    pub fit_rating: PromptTemplate,
    pub similarity: PromptTemplate,
    pub feature_rating: PromptTemplate,
}

const BUILTIN: [(&str, &str, ResponseFormat); 5] = [
    (
        "tone_given_sentence",
        include_str!("../../prompts/tone_given_sentence.txt"),
        ResponseFormat::Adjective,
    ),
    (
        "sentence_given_tone",
        include_str!("../../prompts/sentence_given_tone.txt"),
        ResponseFormat::Sentence,
    ),
    ("fit_rating", include_str!("../../prompts/fit_rating.txt"), ResponseFormat::Integer1To5),
    ("similarity", include_str!("../../prompts/similarity.txt"), ResponseFormat::Number0To1),
    (
        "feature_rating",
        include_str!("../../prompts/feature_rating.txt"),
        ResponseFormat::Integer1To5,
    ),
];

impl PromptSet {
    pub fn builtin() -> Self {
        let texts: BTreeMap<&str, String> = BUILTIN.iter().map(|(id, t, _)| (*id, t.trim_end().to_string())).collect();
        Self::from_texts(&texts).expect("bundled templates parse")
    }

    /// Loads `<id>.txt` files from `dir`, falling back to the bundled text
    /// for any file that is absent.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut texts = BTreeMap::new();
        for (id, builtin, _) in BUILTIN {
            let path = dir.join(format!("{id}.txt"));
            let text = if path.exists() {
                std::fs::read_to_string(&path).map_err(|e| PromptError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?
            } else {
                builtin.to_string()
            };
            texts.insert(id, text.trim_end().to_string());
        }
        Self::from_texts(&texts)
    }

    fn from_texts(texts: &BTreeMap<&str, String>) -> Result<Self, PromptError> {
        let get = |i: usize| {
            let (id, _, format) = BUILTIN[i];
            PromptTemplate::new(id, &texts[id], format)
        };
        Ok(Self {
            tone_given_sentence: get(0)?,
            sentence_given_tone: get(1)?,
            fit_rating: get(2)?,
            similarity: get(3)?,
            feature_rating: get(4)?,
        })
    }

    pub fn all(&self) -> [&PromptTemplate; 5] {
        [
            &self.tone_given_sentence,
            &self.sentence_given_tone,
            &self.fit_rating,
            &self.similarity,
            &self.feature_rating,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tone_prompt_contains_sentence() {
        let p = PromptSet::builtin();
        let out = p.tone_given_sentence.render(&[("sentence", "I love this!")]).unwrap();
        assert!(out.contains("I love this!"));
        assert!(out.ends_with("Respond using only an adjective."));
        assert!(!out.contains('{'));
    }

    #[test]
    fn zero_slot_template_unchanged() {
        let t = PromptTemplate::new("plain", "Say hello.", ResponseFormat::Sentence).unwrap();
        assert!(t.slots().is_empty());
        assert_eq!(t.render(&[]).unwrap(), "Say hello.");
    }

    #[test]
    fn unbound_slot_errors() {
        let p = PromptSet::builtin();
        let err = p.fit_rating.render(&[("tone", "sad")]).unwrap_err();
        assert!(matches!(err, PromptError::MissingSlot { ref slot, .. } if slot == "sentence"));
    }

    #[test]
    fn undeclared_and_unterminated() {
        assert!(matches!(
            PromptTemplate::new("x", "a {colour} b", ResponseFormat::Sentence),
            Err(PromptError::UndeclaredSlot { .. })
        ));
        assert!(matches!(
            PromptTemplate::new("x", "a {tone b", ResponseFormat::Sentence),
            Err(PromptError::Unterminated { at: 2, .. })
        ));
    }

    #[test]
    fn builtin_slots_and_formats() {
        let p = PromptSet::builtin();
        assert_eq!(p.tone_given_sentence.slots(), vec!["sentence"]);
        assert_eq!(p.sentence_given_tone.slots(), vec!["tone"]);
        assert_eq!(p.fit_rating.slots(), vec!["tone", "sentence"]);
        assert_eq!(p.similarity.slots(), vec!["tone_a", "tone_b"]);
        assert_eq!(p.feature_rating.slots(), vec!["feature_definition", "feature", "tone"]);
        assert_eq!(p.similarity.format(), ResponseFormat::Number0To1);
        assert_eq!(
            serde_json::to_string(&ResponseFormat::Integer1To5).unwrap(),
            "\"integer_1_to_5\""
        );
    }

    #[test]
    fn load_dir_overrides_present_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("fit_rating.txt"), "Rate {tone} for {sentence}.\n").unwrap();
        let p = PromptSet::load_dir(dir.path()).unwrap();
        assert_eq!(p.fit_rating.text(), "Rate {tone} for {sentence}.");
        assert_eq!(p.similarity, PromptSet::builtin().similarity);
    }

    proptest! {
        #[test]
        fn rendering_is_injective(a in "[a-z]{1,8}", b in "[a-z]{1,8}", c in "[a-z]{1,8}", d in "[a-z]{1,8}") {
            let p = PromptSet::builtin();
            for t in p.all() {
                let bind = |x: &str, y: &str| -> Vec<(&str, String)> {
                    t.slots().iter().enumerate().map(|(i, s)| (*s, if i == 0 { x.to_string() } else { format!("{y}{i}") })).collect()
                };
                let b1 = bind(&a, &b);
                let b2 = bind(&c, &d);
                let r1 = t.render(&b1.iter().map(|(k, v)| (*k, v.as_str())).collect::<Vec<_>>()).unwrap();
                let r2 = t.render(&b2.iter().map(|(k, v)| (*k, v.as_str())).collect::<Vec<_>>()).unwrap();
                prop_assert_eq!(b1 == b2, r1 == r2);
            }
        }
    }
}
