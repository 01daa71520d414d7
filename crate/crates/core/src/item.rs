//! The two item kinds that flow through sampling chains.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ItemError {
    #[error("tone {0:?} must match [a-z][a-z-]*")]
    BadTone(String),
    #[error("sentence has {0} words, more than 5 are required")]
    TooShort(usize),
}

/// A conversational tone: a canonical lowercase adjective.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Tone(String);

impl Tone {
    /// Trims and lowercases `text`, then checks the `[a-z][a-z-]*` shape.
    pub fn new(text: &str) -> Result<Self, ItemError> {
        let canon = text.trim().to_lowercase();
        let mut chars = canon.chars();
        let ok = matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
            && chars.all(|c| c.is_ascii_lowercase() || c == '-');
        if ok {
            Ok(Tone(canon))
        } else {
            Err(ItemError::BadTone(text.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Tone {
    type Error = ItemError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Tone::new(&value)
    }
}

impl From<Tone> for String {
    fn from(t: Tone) -> String {
        t.0
    }
}

impl fmt::Display for Tone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Whitespace-delimited token count.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// A sentence with more than five whitespace-delimited words.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Sentence {
    text: String,
    word_count: usize,
}

impl Sentence {
    pub const MIN_WORDS_EXCLUSIVE: usize = 5;

    pub fn new(text: &str) -> Result<Self, ItemError> {
        let n = word_count(text);
        if n <= Self::MIN_WORDS_EXCLUSIVE {
            return Err(ItemError::TooShort(n));
        }
        Ok(Sentence { text: text.to_string(), word_count: n })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn word_count(&self) -> usize {
        self.word_count
    }
}

impl TryFrom<String> for Sentence {
    type Error = ItemError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Sentence::new(&value)
    }
}

impl From<Sentence> for String {
    fn from(s: Sentence) -> String {
        s.text
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "text", rename_all = "lowercase")]
pub enum ChainItem {
    Tone(Tone),
    Sentence(Sentence),
}

impl ChainItem {
    pub fn text(&self) -> &str {
        match self {
            ChainItem::Tone(t) => t.as_str(),
            ChainItem::Sentence(s) => s.text(),
        }
    }

    pub fn is_tone(&self) -> bool {
        matches!(self, ChainItem::Tone(_))
    }

    pub fn as_tone(&self) -> Option<&Tone> {
        match self {
            ChainItem::Tone(t) => Some(t),
            ChainItem::Sentence(_) => None,
        }
    }

    pub fn as_sentence(&self) -> Option<&Sentence> {
        match self {
            ChainItem::Sentence(s) => Some(s),
            ChainItem::Tone(_) => None,
        }
    }
}

impl From<Tone> for ChainItem {
    fn from(t: Tone) -> Self {
        ChainItem::Tone(t)
    }
}

impl From<Sentence> for ChainItem {
    fn from(s: Sentence) -> Self {
        ChainItem::Sentence(s)
    }
}

/// Population an experiment samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Human,
    Llm,
    Synthetic,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Human => "human",
            Domain::Llm => "llm",
            Domain::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Domain {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "human" => Ok(Domain::Human),
            "llm" | "gpt" => Ok(Domain::Llm),
            "synthetic" => Ok(Domain::Synthetic),
            other => Err(format!("unknown domain {other:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tone_canonicalizes() {
        assert_eq!(Tone::new("  Polite ").unwrap().as_str(), "polite");
        assert_eq!(Tone::new("light-hearted").unwrap().as_str(), "light-hearted");
        assert!(Tone::new("-sad").is_err());
        assert!(Tone::new("gr8ful").is_err());
        assert!(Tone::new("").is_err());
    }

    #[test]
    fn sentence_needs_six_words() {
        assert_eq!(Sentence::new("I am happy now").unwrap_err(), ItemError::TooShort(4));
        assert!(Sentence::new("one two three four five").is_err());
        let s = Sentence::new("one  two three four five six").unwrap();
        assert_eq!(s.word_count(), 6);
    }

    #[test]
    fn chain_item_json_shape() {
        let item: ChainItem = Tone::new("polite").unwrap().into();
        let json = serde_json::to_string(&item).unwrap();
        assert_eq!(json, r#"{"kind":"tone","text":"polite"}"#);
        let back: ChainItem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, item);
        assert!(serde_json::from_str::<ChainItem>(r#"{"kind":"sentence","text":"too short"}"#).is_err());
    }
}
