use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use crate::item::Tone;

const ADJECTIVES: &str = include_str!("../../data/adjectives.txt");
const SPELLING: &str = include_str!("../../data/spelling.txt");
const PROFANITY: &str = include_str!("../../data/profanity.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read word list {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{list}: line {line}: invalid entry {entry:?}")]
    BadEntry {
        list: String,
        line: usize,
        entry: String,
    },
    #[error("word list {0} is empty")]
    Empty(String),
    #[error("profanity list contains seed tone {0:?}")]
    ProfaneSeed(String),
}

/// A case-folded word list. Leading `#` comment lines are kept as provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordList {
    name: String,
    provenance: String,
    words: BTreeSet<String>,
}

impl WordList {
    /// Parses the one-word-per-line format. Blank lines and `#` comments are
    /// ignored; entries must match `[a-z][a-z-]*` after case folding.
    pub fn parse(name: &str, text: &str) -> Result<Self, LexiconError> {
        let mut provenance = Vec::new();
        let mut words = BTreeSet::new();
        let mut in_header = true;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if in_header {
                    provenance.push(comment.trim().to_string());
                }
                continue;
            }
            let entry = match line.split('#').next() {
                Some(e) => e.trim(),
                None => continue,
            };
            if entry.is_empty() {
                continue;
            }
            in_header = false;
            let word = entry.to_lowercase();
            if !is_word(&word) {
                return Err(LexiconError::BadEntry {
                    list: name.to_string(),
                    line: i + 1,
                    entry: entry.to_string(),
                });
            }
            words.insert(word);
        }
        if words.is_empty() {
            return Err(LexiconError::Empty(name.to_string()));
        }
        Ok(Self {
            name: name.to_string(),
            provenance: provenance.join("\n"),
            words,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn from_words<I, S>(name: &str, words: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let text: Vec<String> = words.into_iter().map(|w| w.as_ref().to_string()).collect();
        Self::parse(name, &text.join("\n"))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Case-folded exact lookup.
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

fn is_word(w: &str) -> bool {
    let mut chars = w.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c == '-')
}

/// Word lists used by the response filters. Spelling lookups also accept
/// every adjective.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub adjectives: WordList,
    pub spelling: WordList,
    pub profanity: WordList,
}

impl Lexicons {
    /// The word lists bundled with the crate.
    pub fn builtin() -> Self {
        Self {
            adjectives: WordList::parse("adjectives.txt", ADJECTIVES).expect("bundled list"),
            spelling: WordList::parse("spelling.txt", SPELLING).expect("bundled list"),
            profanity: WordList::parse("profanity.txt", PROFANITY).expect("bundled list"),
        }
    }

    pub fn load(adjectives: &Path, spelling: &Path, profanity: &Path) -> Result<Self, LexiconError> {
        Ok(Self {
            adjectives: WordList::load(adjectives)?,
            spelling: WordList::load(spelling)?,
            profanity: WordList::load(profanity)?,
        })
    }

    pub fn is_spelled(&self, word: &str) -> bool {
        self.spelling.contains(word) || self.adjectives.contains(word)
    }

    pub fn is_adjective(&self, word: &str) -> bool {
        self.adjectives.contains(word)
    }

    /// Fails if any seed tone is itself on the profanity list.
    pub fn check_seeds(&self, seeds: &[Tone]) -> Result<(), LexiconError> {
        match seeds.iter().find(|t| self.profanity.contains(t.as_str())) {
            Some(t) => Err(LexiconError::ProfaneSeed(t.as_str().to_string())),
            None => Ok(()),
        }
    }
}
