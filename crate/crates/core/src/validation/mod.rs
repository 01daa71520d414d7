//! Response filters applied before a response may extend a chain.
//!
//! Sentence responses are checked in the order: length, grammar (optional),
//! stem overlap with the prompt tone, profanity. Tone responses are checked
//! in the order: character set, spelling, adjective, stem overlap with the
//! prompt sentence, profanity. The first failing check is reported.

mod lexicon;
mod porter;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use lexicon::{LexiconError, Lexicons, WordList};
pub use porter::stem;

use crate::item::{word_count, Sentence, Tone};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    TooShort,
    NotGrammatical,
    BadCharset,
    NotAdjective,
    Misspelled,
    StemOverlap,
    Profanity,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 7] = [
        ErrorKind::TooShort,
        ErrorKind::NotGrammatical,
        ErrorKind::BadCharset,
        ErrorKind::NotAdjective,
        ErrorKind::Misspelled,
        ErrorKind::StemOverlap,
        ErrorKind::Profanity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::TooShort => "too-short",
            ErrorKind::NotGrammatical => "not-grammatical",
            ErrorKind::BadCharset => "bad-charset",
            ErrorKind::NotAdjective => "not-adjective",
            ErrorKind::Misspelled => "misspelled",
            ErrorKind::StemOverlap => "stem-overlap",
            ErrorKind::Profanity => "profanity",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A rejected response: which filter failed and the offending token(s).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationError {
    pub kind: ErrorKind,
    pub detail: Vec<String>,
}

impl ValidationError {
    pub fn new(kind: ErrorKind, detail: Vec<String>) -> Self {
        Self { kind, detail }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.detail.is_empty() {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "{}: {}", self.kind, self.detail.join(", "))
        }
    }
}

impl std::error::Error for ValidationError {}

/// Grammar detection hook for sentence responses.
pub trait GrammarChecker: Send + Sync {
    fn is_grammatical(&self, text: &str) -> bool;
}

/// Grammar checker that accepts everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

impl GrammarChecker for AcceptAll {
    fn is_grammatical(&self, _text: &str) -> bool {
        true
    }
}

/// Enables or disables individual filter rows. The sentence length and tone
/// charset rows are always on because the item types depend on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub grammar: bool,
    pub spelling: bool,
    pub adjective: bool,
    pub stem_overlap: bool,
    pub profanity: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            grammar: false,
            spelling: true,
            adjective: true,
            stem_overlap: true,
            profanity: true,
        }
    }
}

/// Lower-cased alphabetic tokens of `text`; any other character separates tokens.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Stems under which a token is compared. Besides the Porter stem, a token
/// ending in "ly" also contributes the stem of its base form, so "excitedly"
/// matches "excited" and "sadly" matches "sad".
pub fn stem_set(token: &str) -> BTreeSet<String> {
    let t = token.to_lowercase();
    let mut set = BTreeSet::new();
    set.insert(stem(&t));
    if let Some(base) = t.strip_suffix("ly") {
        if base.len() >= 3 {
            set.insert(stem(base));
        }
    }
    set
}

/// Tokens of `response` that share a stem with some token of `prompt`.
pub fn overlapping_tokens(response: &str, prompt: &str) -> Vec<String> {
    let prompt_stems: BTreeSet<String> = tokens(prompt).iter().flat_map(|t| stem_set(t)).collect();
    let mut out: Vec<String> = Vec::new();
    for t in tokens(response) {
        if !out.contains(&t) && stem_set(&t).iter().any(|s| prompt_stems.contains(s)) {
            out.push(t);
        }
    }
    out
}

pub fn overlaps(a: &str, b: &str) -> bool {
    !overlapping_tokens(a, b).is_empty()
}

fn profane_tokens(text: &str, profanity: &WordList) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in tokens(text) {
        if profanity.contains(&t) && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

/// True iff some case-folded, punctuation-stripped token is on the list.
pub fn contains_profanity(text: &str, profanity: &WordList) -> bool {
    !profane_tokens(text, profanity).is_empty()
}

fn is_tone_charset(text: &str) -> bool {
    !text.is_empty() && text.chars().all(|c| c.is_ascii_alphabetic() || c == '-')
}

/// Sentence filters with the default configuration.
pub fn validate_sentence(
    text: &str,
    prompt_tone: &Tone,
    lexicons: &Lexicons,
    grammar: Option<&dyn GrammarChecker>,
) -> Result<(), ValidationError> {
    let config = FilterConfig {
        grammar: grammar.is_some(),
        ..FilterConfig::default()
    };
    check_sentence(text, prompt_tone, lexicons, grammar, &config)
}

/// Tone filters with the default configuration.
pub fn validate_tone(text: &str, prompt_sentence: &str, lexicons: &Lexicons) -> Result<(), ValidationError> {
    check_tone(text, prompt_sentence, lexicons, &FilterConfig::default())
}

fn check_sentence(
    text: &str,
    prompt_tone: &Tone,
    lexicons: &Lexicons,
    grammar: Option<&dyn GrammarChecker>,
    config: &FilterConfig,
) -> Result<(), ValidationError> {
    let n = word_count(text);
    if n <= Sentence::MIN_WORDS_EXCLUSIVE {
        return Err(ValidationError::new(ErrorKind::TooShort, vec![n.to_string()]));
    }
    if config.grammar {
        if let Some(g) = grammar {
            if !g.is_grammatical(text) {
                return Err(ValidationError::new(ErrorKind::NotGrammatical, vec![]));
            }
        }
    }
    if config.stem_overlap {
        let hits = overlapping_tokens(text, prompt_tone.as_str());
        if !hits.is_empty() {
            return Err(ValidationError::new(ErrorKind::StemOverlap, hits));
        }
    }
    if config.profanity {
        let hits = profane_tokens(text, &lexicons.profanity);
        if !hits.is_empty() {
            return Err(ValidationError::new(ErrorKind::Profanity, hits));
        }
    }
    Ok(())
}

fn check_tone(
    text: &str,
    prompt_sentence: &str,
    lexicons: &Lexicons,
    config: &FilterConfig,
) -> Result<(), ValidationError> {
    let word = text.trim();
    let detail = || vec![word.to_string()];
    if !is_tone_charset(word) {
        return Err(ValidationError::new(ErrorKind::BadCharset, detail()));
    }
    if config.spelling && !lexicons.is_spelled(word) {
        return Err(ValidationError::new(ErrorKind::Misspelled, detail()));
    }
    if config.adjective && !lexicons.is_adjective(word) {
        return Err(ValidationError::new(ErrorKind::NotAdjective, detail()));
    }
    if config.stem_overlap {
        let hits = overlapping_tokens(word, prompt_sentence);
        if !hits.is_empty() {
            return Err(ValidationError::new(ErrorKind::StemOverlap, hits));
        }
    }
    if config.profanity {
        let hits = profane_tokens(word, &lexicons.profanity);
        if !hits.is_empty() {
            return Err(ValidationError::new(ErrorKind::Profanity, hits));
        }
    }
    if Tone::new(word).is_err() {
        return Err(ValidationError::new(ErrorKind::BadCharset, detail()));
    }
    Ok(())
}

/// Filters bound to lexicons, a row configuration and an optional grammar checker.
#[derive(Clone)]
pub struct Validator {
    lexicons: Arc<Lexicons>,
    config: FilterConfig,
    grammar: Option<Arc<dyn GrammarChecker>>,
}

impl fmt::Debug for Validator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Validator")
            .field("config", &self.config)
            .field("grammar", &self.grammar.is_some())
            .finish()
    }
}

impl Default for Validator {
    fn default() -> Self {
        Self::new(Lexicons::builtin())
    }
}

impl Validator {
    pub fn new(lexicons: Lexicons) -> Self {
        Self {
            lexicons: Arc::new(lexicons),
            config: FilterConfig::default(),
            grammar: None,
        }
    }

    pub fn with_config(mut self, config: FilterConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_grammar(mut self, checker: Arc<dyn GrammarChecker>) -> Self {
        self.grammar = Some(checker);
        self.config.grammar = true;
        self
    }

    pub fn lexicons(&self) -> &Lexicons {
        &self.lexicons
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn sentence(&self, text: &str, prompt_tone: &Tone) -> Result<(), ValidationError> {
        check_sentence(text, prompt_tone, &self.lexicons, self.grammar.as_deref(), &self.config)
    }

    pub fn tone(&self, text: &str, prompt_sentence: &str) -> Result<(), ValidationError> {
        check_tone(text, prompt_sentence, &self.lexicons, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tone(t: &str) -> Tone {
        Tone::new(t).unwrap()
    }

    fn kind_s(text: &str, t: &str) -> Option<ErrorKind> {
        validate_sentence(text, &tone(t), &Lexicons::builtin(), None).err().map(|e| e.kind)
    }

    fn kind_t(text: &str, s: &str) -> Option<ErrorKind> {
        validate_tone(text, s, &Lexicons::builtin()).err().map(|e| e.kind)
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(kind_s("Thank you so much for everything today", "grateful"), None);
        assert_eq!(kind_s("I am happy now", "sad"), Some(ErrorKind::TooShort));
        assert_eq!(
            kind_s("He spoke politely to everyone there", "polite"),
            Some(ErrorKind::StemOverlap)
        );
    }

    #[test]
    fn tone_examples() {
        assert_eq!(kind_t("excited", "We won the game!"), None);
        assert_eq!(kind_t("gr8ful", "We won the game!"), Some(ErrorKind::BadCharset));
        assert_eq!(kind_t("excited", "She was excitedly waving"), Some(ErrorKind::StemOverlap));
        assert_eq!(kind_t("the", "We won the game!"), Some(ErrorKind::NotAdjective));
        assert_eq!(kind_t("happpy", "We won the game!"), Some(ErrorKind::Misspelled));
    }

    #[test]
    fn overlap_detail_names_tokens() {
        let err = validate_sentence("He spoke politely to everyone there", &tone("polite"), &Lexicons::builtin(), None)
            .unwrap_err();
        assert_eq!(err.detail, vec!["politely".to_string()]);
    }

    #[test]
    fn grammar_hook_runs_second() {
        struct Never;
        impl GrammarChecker for Never {
            fn is_grammatical(&self, _: &str) -> bool {
                false
            }
        }
        let lex = Lexicons::builtin();
        let r = validate_sentence("one two three", &tone("sad"), &lex, Some(&Never));
        assert_eq!(r.unwrap_err().kind, ErrorKind::TooShort);
        let r = validate_sentence("one two three four five six", &tone("sad"), &lex, Some(&Never));
        assert_eq!(r.unwrap_err().kind, ErrorKind::NotGrammatical);
        let v = Validator::default().with_grammar(Arc::new(AcceptAll));
        assert!(v.sentence("one two three four five six", &tone("sad")).is_ok());
    }

    #[test]
    fn disabled_rows_are_skipped() {
        let v = Validator::default().with_config(FilterConfig {
            adjective: false,
            ..FilterConfig::default()
        });
        assert_eq!(v.sentence("Hi there", &tone("sad")).unwrap_err().kind, ErrorKind::TooShort);
        assert!(v.tone("table", "We won the game!").is_ok());
    }

    #[test]
    fn profanity_is_token_level() {
        let lex = Lexicons::builtin();
        assert!(!contains_profanity("What a lovely day for a walk", &lex.profanity));
        assert!(contains_profanity("What a shit day, honestly.", &lex.profanity));
        assert!(contains_profanity("DAMN!", &lex.profanity));
        for clean in ["Scunthorpe", "assess the class", "cockpit", "shitake", "dickens", "pissarro", "craps"] {
            assert!(!contains_profanity(clean, &lex.profanity), "{clean}");
        }
    }

    #[test]
    fn ly_forms_overlap_their_base() {
        for (a, b) in [
            ("excited", "excitedly"),
            ("sad", "sadly"),
            ("happy", "happily"),
            ("angry", "angrily"),
            ("grateful", "gratefully"),
            ("polite", "politely"),
        ] {
            assert!(overlaps(a, b), "{a}/{b}");
            assert!(overlaps(b, a), "{b}/{a}");
        }
        assert!(!overlaps("only", "on"));
        assert!(!overlaps("calm", "sad"));
    }

    #[test]
    fn error_kind_serializes_kebab() {
        assert_eq!(serde_json::to_string(&ErrorKind::StemOverlap).unwrap(), "\"stem-overlap\"");
        for k in ErrorKind::ALL {
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.as_str()));
        }
    }

    proptest! {
        #[test]
        fn overlap_is_symmetric(a in "[a-z]{1,12}( [a-z]{1,12}){0,3}", b in "[a-z]{1,12}( [a-z]{1,12}){0,3}") {
            prop_assert_eq!(overlaps(&a, &b), overlaps(&b, &a));
        }

        #[test]
        fn accepted_tone_constructs(t in "[a-zA-Z0-9 -]{0,12}") {
            if validate_tone(&t, "We won the game!", &Lexicons::builtin()).is_ok() {
                prop_assert!(Tone::new(&t).is_ok());
            }
        }

        #[test]
        fn stem_is_idempotent_on_short_words(w in "[a-z]{0,2}") {
            prop_assert_eq!(stem(&w), w);
        }
    }
}
