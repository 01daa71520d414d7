use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::ResponseFormat;

/// Characters stripped from both ends of a response before parsing.
pub const STRIP_SET: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', '`', '*', '(', ')', '[', ']'];

#[derive(Debug, Clone, PartialEq, Error)]
#[error("cannot parse {text:?} as {format:?}: {reason}")]
pub struct ParseError {
    pub format: ResponseFormat,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", content = "value", rename_all = "snake_case")]
pub enum Parsed {
    Adjective(String),
    Sentence(String),
    Integer(u8),
    Number(f64),
}

impl Parsed {
    /// The canonical text form; parsing it with the matching format gives
    /// back `self`.
    pub fn canonical(&self) -> String {
        match self {
            Parsed::Adjective(s) | Parsed::Sentence(s) => s.clone(),
            Parsed::Integer(v) => v.to_string(),
            Parsed::Number(v) => v.to_string(),
        }
    }
}

/// Trims whitespace and [`STRIP_SET`] characters from both ends.
pub fn strip(text: &str) -> &str {
    text.trim_matches(|c: char| c.is_whitespace() || STRIP_SET.contains(&c))
}

pub fn parse_response(format: ResponseFormat, text: &str) -> Result<Parsed, ParseError> {
    let fail = |reason: &str| ParseError {
        format,
        text: text.to_string(),
        reason: reason.to_string(),
    };
    match format {
        ResponseFormat::Sentence => Ok(Parsed::Sentence(text.trim().to_string())),
        ResponseFormat::Adjective => {
            let s = strip(text);
            if s.is_empty() {
                return Err(fail("empty response"));
            }
            if s.split_whitespace().count() > 1 {
                return Err(fail("more than one token"));
            }
            Ok(Parsed::Adjective(s.to_lowercase()))
        }
        ResponseFormat::Integer1To5 => {
            let v: f64 = strip(text).parse().map_err(|_| fail("not a number"))?;
            if v.fract() != 0.0 || !(1.0..=5.0).contains(&v) {
                return Err(fail("not an integer in 1..=5"));
            }
            Ok(Parsed::Integer(v as u8))
        }
        ResponseFormat::Number0To1 => {
            let v: f64 = strip(text).parse().map_err(|_| fail("not a number"))?;
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(fail("not a number in [0, 1]"));
            }
            Ok(Parsed::Number(v))
        }
    }
}
