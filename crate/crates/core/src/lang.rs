//! Language codes and their English names.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LangError {
    #[error("invalid language code `{0}`: expected 2-3 lowercase ASCII letters")]
    InvalidCode(String),
    #[error("no English name known for language code `{0}`")]
    UnknownName(String),
}

/// A short lowercase language code ("en", "zh", "ar", ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Lang(String);

impl Lang {
    pub fn new(code: &str) -> Result<Self, LangError> {
        let ok = (2..=3).contains(&code.len())
            && code.bytes().all(|b| b.is_ascii_lowercase() && b.is_ascii_alphabetic());
        if ok {
            Ok(Lang(code.to_string()))
        } else {
            Err(LangError::InvalidCode(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_english(&self) -> bool {
        self.0 == "en"
    }

    /// English name of the language, used to render translation instructions.
    pub fn english_name(&self) -> Result<&'static str, LangError> {
        let name = match self.0.as_str() {
            "ar" => "Arabic",
            "de" => "German",
            "el" => "Greek",
            "en" => "English",
            "es" => "Spanish",
            "fr" => "French",
            "hi" => "Hindi",
            "id" => "Indonesian",
            "it" => "Italian",
            "ja" => "Japanese",
            "ko" => "Korean",
            "nl" => "Dutch",
            "pl" => "Polish",
            "pt" => "Portuguese",
            "ru" => "Russian",
            "th" => "Thai",
            "tr" => "Turkish",
            "vi" => "Vietnamese",
            "zh" => "Chinese",
            _ => return Err(LangError::UnknownName(self.0.clone())),
        };
        Ok(name)
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Lang {
    type Error = LangError;
    fn try_from(s: String) -> Result<Self, LangError> {
        Lang::new(&s)
    }
}

impl From<Lang> for String {
    fn from(l: Lang) -> String {
        l.0
    }
}

impl std::str::FromStr for Lang {
    type Err = LangError;
    fn from_str(s: &str) -> Result<Self, LangError> {
        Lang::new(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_short_lowercase_codes() {
        for code in ["en", "zh", "ar", "vie"] {
            assert!(Lang::new(code).is_ok(), "{code}");
        }
    }

    #[test]
    fn rejects_bad_codes() {
        for code in ["", "e", "EN", "zh-CN", "abcd", "z1"] {
            assert!(Lang::new(code).is_err(), "{code}");
        }
    }

    #[test]
    fn english_names_for_paper_languages() {
        let cases = [
            ("ar", "Arabic"),
            ("el", "Greek"),
            ("hi", "Hindi"),
            ("tr", "Turkish"),
            ("vi", "Vietnamese"),
            ("zh", "Chinese"),
            ("en", "English"),
        ];
        for (code, name) in cases {
            assert_eq!(Lang::new(code).unwrap().english_name().unwrap(), name);
        }
        assert!(Lang::new("xx").unwrap().english_name().is_err());
    }
}
