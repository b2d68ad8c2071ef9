use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Decision threshold on the CNN probability. A probability must be strictly greater than
/// this value to count as hate.
pub const HATE_THRESHOLD: f64 = 0.5;

/// Binary moderation label. `Hate` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Hate,
    NonHate,
}

impl Label {
    /// Strict-greater threshold rule shared by every component.
    pub fn from_probability(p: f64) -> Self {
        if p > HATE_THRESHOLD {
            Label::Hate
        } else {
            Label::NonHate
        }
    }

    pub fn is_hate(self) -> bool {
        self == Label::Hate
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hate => "hate",
            Label::NonHate => "non_hate",
        }
    }

    /// 1.0 for hate, 0.0 otherwise; the CNN training target.
    pub fn target(self) -> f64 {
        if self.is_hate() {
            1.0
        } else {
            0.0
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label {0:?} (expected `hate` or `non_hate`)")]
pub struct ParseLabelError(pub String);

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hate" | "1" => Ok(Label::Hate),
            "non_hate" | "nonhate" | "non-hate" | "0" => Ok(Label::NonHate),
            _ => Err(ParseLabelError(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_strict() {
        assert_eq!(Label::from_probability(0.5), Label::NonHate);
        assert_eq!(Label::from_probability(0.5000001), Label::Hate);
        assert_eq!(Label::from_probability(0.0), Label::NonHate);
        assert_eq!(Label::from_probability(1.0), Label::Hate);
    }

    #[test]
    fn parses_common_spellings() {
        assert_eq!("Hate".parse::<Label>().unwrap(), Label::Hate);
        assert_eq!("non_hate".parse::<Label>().unwrap(), Label::NonHate);
        assert_eq!("NonHate".parse::<Label>().unwrap(), Label::NonHate);
        assert!("maybe".parse::<Label>().is_err());
    }
}
