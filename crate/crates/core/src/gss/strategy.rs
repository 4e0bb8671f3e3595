use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One similarity term of the grouping score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Similarity {
    #[serde(rename = "C")]
    Color,
    #[serde(rename = "SZ")]
    Size,
    #[serde(rename = "V")]
    Volume,
    #[serde(rename = "F")]
    Fill,
    #[serde(rename = "SG")]
    Seg,
}

impl Similarity {
    pub const ALL: [Similarity; 5] = [
        Similarity::Color,
        Similarity::Size,
        Similarity::Volume,
        Similarity::Fill,
        Similarity::Seg,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Similarity::Color => "C",
            Similarity::Size => "SZ",
            Similarity::Volume => "V",
            Similarity::Fill => "F",
            Similarity::Seg => "SG",
        }
    }
}

impl FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Similarity::ALL
            .into_iter()
            .find(|t| t.code() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown similarity '{s}' (use C, SZ, V, F, SG)")))
    }
}

/// A grouping strategy: which similarity terms are switched on, and how
/// strongly region points are jittered before neighbourhood tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strategy {
    pub flags: Vec<Similarity>,
    #[serde(default)]
    pub jitter_delta: f64,
}

impl Strategy {
    pub fn new(flags: &[Similarity], jitter_delta: f64) -> Result<Self> {
        let mut flags = flags.to_vec();
        flags.sort();
        flags.dedup();
        let s = Strategy { flags, jitter_delta };
        s.validate()?;
        Ok(s)
    }

    /// Parses `"SZ+V+SG"` style names.
    pub fn parse(name: &str, jitter_delta: f64) -> Result<Self> {
        let flags = name
            .split('+')
            .map(|t| t.trim().parse())
            .collect::<Result<Vec<Similarity>>>()?;
        Strategy::new(&flags, jitter_delta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.flags.is_empty() {
            return Err(Error::InvalidInput("strategy enables no similarity".into()));
        }
        if !(self.jitter_delta >= 0.0 && self.jitter_delta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "jitter delta {} must be >= 0",
                self.jitter_delta
            )));
        }
        Ok(())
    }

    pub fn uses(&self, s: Similarity) -> bool {
        self.flags.contains(&s)
    }

    /// The two-run ensemble that worked best: `V+F` with `SZ+V+SG`, or
    /// `V+F` with `SZ+V` when no segmentation scores are available.
    pub fn default_set(with_seg: bool, jitter_delta: f64) -> Vec<Strategy> {
        let second = if with_seg { "SZ+V+SG" } else { "SZ+V" };
        vec![
            Strategy::parse("V+F", jitter_delta).unwrap(),
            Strategy::parse(second, jitter_delta).unwrap(),
        ]
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.flags.iter().map(|s| s.code()).collect();
        write!(f, "{} (delta {})", names.join("+"), self.jitter_delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let s = Strategy::parse("SZ+V+SG", 0.4).unwrap();
        assert!(s.uses(Similarity::Seg) && s.uses(Similarity::Size) && !s.uses(Similarity::Fill));
        assert_eq!(s.to_string(), "SZ+V+SG (delta 0.4)");
        assert!(Strategy::parse("XX", 0.0).is_err());
        assert!(Strategy::new(&[], 0.0).is_err());
        assert!(Strategy::parse("V", -1.0).is_err());
    }

    #[test]
    fn json_shape() {
        let s: Strategy = serde_json::from_str(r#"{"flags": ["SZ","V","SG"], "jitter_delta": 0.4}"#).unwrap();
        assert_eq!(s.flags, vec![Similarity::Size, Similarity::Volume, Similarity::Seg]);
    }
}
