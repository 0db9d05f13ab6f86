use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where label signal words are planted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalPosition {
    Front,
    Back,
    /// Even-indexed labels at the front, odd-indexed at the back.
    Split,
    /// One region per document at a random offset.
    Uniform,
}

impl SignalPosition {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalPosition::Front => "front",
            SignalPosition::Back => "back",
            SignalPosition::Split => "split",
            SignalPosition::Uniform => "uniform",
        }
    }
}

impl fmt::Display for SignalPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalPosition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "front" => Ok(Self::Front),
            "back" => Ok(Self::Back),
            "split" => Ok(Self::Split),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::Config(format!("unknown signal position `{other}`"))),
        }
    }
}

pub const DEFAULT_HEADERS: &[&str] = &[
    "chief complaint",
    "history of present illness",
    "past medical history",
    "social history",
    "family history",
    "allergies",
    "medications on admission",
    "review of systems",
    "physical exam",
    "pertinent results",
    "brief hospital course",
    "major surgical or invasive procedure",
    "discharge medications",
    "discharge disposition",
    "discharge diagnosis",
    "discharge condition",
    "discharge instructions",
    "followup instructions",
    "impression",
    "assessment and plan",
];

/// Parameters of a synthetic corpus. Lengths are counted in words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub label_count: usize,
    pub mean_len: f64,
    /// Together with `mean_len` fixes the log-normal spread.
    pub median_len: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub mean_labels_per_doc: f64,
    pub signal_position: SignalPosition,
    /// Occurrences of its signal word planted per assigned label.
    pub signal_strength: usize,
    pub background_words: usize,
    pub zipf_exponent: f64,
    /// Mean paragraph body length in words.
    pub paragraph_len: usize,
    pub paragraph_header_pool: Vec<String>,
    pub seed: u64,
}

impl CorpusSpec {
    /// Published corpus sizes and length statistics multiplied by `factor`.
    pub fn scaled(factor: f64) -> Self {
        let n = |v: f64| ((v * factor).round() as usize).max(1);
        Self {
            n_train: n(8067.0),
            n_val: n(1574.0),
            n_test: n(1730.0),
            label_count: 50,
            mean_len: 2740.0 * factor,
            median_len: 2500.0 * factor,
            min_len: n(78.0),
            max_len: n(18429.0),
            mean_labels_per_doc: 13.15,
            signal_position: SignalPosition::Front,
            signal_strength: 1,
            background_words: 600,
            zipf_exponent: 1.0,
            paragraph_len: 30,
            paragraph_header_pool: DEFAULT_HEADERS.iter().map(|s| s.to_string()).collect(),
            seed: 42,
        }
    }

    pub fn paper_scale() -> Self {
        Self::scaled(1.0)
    }

    pub fn with_position(mut self, position: SignalPosition) -> Self {
        self.signal_position = position;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSpec(m));
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return bad("every split needs at least one document".into());
        }
        if self.label_count == 0 {
            return bad("label_count must be positive".into());
        }
        if self.signal_strength == 0 {
            return bad("signal_strength must be positive".into());
        }
        if !(self.mean_labels_per_doc > 0.0) {
            return bad("mean_labels_per_doc must be positive".into());
        }
        if self.min_len == 0 || self.paragraph_len == 0 || self.background_words == 0 {
            return bad("min_len, paragraph_len and background_words must be positive".into());
        }
        let ordered = (self.min_len as f64) <= self.median_len
            && self.median_len <= self.mean_len
            && self.mean_len <= self.max_len as f64;
        if !ordered {
            return bad(format!(
                "need min_len <= median_len <= mean_len <= max_len, got {} / {} / {} / {}",
                self.min_len, self.median_len, self.mean_len, self.max_len
            ));
        }
        if self.paragraph_header_pool.is_empty() {
            return bad("paragraph_header_pool is empty".into());
        }
        Ok(())
    }
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self::scaled(0.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_defaults() {
        let s = CorpusSpec::default();
        assert_eq!((s.n_train, s.n_val, s.n_test), (807, 157, 173));
        assert_eq!((s.min_len, s.max_len), (8, 1843));
        assert!((s.mean_len - 274.0).abs() < 1e-9);
        s.validate().unwrap();
    }

    #[test]
    fn paper_scale_counts() {
        let s = CorpusSpec::paper_scale();
        assert_eq!((s.n_train, s.n_val, s.n_test), (8067, 1574, 1730));
        assert_eq!((s.min_len, s.max_len), (78, 18429));
    }

    #[test]
    fn invalid_specs() {
        let mut s = CorpusSpec::default();
        s.n_val = 0;
        assert!(s.validate().is_err());
        let mut s = CorpusSpec::default();
        s.min_len = 400;
        assert!(s.validate().is_err());
    }
}
