use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    /// Chunk length including `[CLS]` and `[SEP]`.
    pub max_len: usize,
    pub layers: usize,
    pub dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub label_count: usize,
    pub dropout: f64,
}

impl EncoderConfig {
    /// Two layers of width 64 with four heads.
    pub fn desk(vocab_size: usize, label_count: usize) -> Self {
        Self {
            vocab_size,
            max_len: 512,
            layers: 2,
            dim: 64,
            heads: 4,
            ffn_dim: 256,
            label_count,
            dropout: 0.1,
        }
    }

    /// Twelve layers of width 768 with twelve heads.
    pub fn full(vocab_size: usize, label_count: usize) -> Self {
        Self {
            vocab_size,
            max_len: 512,
            layers: 12,
            dim: 768,
            heads: 12,
            ffn_dim: 3072,
            label_count,
            dropout: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("encoder: {m}")));
        if self.heads == 0 || !self.dim.is_multiple_of(self.heads) {
            return bad("dim must be divisible by heads");
        }
        if self.max_len < 8 {
            return bad("max_len must be at least 8");
        }
        if self.vocab_size == 0 || self.label_count == 0 || self.layers == 0 || self.ffn_dim == 0 {
            return bad("vocab_size, label_count, layers and ffn_dim must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        Self {
            batch_size: 1,
            learning_rate: 5e-4,
            epochs: 6,
            seed: 42,
        }
    }
}

impl FineTuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::Config("fine-tuning needs a positive batch size and learning rate".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let f = FineTuneConfig::default();
        assert_eq!((f.batch_size, f.learning_rate, f.epochs), (1, 5e-4, 6));
        let d = EncoderConfig::desk(100, 50);
        assert_eq!((d.layers, d.dim, d.heads, d.max_len), (2, 64, 4, 512));
        d.validate().unwrap();
        let mut bad = d.clone();
        bad.heads = 5;
        assert!(bad.validate().is_err());
        EncoderConfig::full(100, 50).validate().unwrap();
    }
}
