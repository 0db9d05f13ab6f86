use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Linear,
    Flat,
    Parallel,
    Transformer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Size {
    Base,
    Large,
    Xlarge,
}

macro_rules! named_enum {
    ($ty:ty, $what:literal, $($variant:path => $name:literal),+) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(Error::Config(format!(concat!("unknown ", $what, " `{}`"), other))),
                }
            }
        }
    };
}

named_enum!(Architecture, "architecture",
    Architecture::Linear => "linear",
    Architecture::Flat => "flat",
    Architecture::Parallel => "parallel",
    Architecture::Transformer => "transformer");

named_enum!(Size, "size", Size::Base => "base", Size::Large => "large", Size::Xlarge => "xlarge");

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::Linear,
        Architecture::Flat,
        Architecture::Parallel,
        Architecture::Transformer,
    ];
}

impl Size {
    pub const ALL: [Size; 3] = [Size::Base, Size::Large, Size::Xlarge];

    /// Extra non-linear layers and width multiplier for the MLP families.
    pub fn mlp_scaling(self) -> (usize, f64) {
        match self {
            Size::Base => (0, 1.0),
            Size::Large => (1, 1.5),
            Size::Xlarge => (2, 2.0),
        }
    }

    pub fn transformer_layers(self) -> usize {
        match self {
            Size::Base => 1,
            Size::Large => 2,
            Size::Xlarge => 3,
        }
    }

    /// Feed-forward width as a multiple of the token dimension.
    pub fn transformer_ffn_factor(self) -> usize {
        match self {
            Size::Xlarge => 4,
            _ => 2,
        }
    }
}

/// One fixed decoder input: the encoding of `strategy` at `position_key`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotKey {
    pub strategy: Strategy,
    pub position_key: String,
}

impl SlotKey {
    pub fn new(strategy: Strategy, position_key: impl Into<String>) -> Self {
        Self {
            strategy,
            position_key: position_key.into(),
        }
    }
}

impl fmt::Display for SlotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.strategy, self.position_key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSlots {
    Fixed(Vec<SlotKey>),
    /// Any number of encodings of one strategy per document.
    Variable(Strategy),
}

impl InputSlots {
    pub fn fixed_count(&self) -> Option<usize> {
        match self {
            InputSlots::Fixed(v) => Some(v.len()),
            InputSlots::Variable(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub architecture: Architecture,
    pub size: Size,
    pub input_slots: InputSlots,
    pub input_dim: usize,
    pub label_count: usize,
    pub dropout: f64,
    /// Widths of the two base non-linear layers.
    pub hidden: (usize, usize),
    pub heads: usize,
}

impl DecoderConfig {
    pub fn new(architecture: Architecture, size: Size, input_slots: InputSlots, input_dim: usize, label_count: usize) -> Self {
        Self {
            architecture,
            size,
            input_slots,
            input_dim,
            label_count,
            dropout: 0.1,
            hidden: (768, 512),
            heads: 8,
        }
    }

    pub fn with_hidden(mut self, first: usize, second: usize) -> Self {
        self.hidden = (first, second);
        self
    }

    pub fn with_dropout(mut self, p: f64) -> Self {
        self.dropout = p;
        self
    }

    /// Non-linear layer widths for the flat and parallel families.
    pub fn mlp_widths(&self) -> Vec<usize> {
        let (extra, widen) = self.size.mlp_scaling();
        let scale = |w: usize| ((w as f64 * widen).round() as usize).max(1);
        let mut widths = vec![scale(self.hidden.0), scale(self.hidden.1)];
        widths.extend(std::iter::repeat_n(scale(self.hidden.1), extra));
        widths
    }

    /// Parallel branch widths: `floor(h/n)` each, remainder to the last.
    pub fn branch_widths(&self) -> Result<Vec<usize>> {
        let n = self.input_slots.fixed_count().filter(|&n| n > 0).ok_or_else(|| {
            Error::Config("parallel decoder needs at least one fixed input slot".into())
        })?;
        let h = self.mlp_widths()[0];
        if h < n {
            return Err(Error::Config(format!("hidden width {h} is smaller than {n} branches")));
        }
        let mut widths = vec![h / n; n];
        widths[n - 1] += h % n;
        Ok(widths)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("decoder: {m}")));
        if self.input_dim == 0 || self.label_count == 0 || self.hidden.0 == 0 || self.hidden.1 == 0 {
            return bad("dimensions must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)".into());
        }
        match (&self.input_slots, self.architecture) {
            (InputSlots::Variable(_), Architecture::Transformer) => {}
            (InputSlots::Variable(_), arch) => {
                return bad(format!("{arch} decoder needs fixed input slots, only transformer accepts variable input"))
            }
            (InputSlots::Fixed(v), _) if v.is_empty() => return bad("no input slots".into()),
            _ => {}
        }
        if self.architecture == Architecture::Transformer && (self.heads == 0 || !self.input_dim.is_multiple_of(self.heads)) {
            return bad(format!("input_dim {} is not divisible by {} heads", self.input_dim, self.heads));
        }
        if self.architecture == Architecture::Parallel {
            self.branch_widths()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub base_lr: f64,
    pub decay_epochs: usize,
    pub floor_fraction: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            base_lr: 1e-4,
            decay_epochs: 30,
            floor_fraction: 0.1,
            weight_decay: 1e-3,
            max_epochs: 100,
            patience: 10,
            min_delta: 1e-5,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 || self.decay_epochs == 0 {
            return Err(Error::Config("batch_size, max_epochs, patience and decay_epochs must be positive".into()));
        }
        if !(self.base_lr > 0.0) || self.weight_decay < 0.0 {
            return Err(Error::Config("learning rate must be positive and weight decay non-negative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fbm() -> InputSlots {
        InputSlots::Fixed(
            [Strategy::Front, Strategy::Back, Strategy::Mixed]
                .into_iter()
                .map(|s| SlotKey::new(s, "0"))
                .collect(),
        )
    }

    #[test]
    fn widths() {
        let c = DecoderConfig::new(Architecture::Parallel, Size::Base, fbm(), 768, 50);
        assert_eq!(c.mlp_widths(), vec![768, 512]);
        assert_eq!(c.branch_widths().unwrap(), vec![256, 256, 256]);
        let c = DecoderConfig::new(Architecture::Parallel, Size::Large, fbm(), 768, 50);
        assert_eq!(c.mlp_widths(), vec![1152, 768, 768]);
        let c = DecoderConfig::new(Architecture::Flat, Size::Xlarge, fbm(), 768, 50).with_hidden(100, 50);
        assert_eq!(c.mlp_widths(), vec![200, 100, 100, 100]);
        let c = DecoderConfig::new(Architecture::Parallel, Size::Base, fbm(), 8, 5).with_hidden(10, 4);
        assert_eq!(c.branch_widths().unwrap(), vec![3, 3, 4]);
    }

    #[test]
    fn variable_only_for_transformer() {
        let v = InputSlots::Variable(Strategy::All);
        for arch in [Architecture::Linear, Architecture::Flat, Architecture::Parallel] {
            assert!(DecoderConfig::new(arch, Size::Base, v.clone(), 64, 5).validate().is_err());
        }
        DecoderConfig::new(Architecture::Transformer, Size::Base, v, 64, 5).validate().unwrap();
    }

    #[test]
    fn train_defaults() {
        let t = TrainConfig::default();
        assert_eq!((t.batch_size, t.base_lr, t.weight_decay, t.decay_epochs, t.max_epochs), (32, 1e-4, 1e-3, 30, 100));
    }

    #[test]
    fn names_parse() {
        for a in Architecture::ALL {
            assert_eq!(a.as_str().parse::<Architecture>().unwrap(), a);
        }
        for s in Size::ALL {
            assert_eq!(s.as_str().parse::<Size>().unwrap(), s);
        }
        assert!("huge".parse::<Size>().is_err());
    }
}
