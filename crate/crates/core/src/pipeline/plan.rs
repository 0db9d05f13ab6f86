use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::datagen::CorpusSpec;
use crate::decoder::{Architecture, Size, TrainConfig};
use crate::error::{Error, Result};
use crate::textprep::Strategy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorpusSource {
    Generated { spec: CorpusSpec },
    /// A JSONL file or a directory of split files.
    Dataset { dataset: PathBuf },
}

/// Encoder shape; vocabulary size and label count come from the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderShape {
    pub layers: usize,
    pub dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub dropout: f64,
}

impl Default for EncoderShape {
    fn default() -> Self {
        Self {
            layers: 2,
            dim: 64,
            heads: 4,
            ffn_dim: 256,
            dropout: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FineTunePlan {
    /// Checkpoints are kept after each listed epoch of a single run.
    pub epochs: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for FineTunePlan {
    fn default() -> Self {
        Self {
            epochs: vec![0, 3, 6],
            learning_rate: 5e-4,
            batch_size: 1,
        }
    }
}

impl FineTunePlan {
    pub fn max_epochs(&self) -> usize {
        self.epochs.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceKey {
    pub table: String,
    pub row: String,
}

/// A family of decoder trainings on one input combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub name: String,
    pub corpus: String,
    pub inputs: Vec<Strategy>,
    /// Which fine-tuning checkpoint produces the encodings; defaults to the last.
    #[serde(default)]
    pub encoder_epochs: Option<usize>,
    pub architectures: Vec<Architecture>,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<Size>,
    #[serde(default)]
    pub reference: Option<ReferenceKey>,
}

fn default_sizes() -> Vec<Size> {
    vec![Size::Base]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub corpora: BTreeMap<String, CorpusSource>,
    #[serde(default)]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_vocab")]
    pub vocab_size: usize,
    #[serde(default = "default_paragraphs")]
    pub paragraphs: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default)]
    pub encoder: EncoderShape,
    #[serde(default)]
    pub finetune: FineTunePlan,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_hidden")]
    pub decoder_hidden: (usize, usize),
    #[serde(default = "default_heads")]
    pub decoder_heads: usize,
    pub runs: Vec<RunSpec>,
    /// Output directory used when none is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_seed() -> u64 {
    42
}
fn default_vocab() -> usize {
    2000
}
fn default_paragraphs() -> usize {
    200
}
fn default_max_len() -> usize {
    512
}
fn default_hidden() -> (usize, usize) {
    (768, 512)
}
fn default_heads() -> usize {
    8
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("plan: {m}")));
        if self.runs.is_empty() {
            return bad("no runs".into());
        }
        if self.finetune.epochs.is_empty() {
            return bad("finetune.epochs is empty".into());
        }
        let mut names = std::collections::HashSet::new();
        for r in &self.runs {
            if !names.insert(&r.name) {
                return bad(format!("duplicate run name `{}`", r.name));
            }
            if !self.corpora.contains_key(&r.corpus) {
                return bad(format!("run `{}` uses unknown corpus `{}`", r.name, r.corpus));
            }
            if r.inputs.is_empty() || r.architectures.is_empty() || r.sizes.is_empty() {
                return bad(format!("run `{}` needs inputs, architectures and sizes", r.name));
            }
            if let Some(s) = r.inputs.iter().find(|s| !self.strategies.is_empty() && !self.strategies.contains(s)) {
                return bad(format!("run `{}` uses strategy {s} that has no encoder entry", r.name));
            }
            if let Some(k) = &r.reference {
                if crate::metrics::reference(&k.table, &k.row).is_none() {
                    return bad(format!("run `{}` names unknown published row {}/{}", r.name, k.table, k.row));
                }
            }
            if let Some(e) = r.encoder_epochs {
                if !self.finetune.epochs.contains(&e) {
                    return bad(format!("run `{}` asks for a checkpoint after {e} epochs that is never kept", r.name));
                }
            }
        }
        Ok(())
    }

    pub fn run_epochs(&self, run: &RunSpec) -> usize {
        run.encoder_epochs.unwrap_or_else(|| self.finetune.max_epochs())
    }
}
