use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nncore::checkpoint::{load_into, read_checkpoint, write_checkpoint};
use nncore::{sigmoid, Dense, Graph, LayerNorm, NodeId, NonLinear, PRelu, ParamStore, Tensor, TransformerLayer};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Architecture, DecoderConfig, InputSlots};
use crate::error::{Error, IoContext, Result};

/// The encodings of one document, aligned to the decoder's input slots.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderInput {
    pub doc_id: String,
    pub vectors: Vec<Vec<f64>>,
    /// One flag per vector; absent slots carry zero vectors.
    pub presence: Vec<bool>,
}

impl DecoderInput {
    pub fn all_present(doc_id: impl Into<String>, vectors: Vec<Vec<f64>>) -> Self {
        let presence = vec![true; vectors.len()];
        Self {
            doc_id: doc_id.into(),
            vectors,
            presence,
        }
    }
}

#[derive(Debug, Clone)]
struct MlpHead {
    layers: Vec<NonLinear>,
    out: Dense,
}

impl MlpHead {
    fn new(
        store: &mut ParamStore,
        input: usize,
        widths: &[usize],
        labels: usize,
        dropout: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = input;
        for (i, &w) in widths.iter().enumerate() {
            layers.push(NonLinear::new(store, &format!("decoder.hidden{i}"), prev, w, dropout, rng)?);
            prev = w;
        }
        let out = Dense::new(store, "decoder.out", prev, labels, rng)?;
        Ok(Self { layers, out })
    }

    fn forward(&self, g: &mut Graph, mut x: NodeId) -> Result<NodeId> {
        for l in &self.layers {
            x = l.forward(g, x)?;
        }
        Ok(self.out.forward(g, x)?)
    }
}

#[derive(Debug, Clone)]
enum Net {
    Linear(Dense),
    Flat(MlpHead),
    Parallel {
        branches: Vec<Dense>,
        norm: LayerNorm,
        act: PRelu,
        dropout: f64,
        head: MlpHead,
    },
    Transformer {
        layers: Vec<TransformerLayer>,
        head: MlpHead,
    },
}

/// A decoder: maps the encodings of one document to label logits.
#[derive(Debug, Clone)]
pub struct Decoder {
    config: DecoderConfig,
    store: ParamStore,
    net: Net,
}

impl Decoder {
    pub fn build(config: DecoderConfig, rng: &mut dyn RngCore) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let d = config.input_dim;
        let labels = config.label_count;
        let p = config.dropout;
        let net = match config.architecture {
            Architecture::Linear => {
                let n = config.input_slots.fixed_count().expect("validated");
                Net::Linear(Dense::new(&mut store, "decoder.linear", n * d, labels, rng)?)
            }
            Architecture::Flat => {
                let n = config.input_slots.fixed_count().expect("validated");
                Net::Flat(MlpHead::new(&mut store, n * d, &config.mlp_widths(), labels, p, rng)?)
            }
            Architecture::Parallel => {
                // the branches replace the first dense layer; its norm,
                // activation and dropout act on their concatenation
                let widths = config.mlp_widths();
                let branch_widths = config.branch_widths()?;
                let branches = branch_widths
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| Dense::new(&mut store, &format!("decoder.branch{i}"), d, w, rng))
                    .collect::<nncore::Result<Vec<_>>>()?;
                let norm = LayerNorm::new(&mut store, "decoder.branch_norm", widths[0])?;
                let act = PRelu::new(&mut store, "decoder.branch_act", widths[0])?;
                let head = MlpHead::new(&mut store, widths[0], &widths[1..], labels, p, rng)?;
                Net::Parallel {
                    branches,
                    norm,
                    act,
                    dropout: p,
                    head,
                }
            }
            Architecture::Transformer => {
                let ffn = d * config.size.transformer_ffn_factor();
                let layers = (0..config.size.transformer_layers())
                    .map(|i| TransformerLayer::new(&mut store, &format!("decoder.layer{i}"), d, config.heads, ffn, p, rng))
                    .collect::<nncore::Result<Vec<_>>>()?;
                let head_in = match &config.input_slots {
                    InputSlots::Fixed(v) => v.len() * d,
                    InputSlots::Variable(_) => d,
                };
                let base = [config.hidden.0, config.hidden.1];
                let head = MlpHead::new(&mut store, head_in, &base, labels, p, rng)?;
                Net::Transformer { layers, head }
            }
        };
        Ok(Self { config, store, net })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn parameter_count(&self) -> usize {
        self.store.count()
    }

    fn check(&self, inputs: &[DecoderInput]) -> Result<()> {
        if inputs.is_empty() {
            return Err(Error::Input("empty decoder batch".into()));
        }
        let d = self.config.input_dim;
        for x in inputs {
            if let Some(n) = self.config.input_slots.fixed_count() {
                if x.vectors.len() != n {
                    return Err(Error::Input(format!(
                        "document `{}` has {} encodings, decoder expects {n}",
                        x.doc_id,
                        x.vectors.len()
                    )));
                }
            }
            if x.presence.len() != x.vectors.len() {
                return Err(Error::Input(format!("document `{}`: presence mask length differs", x.doc_id)));
            }
            if let Some(v) = x.vectors.iter().find(|v| v.len() != d) {
                return Err(Error::DimMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            if self.config.architecture == Architecture::Transformer && !x.presence.iter().any(|&p| p) {
                return Err(Error::Input(format!("document `{}` has no present encoding", x.doc_id)));
            }
        }
        Ok(())
    }

    /// Rows `[batch, n*d]`, each the concatenation of a document's vectors
    /// with absent slots zeroed.
    fn concatenated(&self, inputs: &[DecoderInput]) -> Result<Tensor> {
        let d = self.config.input_dim;
        let n = inputs[0].vectors.len();
        let mut data = Vec::with_capacity(inputs.len() * n * d);
        for x in inputs {
            for (v, &p) in x.vectors.iter().zip(&x.presence) {
                if p {
                    data.extend_from_slice(v);
                } else {
                    data.extend(std::iter::repeat_n(0.0, d));
                }
            }
        }
        Ok(Tensor::new(vec![inputs.len(), n * d], data)?)
    }

    /// Logits `[batch, label_count]`. Only the transformer family accepts
    /// documents with differing numbers of vectors.
    pub fn forward(&self, g: &mut Graph, inputs: &[DecoderInput]) -> Result<NodeId> {
        self.check(inputs)?;
        let d = self.config.input_dim;
        match &self.net {
            Net::Linear(dense) => {
                let x = g.input(self.concatenated(inputs)?);
                Ok(dense.forward(g, x)?)
            }
            Net::Flat(head) => {
                let x = g.input(self.concatenated(inputs)?);
                head.forward(g, x)
            }
            Net::Parallel {
                branches,
                norm,
                act,
                dropout,
                head,
            } => {
                let x = g.input(self.concatenated(inputs)?);
                let mut parts = Vec::with_capacity(branches.len());
                for (i, b) in branches.iter().enumerate() {
                    let slot = g.slice_cols(x, i * d, d)?;
                    parts.push(b.forward(g, slot)?);
                }
                let h = g.concat_cols(&parts)?;
                let h = norm.forward(g, h)?;
                let h = act.forward(g, h)?;
                let h = g.dropout(h, *dropout)?;
                head.forward(g, h)
            }
            Net::Transformer { layers, head } => {
                let batch = inputs.len();
                let seq = inputs.iter().map(|x| x.vectors.len()).max().expect("non-empty batch");
                let mut data = Vec::with_capacity(batch * seq * d);
                let mut mask = Vec::with_capacity(batch * seq);
                for x in inputs {
                    for (v, &p) in x.vectors.iter().zip(&x.presence) {
                        if p {
                            data.extend_from_slice(v);
                        } else {
                            data.extend(std::iter::repeat_n(0.0, d));
                        }
                        mask.push(if p { 1.0 } else { 0.0 });
                    }
                    data.extend(std::iter::repeat_n(0.0, (seq - x.vectors.len()) * d));
                    mask.extend(std::iter::repeat_n(0.0, seq - x.vectors.len()));
                }
                let mut h = g.input(Tensor::new(vec![batch * seq, d], data)?);
                for l in layers {
                    h = l.forward(g, h, &mask, batch, seq)?;
                }
                let pooled = match self.config.input_slots {
                    InputSlots::Fixed(_) => g.reshape(h, vec![batch, seq * d])?,
                    InputSlots::Variable(_) => g.masked_mean(h, &mask, batch, seq)?,
                };
                head.forward(g, pooled)
            }
        }
    }

    /// Sigmoid probabilities in evaluation mode, one row per input.
    pub fn predict(&self, inputs: &[DecoderInput]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(inputs.len());
        for batch in inputs.chunks(256) {
            let mut g = Graph::new(&self.store);
            let z = self.forward(&mut g, batch)?;
            let l = self.config.label_count;
            out.extend(
                g.value(z)
                    .data()
                    .chunks(l)
                    .map(|row| row.iter().map(|&v| sigmoid(v)).collect::<Vec<_>>()),
            );
        }
        Ok(out)
    }

    fn sidecar(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    /// Weights as NNC1 at `path`, config as JSON at `path.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path).at(path)?);
        write_checkpoint(&self.store, &mut w)?;
        w.flush().at(path)?;
        let side = Self::sidecar(path);
        std::fs::write(&side, serde_json::to_vec_pretty(&self.config)?).at(&side)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let side = Self::sidecar(path);
        let config: DecoderConfig = serde_json::from_slice(&std::fs::read(&side).at(&side)?)?;
        let mut model = Self::build(config, &mut ChaCha8Rng::seed_from_u64(0))?;
        let stored = read_checkpoint(BufReader::new(File::open(path).at(path)?))?;
        load_into(&mut model.store, &stored)?;
        Ok(model)
    }
}
