use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nncore::checkpoint::{load_into, read_checkpoint, write_checkpoint};
use nncore::{sigmoid, Dense, Embedding, Graph, LayerNorm, NodeId, ParamStore, TransformerLayer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::EncoderConfig;
use crate::error::{Error, IoContext, Result};
use crate::textprep::{Chunk, PAD};

/// Token + learned position embeddings, pre-norm transformer layers, a final
/// layer norm and CLS pooling. `head` maps the pooled vector to label logits
/// during fine-tuning and plays no part in encoding.
#[derive(Debug, Clone)]
pub struct Encoder {
    config: EncoderConfig,
    store: ParamStore,
    tokens: Embedding,
    positions: Embedding,
    layers: Vec<TransformerLayer>,
    norm: LayerNorm,
    head: Dense,
}

impl Encoder {
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let d = config.dim;
        let tokens = Embedding::new(&mut store, "encoder.tokens", config.vocab_size, d, &mut rng)?;
        let positions = Embedding::new(&mut store, "encoder.positions", config.max_len, d, &mut rng)?;
        let layers = (0..config.layers)
            .map(|i| {
                TransformerLayer::new(
                    &mut store,
                    &format!("encoder.layer{i}"),
                    d,
                    config.heads,
                    config.ffn_dim,
                    config.dropout,
                    &mut rng,
                )
            })
            .collect::<nncore::Result<Vec<_>>>()?;
        let norm = LayerNorm::new(&mut store, "encoder.norm", d)?;
        let head = Dense::new(&mut store, "head", d, config.label_count, &mut rng)?;
        Ok(Self {
            config,
            store,
            tokens,
            positions,
            layers,
            norm,
            head,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Sets the classification-head bias, e.g. to the logit of each label's
    /// training frequency.
    pub fn set_head_bias(&mut self, bias: &[f64]) -> Result<()> {
        let id = self.head.bias.expect("head has a bias");
        let t = &mut self.store.get_mut(id).tensor;
        if t.len() != bias.len() {
            return Err(Error::DimMismatch {
                expected: t.len(),
                got: bias.len(),
            });
        }
        t.data_mut().copy_from_slice(bias);
        Ok(())
    }

    fn check_chunk(&self, chunk: &Chunk) -> Result<()> {
        if chunk.true_len == 0 || chunk.true_len > self.config.max_len {
            return Err(Error::Input(format!(
                "chunk of {} tokens does not fit an encoder with max_len {}",
                chunk.true_len, self.config.max_len
            )));
        }
        match chunk.framed().iter().find(|&&t| t as usize >= self.config.vocab_size) {
            Some(t) => Err(Error::Input(format!(
                "token id {t} out of range for vocabulary of {}",
                self.config.vocab_size
            ))),
            None => Ok(()),
        }
    }

    /// Pooled `[batch, dim]` CLS vectors. Chunks are cut to the longest
    /// `true_len` in the batch; shorter ones are padded and masked.
    pub fn pooled(&self, g: &mut Graph, chunks: &[&Chunk]) -> Result<NodeId> {
        if chunks.is_empty() {
            return Err(Error::Input("empty chunk batch".into()));
        }
        for c in chunks {
            self.check_chunk(c)?;
        }
        let batch = chunks.len();
        let seq = chunks.iter().map(|c| c.true_len).max().expect("non-empty batch");
        let mut ids = Vec::with_capacity(batch * seq);
        let mut mask = Vec::with_capacity(batch * seq);
        for c in chunks {
            let framed = c.framed();
            ids.extend(framed.iter().map(|&t| t as usize));
            ids.extend(std::iter::repeat_n(PAD as usize, seq - framed.len()));
            mask.extend(std::iter::repeat_n(1.0, framed.len()));
            mask.extend(std::iter::repeat_n(0.0, seq - framed.len()));
        }
        let pos: Vec<usize> = (0..batch).flat_map(|_| 0..seq).collect();
        let t = self.tokens.forward(g, &ids)?;
        let p = self.positions.forward(g, &pos)?;
        let mut x = g.add(t, p)?;
        for layer in &self.layers {
            x = layer.forward(g, x, &mask, batch, seq)?;
        }
        let cls: Vec<usize> = (0..batch).map(|b| b * seq).collect();
        let x = g.gather_rows(x, &cls)?;
        Ok(self.norm.forward(g, x)?)
    }

    /// Label logits `[batch, label_count]` from the classification head.
    pub fn logits(&self, g: &mut Graph, chunks: &[&Chunk]) -> Result<NodeId> {
        let pooled = self.pooled(g, chunks)?;
        Ok(self.head.forward(g, pooled)?)
    }

    /// The CLS vector of one chunk in evaluation mode.
    pub fn encode_chunk(&self, chunk: &Chunk) -> Result<Vec<f64>> {
        let mut g = Graph::new(&self.store);
        let out = self.pooled(&mut g, &[chunk])?;
        Ok(g.value(out).data().to_vec())
    }

    /// Label probabilities from the classification head.
    pub fn predict_chunk(&self, chunk: &Chunk) -> Result<Vec<f64>> {
        let mut g = Graph::new(&self.store);
        let out = self.logits(&mut g, &[chunk])?;
        Ok(g.value(out).data().iter().map(|&z| sigmoid(z)).collect())
    }

    fn sidecar(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    /// Writes weights as NNC1 to `path` and the config to `path.json`.
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
        let config: EncoderConfig = serde_json::from_slice(&std::fs::read(&side).at(&side)?)?;
        let mut model = Self::new(config, 0)?;
        let stored = read_checkpoint(BufReader::new(File::open(path).at(path)?))?;
        load_into(&mut model.store, &stored)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Encoder {
        let mut c = EncoderConfig::desk(30, 5);
        c.max_len = 16;
        c.dim = 8;
        c.heads = 2;
        c.ffn_dim = 16;
        Encoder::new(c, 1).unwrap()
    }

    #[test]
    fn shape_and_determinism() {
        let e = tiny();
        let c = Chunk::new(&[5, 6, 7], 16, "0");
        let a = e.encode_chunk(&c).unwrap();
        assert_eq!(a.len(), 8);
        let b = e.encode_chunk(&c).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn padding_does_not_change_encoding() {
        let e = tiny();
        let short = Chunk::new(&[5, 6], 16, "0");
        let long = Chunk::new(&[5, 6, 7, 8, 9, 10], 16, "1");
        let alone = e.encode_chunk(&short).unwrap();
        let mut g = Graph::new(e.store());
        let batch = e.pooled(&mut g, &[&short, &long]).unwrap();
        let row = &g.value(batch).data()[..8];
        for (a, b) in alone.iter().zip(row) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn token_out_of_range() {
        let e = tiny();
        let c = Chunk::new(&[5, 99], 16, "0");
        assert!(matches!(e.encode_chunk(&c), Err(Error::Input(_))));
        let too_long = Chunk::new(&[5; 20], 22, "0");
        assert!(e.encode_chunk(&too_long).is_err());
    }

    #[test]
    fn save_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("enc.nnc");
        let e = tiny();
        e.save(&p).unwrap();
        let back = Encoder::load(&p).unwrap();
        let c = Chunk::new(&[5, 6, 7], 16, "0");
        assert_eq!(e.encode_chunk(&c).unwrap(), back.encode_chunk(&c).unwrap());
    }
}
