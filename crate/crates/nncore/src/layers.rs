//! The layer set used by the encoder and decoder models.
//!
//! Layers only hold [`ParamId`]s; weights live in a [`ParamStore`] and every
//! forward pass runs on a [`Graph`] borrowing that store. Activations are
//! rank-2: sequences are flattened to `[batch * seq, dim]`.

use rand::RngCore;

use crate::error::{NnError, Result};
use crate::graph::{Graph, NodeId};
use crate::params::{ParamId, ParamStore};

pub const LN_EPS: f64 = 1e-5;
pub const PRELU_INIT: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Dense {
    pub fn new(store: &mut ParamStore, name: &str, in_dim: usize, out_dim: usize, rng: &mut dyn RngCore) -> Result<Self> {
        let weight = store.add_uniform(format!("{name}.weight"), vec![in_dim, out_dim], in_dim, rng)?;
        let bias = store.add_const(format!("{name}.bias"), vec![out_dim], 0.0)?;
        Ok(Self {
            weight,
            bias: Some(bias),
            in_dim,
            out_dim,
        })
    }

    pub fn without_bias(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let weight = store.add_uniform(format!("{name}.weight"), vec![in_dim, out_dim], in_dim, rng)?;
        Ok(Self {
            weight,
            bias: None,
            in_dim,
            out_dim,
        })
    }

    /// `y = x W + b`
    pub fn forward(&self, g: &mut Graph, x: NodeId) -> Result<NodeId> {
        let w = g.param(self.weight);
        let xw = g.matmul(x, w)?;
        match self.bias {
            Some(b) => {
                let b = g.param(b);
                g.add_bias(xw, b)
            }
            None => Ok(xw),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub shift: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Result<Self> {
        Ok(Self {
            gain: store.add_const(format!("{name}.gain"), vec![dim], 1.0)?,
            shift: store.add_const(format!("{name}.shift"), vec![dim], 0.0)?,
        })
    }

    pub fn forward(&self, g: &mut Graph, x: NodeId) -> Result<NodeId> {
        let gain = g.param(self.gain);
        let shift = g.param(self.shift);
        g.layer_norm(x, gain, shift, LN_EPS)
    }
}

#[derive(Debug, Clone)]
pub struct PRelu {
    pub slope: ParamId,
}

impl PRelu {
    pub fn new(store: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        Ok(Self {
            slope: store.add_const(format!("{name}.slope"), vec![channels], PRELU_INIT)?,
        })
    }

    pub fn forward(&self, g: &mut Graph, x: NodeId) -> Result<NodeId> {
        let a = g.param(self.slope);
        g.prelu(x, a)
    }
}

/// Token lookup table.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: ParamId,
    pub rows: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new(store: &mut ParamStore, name: &str, rows: usize, dim: usize, rng: &mut dyn RngCore) -> Result<Self> {
        let table = store.add_uniform(format!("{name}.weight"), vec![rows, dim], dim, rng)?;
        Ok(Self { table, rows, dim })
    }

    pub fn forward(&self, g: &mut Graph, ids: &[usize]) -> Result<NodeId> {
        let t = g.param(self.table);
        g.gather_rows(t, ids)
    }
}

/// Dense + layer norm + PReLU + dropout.
#[derive(Debug, Clone)]
pub struct NonLinear {
    pub dense: Dense,
    pub norm: LayerNorm,
    pub act: PRelu,
    pub dropout: f64,
}

impl NonLinear {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        dropout: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        Ok(Self {
            dense: Dense::new(store, &format!("{name}.dense"), in_dim, out_dim, rng)?,
            norm: LayerNorm::new(store, &format!("{name}.norm"), out_dim)?,
            act: PRelu::new(store, &format!("{name}.act"), out_dim)?,
            dropout,
        })
    }

    pub fn forward(&self, g: &mut Graph, x: NodeId) -> Result<NodeId> {
        let h = self.dense.forward(g, x)?;
        let h = self.norm.forward(g, h)?;
        let h = self.act.forward(g, h)?;
        g.dropout(h, self.dropout)
    }
}

#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub query: Dense,
    pub key: Dense,
    pub value: Dense,
    pub output: Dense,
    pub heads: usize,
}

impl MultiHeadAttention {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, heads: usize, rng: &mut dyn RngCore) -> Result<Self> {
        if heads == 0 || !dim.is_multiple_of(heads) {
            return Err(NnError::InvalidArgument(format!(
                "model dimension {dim} is not divisible by {heads} heads"
            )));
        }
        Ok(Self {
            query: Dense::new(store, &format!("{name}.query"), dim, dim, rng)?,
            // A key bias shifts every logit of a query equally, so it is left out.
            key: Dense::without_bias(store, &format!("{name}.key"), dim, dim, rng)?,
            value: Dense::new(store, &format!("{name}.value"), dim, dim, rng)?,
            output: Dense::new(store, &format!("{name}.output"), dim, dim, rng)?,
            heads,
        })
    }

    /// Self-attention over `x: [batch*seq, dim]`; `mask` has one entry per row.
    pub fn forward(&self, g: &mut Graph, x: NodeId, mask: &[f64], batch: usize, seq: usize) -> Result<NodeId> {
        let q = self.query.forward(g, x)?;
        let k = self.key.forward(g, x)?;
        let v = self.value.forward(g, x)?;
        let a = g.attention(q, k, v, mask, batch, seq, self.heads)?;
        self.output.forward(g, a)
    }
}

/// Pre-norm block: `h = x + drop(mha(ln1(x)))`, `y = h + drop(ffn(ln2(h)))`
/// with `ffn = dense(d -> ffn_dim), prelu, dense(ffn_dim -> d)`.
#[derive(Debug, Clone)]
pub struct TransformerLayer {
    pub norm1: LayerNorm,
    pub attn: MultiHeadAttention,
    pub norm2: LayerNorm,
    pub ff_in: Dense,
    pub ff_act: PRelu,
    pub ff_out: Dense,
    pub dropout: f64,
}

impl TransformerLayer {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        dim: usize,
        heads: usize,
        ffn_dim: usize,
        dropout: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        Ok(Self {
            norm1: LayerNorm::new(store, &format!("{name}.norm1"), dim)?,
            attn: MultiHeadAttention::new(store, &format!("{name}.attn"), dim, heads, rng)?,
            norm2: LayerNorm::new(store, &format!("{name}.norm2"), dim)?,
            ff_in: Dense::new(store, &format!("{name}.ffn.in"), dim, ffn_dim, rng)?,
            ff_act: PRelu::new(store, &format!("{name}.ffn.act"), ffn_dim)?,
            ff_out: Dense::new(store, &format!("{name}.ffn.out"), ffn_dim, dim, rng)?,
            dropout,
        })
    }

    pub fn forward(&self, g: &mut Graph, x: NodeId, mask: &[f64], batch: usize, seq: usize) -> Result<NodeId> {
        let h = self.norm1.forward(g, x)?;
        let h = self.attn.forward(g, h, mask, batch, seq)?;
        let h = g.dropout(h, self.dropout)?;
        let x = g.add(x, h)?;
        let h = self.norm2.forward(g, x)?;
        let h = self.ff_in.forward(g, h)?;
        let h = self.ff_act.forward(g, h)?;
        let h = self.ff_out.forward(g, h)?;
        let h = g.dropout(h, self.dropout)?;
        g.add(x, h)
    }
}
