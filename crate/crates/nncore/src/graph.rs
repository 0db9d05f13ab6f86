//! Reverse-mode differentiation over a linear tape.
//!
//! A [`Graph`] borrows the model's [`ParamStore`] for the duration of one
//! forward/backward pass. Parameters enter the tape as borrowed leaves, so a
//! forward pass never copies weights. Every op records what its backward
//! rule needs; [`Graph::backward`] walks the tape once in reverse.

use rand::{Rng, RngCore};

use crate::error::{shape_err, NnError, Result};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

enum Op {
    Input,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    LayerNorm {
        x: NodeId,
        gain: NodeId,
        shift: NodeId,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    PRelu {
        x: NodeId,
        slope: NodeId,
    },
    Dropout {
        x: NodeId,
        mask: Vec<f64>,
    },
    Attention {
        q: NodeId,
        k: NodeId,
        v: NodeId,
        geom: AttnGeom,
        mask: Vec<f64>,
        probs: Vec<f64>,
    },
    ConcatCols(Vec<NodeId>),
    SliceCols {
        x: NodeId,
        start: usize,
    },
    Reshape(NodeId),
    GatherRows {
        table: NodeId,
        ids: Vec<usize>,
    },
    MaskedMean {
        x: NodeId,
        mask: Vec<f64>,
        batch: usize,
        seq: usize,
    },
    Bce {
        logits: NodeId,
        targets: Vec<f64>,
    },
    Sum(NodeId),
    WeightedSum {
        x: NodeId,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy)]
struct AttnGeom {
    batch: usize,
    seq: usize,
    heads: usize,
    dim: usize,
}

enum Value {
    Owned(Tensor),
    Borrowed(ParamId),
}

struct Node {
    value: Value,
    op: Op,
}

/// Gradients produced by one backward pass, indexed by parameter.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    by_param: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.by_param.get(id.index()).and_then(|g| g.as_deref())
    }

    /// Adds every gradient into the store's grad slots.
    pub fn apply_to(&self, store: &mut ParamStore) -> Result<()> {
        for (i, g) in self.by_param.iter().enumerate() {
            if let Some(g) = g {
                store.accumulate_grad(ParamId(i), g)?;
            }
        }
        Ok(())
    }
}

pub struct Graph<'a> {
    store: &'a ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
    rng: Option<&'a mut dyn RngCore>,
    /// Attention probabilities are kept for inspection when set.
    pub record_attention: bool,
    attention_log: Vec<Vec<f64>>,
}

impl<'a> Graph<'a> {
    /// Evaluation-mode graph: dropout is the identity.
    pub fn new(store: &'a ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
            param_nodes: vec![None; store.len()],
            rng: None,
            record_attention: false,
            attention_log: Vec::new(),
        }
    }

    /// Training-mode graph: dropout masks are drawn from `rng`.
    pub fn training(store: &'a ParamStore, rng: &'a mut dyn RngCore) -> Self {
        let mut g = Self::new(store);
        g.rng = Some(rng);
        g
    }

    pub fn is_training(&self) -> bool {
        self.rng.is_some()
    }

    pub fn store(&self) -> &ParamStore {
        self.store
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        match &self.nodes[id.0].value {
            Value::Owned(t) => t,
            Value::Borrowed(p) => self.store.tensor(*p),
        }
    }

    /// Attention probability tensors (`[batch, heads, seq, seq]`) in call
    /// order, recorded only when `record_attention` is set.
    pub fn attention_log(&self) -> &[Vec<f64>] {
        &self.attention_log
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn input(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Input)
    }

    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(n) = self.param_nodes[id.index()] {
            return n;
        }
        self.nodes.push(Node {
            value: Value::Borrowed(id),
            op: Op::Param(id),
        });
        let n = NodeId(self.nodes.len() - 1);
        self.param_nodes[id.index()] = Some(n);
        n
    }

    /// `[m,k] x [k,n] -> [m,n]`
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.value(a).dims2("matmul")?;
        let (k2, n) = self.value(b).dims2("matmul")?;
        if k != k2 {
            return Err(shape_err("matmul", self.value(a).shape(), self.value(b).shape()));
        }
        let mut out = vec![0.0; m * n];
        matmul_into(self.value(a).data(), self.value(b).data(), &mut out, m, k, n);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b)))
    }

    /// Adds a `[n]` bias to every row of `[m,n]`.
    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (m, n) = self.value(x).dims2("add_bias")?;
        if self.value(bias).shape() != [n] {
            return Err(shape_err("add_bias", self.value(x).shape(), self.value(bias).shape()));
        }
        let b = self.value(bias).data();
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_exact_mut(n) {
            row.iter_mut().zip(b).for_each(|(o, b)| *o += b);
        }
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::AddBias(x, bias)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(shape_err("add", self.value(a).shape(), self.value(b).shape()));
        }
        let out: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Tensor::new(shape, out)?, Op::Add(a, b)))
    }

    /// Row-wise standardisation (population variance) followed by an affine map.
    pub fn layer_norm(&mut self, x: NodeId, gain: NodeId, shift: NodeId, eps: f64) -> Result<NodeId> {
        let (m, d) = self.value(x).dims2("layer_norm")?;
        if self.value(gain).shape() != [d] || self.value(shift).shape() != [d] {
            return Err(shape_err("layer_norm", self.value(x).shape(), self.value(gain).shape()));
        }
        let xs = self.value(x).data();
        let g = self.value(gain).data();
        let s = self.value(shift).data();
        let mut xhat = vec![0.0; m * d];
        let mut inv_std = vec![0.0; m];
        let mut out = vec![0.0; m * d];
        for r in 0..m {
            let row = &xs[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std[r] = inv;
            for c in 0..d {
                let h = (row[c] - mean) * inv;
                xhat[r * d + c] = h;
                out[r * d + c] = g[c] * h + s[c];
            }
        }
        Ok(self.push(
            Tensor::new(vec![m, d], out)?,
            Op::LayerNorm {
                x,
                gain,
                shift,
                xhat,
                inv_std,
            },
        ))
    }

    /// `y = x` for `x > 0`, `slope * x` otherwise. `slope` has one entry per
    /// channel of the last axis, or a single shared entry.
    pub fn prelu(&mut self, x: NodeId, slope: NodeId) -> Result<NodeId> {
        let c = *self.value(x).shape().last().unwrap_or(&1);
        let ns = self.value(slope).len();
        if ns != c && ns != 1 {
            return Err(shape_err("prelu", self.value(x).shape(), self.value(slope).shape()));
        }
        let a = self.value(slope).data();
        let out: Vec<f64> = self
            .value(x)
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| if v > 0.0 { v } else { a[if ns == 1 { 0 } else { i % c }] * v })
            .collect();
        let shape = self.value(x).shape().to_vec();
        Ok(self.push(Tensor::new(shape, out)?, Op::PRelu { x, slope }))
    }

    /// Inverted dropout. Identity in evaluation mode or when `p == 0`.
    pub fn dropout(&mut self, x: NodeId, p: f64) -> Result<NodeId> {
        if !(0.0..1.0).contains(&p) {
            return Err(NnError::InvalidArgument(format!("dropout probability {p} not in [0, 1)")));
        }
        if p == 0.0 || self.rng.is_none() {
            return Ok(x);
        }
        let n = self.value(x).len();
        let keep = 1.0 / (1.0 - p);
        let rng = self.rng.as_mut().expect("training graph");
        let mask: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let out: Vec<f64> = self.value(x).data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let shape = self.value(x).shape().to_vec();
        Ok(self.push(Tensor::new(shape, out)?, Op::Dropout { x, mask }))
    }

    /// Scaled dot-product attention over already projected `q`, `k`, `v`,
    /// each `[batch*seq, dim]`. Heads split `dim` evenly. Keys whose `mask`
    /// entry is zero get zero weight (equivalent to a `-inf` logit).
    pub fn attention(
        &mut self,
        q: NodeId,
        k: NodeId,
        v: NodeId,
        mask: &[f64],
        batch: usize,
        seq: usize,
        heads: usize,
    ) -> Result<NodeId> {
        let (rows, dim) = self.value(q).dims2("attention")?;
        for other in [k, v] {
            if self.value(other).shape() != [rows, dim] {
                return Err(shape_err("attention", self.value(q).shape(), self.value(other).shape()));
            }
        }
        if rows != batch * seq || mask.len() != rows {
            return Err(shape_err("attention", &[rows], &[batch, seq, mask.len()]));
        }
        if heads == 0 || dim % heads != 0 {
            return Err(NnError::InvalidArgument(format!(
                "model dimension {dim} is not divisible by {heads} heads"
            )));
        }
        let dh = dim / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let (qs, ks, vs) = (self.value(q).data(), self.value(k).data(), self.value(v).data());
        let mut probs = vec![0.0; batch * heads * seq * seq];
        let mut out = vec![0.0; rows * dim];
        let mut scores = vec![0.0; seq];
        for b in 0..batch {
            let keys: Vec<usize> = (0..seq).filter(|&j| mask[b * seq + j] != 0.0).collect();
            if keys.is_empty() {
                return Err(NnError::InvalidArgument(format!(
                    "attention sequence {b} has no unmasked positions"
                )));
            }
            for h in 0..heads {
                let off = h * dh;
                for i in 0..seq {
                    let qi = &qs[(b * seq + i) * dim + off..][..dh];
                    let mut max = f64::NEG_INFINITY;
                    for &j in &keys {
                        let kj = &ks[(b * seq + j) * dim + off..][..dh];
                        let s = dot(qi, kj) * scale;
                        scores[j] = s;
                        max = max.max(s);
                    }
                    let mut z = 0.0;
                    for &j in &keys {
                        let e = (scores[j] - max).exp();
                        scores[j] = e;
                        z += e;
                    }
                    let prow = &mut probs[((b * heads + h) * seq + i) * seq..][..seq];
                    let orow = &mut out[(b * seq + i) * dim + off..][..dh];
                    for &j in &keys {
                        let p = scores[j] / z;
                        prow[j] = p;
                        let vj = &vs[(b * seq + j) * dim + off..][..dh];
                        orow.iter_mut().zip(vj).for_each(|(o, v)| *o += p * v);
                    }
                }
            }
        }
        if self.record_attention {
            self.attention_log.push(probs.clone());
        }
        Ok(self.push(
            Tensor::new(vec![rows, dim], out)?,
            Op::Attention {
                q,
                k,
                v,
                geom: AttnGeom {
                    batch,
                    seq,
                    heads,
                    dim,
                },
                mask: mask.to_vec(),
                probs,
            },
        ))
    }

    /// Concatenates `[m, n_i]` blocks along columns.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = *parts
            .first()
            .ok_or_else(|| NnError::InvalidArgument("concat of zero tensors".into()))?;
        let (m, _) = self.value(first).dims2("concat_cols")?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.value(p).dims2("concat_cols")?;
            if r != m {
                return Err(shape_err("concat_cols", self.value(first).shape(), self.value(p).shape()));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * total);
        for r in 0..m {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[r * w..(r + 1) * w]);
            }
        }
        Ok(self.push(Tensor::new(vec![m, total], out)?, Op::ConcatCols(parts.to_vec())))
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let (m, n) = self.value(x).dims2("slice_cols")?;
        if start + len > n {
            return Err(shape_err("slice_cols", self.value(x).shape(), &[start, len]));
        }
        let xs = self.value(x).data();
        let mut out = Vec::with_capacity(m * len);
        for r in 0..m {
            out.extend_from_slice(&xs[r * n + start..r * n + start + len]);
        }
        Ok(self.push(Tensor::new(vec![m, len], out)?, Op::SliceCols { x, start }))
    }

    /// Same data, new shape.
    pub fn reshape(&mut self, x: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        let t = self.value(x).clone().reshaped(shape)?;
        Ok(self.push(t, Op::Reshape(x)))
    }

    /// Row lookup into a `[vocab, d]` table.
    pub fn gather_rows(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId> {
        let (v, d) = self.value(table).dims2("gather_rows")?;
        let t = self.value(table).data();
        let mut out = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= v {
                return Err(NnError::InvalidArgument(format!("row index {id} out of range for {v} rows")));
            }
            out.extend_from_slice(&t[id * d..(id + 1) * d]);
        }
        Ok(self.push(
            Tensor::new(vec![ids.len(), d], out)?,
            Op::GatherRows {
                table,
                ids: ids.to_vec(),
            },
        ))
    }

    /// Mean over the unmasked rows of each sequence: `[batch*seq, d] -> [batch, d]`.
    pub fn masked_mean(&mut self, x: NodeId, mask: &[f64], batch: usize, seq: usize) -> Result<NodeId> {
        let (rows, d) = self.value(x).dims2("masked_mean")?;
        if rows != batch * seq || mask.len() != rows {
            return Err(shape_err("masked_mean", self.value(x).shape(), &[batch, seq, mask.len()]));
        }
        let xs = self.value(x).data();
        let mut out = vec![0.0; batch * d];
        for b in 0..batch {
            let w: f64 = mask[b * seq..(b + 1) * seq].iter().sum();
            if w == 0.0 {
                return Err(NnError::InvalidArgument(format!("sequence {b} is fully masked")));
            }
            for t in 0..seq {
                let m = mask[b * seq + t];
                if m == 0.0 {
                    continue;
                }
                let row = &xs[(b * seq + t) * d..][..d];
                out[b * d..(b + 1) * d]
                    .iter_mut()
                    .zip(row)
                    .for_each(|(o, v)| *o += m * v / w);
            }
        }
        Ok(self.push(
            Tensor::new(vec![batch, d], out)?,
            Op::MaskedMean {
                x,
                mask: mask.to_vec(),
                batch,
                seq,
            },
        ))
    }

    /// Mean binary cross-entropy on logits, computed in the overflow-safe form
    /// `max(z,0) - z*y + ln(1 + exp(-|z|))`.
    pub fn bce_with_logits(&mut self, logits: NodeId, targets: &Tensor) -> Result<NodeId> {
        let z = self.value(logits);
        if z.shape() != targets.shape() {
            return Err(shape_err("bce_with_logits", z.shape(), targets.shape()));
        }
        let loss = bce_value(z.data(), targets.data())?;
        Ok(self.push(
            Tensor::new(vec![1], vec![loss])?,
            Op::Bce {
                logits,
                targets: targets.data().to_vec(),
            },
        ))
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::filled(vec![1], s), Op::Sum(x))
    }

    /// `sum_i w_i * x_i` with fixed weights; handy for turning any output into
    /// a scalar with a non-trivial gradient.
    pub fn weighted_sum(&mut self, x: NodeId, weights: &[f64]) -> Result<NodeId> {
        if weights.len() != self.value(x).len() {
            return Err(shape_err("weighted_sum", self.value(x).shape(), &[weights.len()]));
        }
        let s = self.value(x).data().iter().zip(weights).map(|(a, b)| a * b).sum();
        Ok(self.push(
            Tensor::filled(vec![1], s),
            Op::WeightedSum {
                x,
                weights: weights.to_vec(),
            },
        ))
    }

    /// Reverse pass from a scalar root.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        if self.value(root).len() != 1 {
            return Err(NnError::InvalidArgument(format!(
                "backward root must be scalar, got shape {:?}",
                self.value(root).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(vec![1.0]);
        let mut out = Gradients {
            by_param: vec![None; self.store.len()],
        };

        for idx in (0..=root.0).rev() {
            let Some(gy) = grads[idx].take() else { continue };
            match &self.nodes[idx].op {
                Op::Input => {}
                Op::Param(p) => out.by_param[p.index()] = Some(gy),
                Op::MatMul(a, b) => {
                    let (m, k) = self.value(*a).dims2("matmul")?;
                    let n = self.value(*b).shape()[1];
                    let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                    {
                        let ga = slot(&mut grads, *a, m * k);
                        for i in 0..m {
                            let gr = &gy[i * n..(i + 1) * n];
                            for p in 0..k {
                                ga[i * k + p] += dot(gr, &bv[p * n..(p + 1) * n]);
                            }
                        }
                    }
                    let gb = slot(&mut grads, *b, k * n);
                    for i in 0..m {
                        let gr = &gy[i * n..(i + 1) * n];
                        for p in 0..k {
                            let a_ip = av[i * k + p];
                            if a_ip == 0.0 {
                                continue;
                            }
                            gb[p * n..(p + 1) * n]
                                .iter_mut()
                                .zip(gr)
                                .for_each(|(g, d)| *g += a_ip * d);
                        }
                    }
                }
                Op::AddBias(x, bias) => {
                    let n = self.value(*bias).len();
                    add_into(slot(&mut grads, *x, gy.len()), &gy);
                    let gb = slot(&mut grads, *bias, n);
                    for row in gy.chunks_exact(n) {
                        add_into(gb, row);
                    }
                }
                Op::Add(a, b) => {
                    add_into(slot(&mut grads, *a, gy.len()), &gy);
                    add_into(slot(&mut grads, *b, gy.len()), &gy);
                }
                Op::LayerNorm {
                    x,
                    gain,
                    shift,
                    xhat,
                    inv_std,
                } => {
                    let d = self.value(*gain).len();
                    let g = self.value(*gain).data();
                    {
                        let gg = slot(&mut grads, *gain, d);
                        for (r, row) in gy.chunks_exact(d).enumerate() {
                            for c in 0..d {
                                gg[c] += row[c] * xhat[r * d + c];
                            }
                        }
                    }
                    {
                        let gs = slot(&mut grads, *shift, d);
                        for row in gy.chunks_exact(d) {
                            add_into(gs, row);
                        }
                    }
                    let gx = slot(&mut grads, *x, gy.len());
                    let mut dxhat = vec![0.0; d];
                    for (r, row) in gy.chunks_exact(d).enumerate() {
                        let h = &xhat[r * d..(r + 1) * d];
                        for c in 0..d {
                            dxhat[c] = row[c] * g[c];
                        }
                        let s1: f64 = dxhat.iter().sum();
                        let s2: f64 = dxhat.iter().zip(h).map(|(a, b)| a * b).sum();
                        let k = inv_std[r] / d as f64;
                        for c in 0..d {
                            gx[r * d + c] += k * (d as f64 * dxhat[c] - s1 - h[c] * s2);
                        }
                    }
                }
                Op::PRelu { x, slope } => {
                    let xs = self.value(*x).data();
                    let c = *self.value(*x).shape().last().unwrap_or(&1);
                    let a = self.value(*slope).data();
                    let ns = a.len();
                    let ch = |i: usize| if ns == 1 { 0 } else { i % c };
                    {
                        let gx = slot(&mut grads, *x, xs.len());
                        for i in 0..xs.len() {
                            gx[i] += if xs[i] > 0.0 { gy[i] } else { a[ch(i)] * gy[i] };
                        }
                    }
                    let ga = slot(&mut grads, *slope, ns);
                    for i in 0..xs.len() {
                        if xs[i] <= 0.0 {
                            ga[ch(i)] += xs[i] * gy[i];
                        }
                    }
                }
                Op::Dropout { x, mask } => {
                    let gx = slot(&mut grads, *x, gy.len());
                    for i in 0..gy.len() {
                        gx[i] += gy[i] * mask[i];
                    }
                }
                Op::Attention {
                    q,
                    k,
                    v,
                    geom,
                    mask,
                    probs,
                } => {
                    let AttnGeom {
                        batch,
                        seq,
                        heads,
                        dim,
                    } = *geom;
                    let dh = dim / heads;
                    let scale = 1.0 / (dh as f64).sqrt();
                    let (qs, ks, vs) = (self.value(*q).data(), self.value(*k).data(), self.value(*v).data());
                    let rows = batch * seq;
                    let mut gq = vec![0.0; rows * dim];
                    let mut gk = vec![0.0; rows * dim];
                    let mut gv = vec![0.0; rows * dim];
                    let mut dp = vec![0.0; seq];
                    for b in 0..batch {
                        for h in 0..heads {
                            let off = h * dh;
                            for i in 0..seq {
                                let prow = &probs[((b * heads + h) * seq + i) * seq..][..seq];
                                let go = &gy[(b * seq + i) * dim + off..][..dh];
                                let mut acc = 0.0;
                                for j in 0..seq {
                                    if mask[b * seq + j] == 0.0 {
                                        dp[j] = 0.0;
                                        continue;
                                    }
                                    let r = (b * seq + j) * dim + off;
                                    dp[j] = dot(go, &vs[r..r + dh]);
                                    acc += prow[j] * dp[j];
                                    gv[r..r + dh]
                                        .iter_mut()
                                        .zip(go)
                                        .for_each(|(g, o)| *g += prow[j] * o);
                                }
                                let ri = (b * seq + i) * dim + off;
                                for j in 0..seq {
                                    if mask[b * seq + j] == 0.0 {
                                        continue;
                                    }
                                    let ds = prow[j] * (dp[j] - acc) * scale;
                                    if ds == 0.0 {
                                        continue;
                                    }
                                    let rj = (b * seq + j) * dim + off;
                                    for c in 0..dh {
                                        gq[ri + c] += ds * ks[rj + c];
                                        gk[rj + c] += ds * qs[ri + c];
                                    }
                                }
                            }
                        }
                    }
                    add_into(slot(&mut grads, *q, rows * dim), &gq);
                    add_into(slot(&mut grads, *k, rows * dim), &gk);
                    add_into(slot(&mut grads, *v, rows * dim), &gv);
                }
                Op::ConcatCols(parts) => {
                    let widths: Vec<usize> = parts.iter().map(|p| self.value(*p).shape()[1]).collect();
                    let total: usize = widths.iter().sum();
                    let m = gy.len() / total;
                    let mut off = 0;
                    for (p, w) in parts.iter().zip(&widths) {
                        let gp = slot(&mut grads, *p, m * w);
                        for r in 0..m {
                            add_into(&mut gp[r * w..(r + 1) * w], &gy[r * total + off..r * total + off + w]);
                        }
                        off += w;
                    }
                }
                Op::SliceCols { x, start } => {
                    let (m, n) = self.value(*x).dims2("slice_cols")?;
                    let len = gy.len() / m.max(1);
                    let gx = slot(&mut grads, *x, m * n);
                    for r in 0..m {
                        add_into(&mut gx[r * n + start..r * n + start + len], &gy[r * len..(r + 1) * len]);
                    }
                }
                Op::Reshape(x) => add_into(slot(&mut grads, *x, gy.len()), &gy),
                Op::GatherRows { table, ids } => {
                    let (v, d) = self.value(*table).dims2("gather_rows")?;
                    let gt = slot(&mut grads, *table, v * d);
                    for (r, &id) in ids.iter().enumerate() {
                        add_into(&mut gt[id * d..(id + 1) * d], &gy[r * d..(r + 1) * d]);
                    }
                }
                Op::MaskedMean { x, mask, batch, seq } => {
                    let d = gy.len() / batch;
                    let gx = slot(&mut grads, *x, batch * seq * d);
                    for b in 0..*batch {
                        let w: f64 = mask[b * seq..(b + 1) * seq].iter().sum();
                        for t in 0..*seq {
                            let m = mask[b * seq + t];
                            if m == 0.0 {
                                continue;
                            }
                            let row = &mut gx[(b * seq + t) * d..][..d];
                            row.iter_mut()
                                .zip(&gy[b * d..(b + 1) * d])
                                .for_each(|(g, o)| *g += m * o / w);
                        }
                    }
                }
                Op::Bce { logits, targets } => {
                    let z = self.value(*logits).data();
                    let n = z.len() as f64;
                    let gz = slot(&mut grads, *logits, z.len());
                    for i in 0..z.len() {
                        gz[i] += gy[0] * (sigmoid(z[i]) - targets[i]) / n;
                    }
                }
                Op::Sum(x) => {
                    let n = self.value(*x).len();
                    slot(&mut grads, *x, n).iter_mut().for_each(|g| *g += gy[0]);
                }
                Op::WeightedSum { x, weights } => {
                    let gx = slot(&mut grads, *x, weights.len());
                    gx.iter_mut().zip(weights).for_each(|(g, w)| *g += gy[0] * w);
                }
            }
        }
        Ok(out)
    }
}

fn slot(grads: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut Vec<f64> {
    grads[id.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let a_ip = a[i * k + p];
            if a_ip == 0.0 {
                continue;
            }
            orow.iter_mut()
                .zip(&b[p * n..(p + 1) * n])
                .for_each(|(o, b)| *o += a_ip * b);
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy on logits without building a graph.
pub fn bce_value(logits: &[f64], targets: &[f64]) -> Result<f64> {
    if logits.len() != targets.len() {
        return Err(shape_err("bce_with_logits", &[logits.len()], &[targets.len()]));
    }
    if let Some(t) = targets.iter().find(|&&t| t != 0.0 && t != 1.0) {
        return Err(NnError::InvalidArgument(format!("target {t} is not 0 or 1")));
    }
    if logits.is_empty() {
        return Err(NnError::InvalidArgument("empty logits".into()));
    }
    let total: f64 = logits
        .iter()
        .zip(targets)
        .map(|(&z, &y)| z.max(0.0) - z * y + (-z.abs()).exp().ln_1p())
        .sum();
    Ok(total / logits.len() as f64)
}
