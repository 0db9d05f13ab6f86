//! Minimal dense-tensor math for the encoder and decoder models: a tape
//! with exact reverse-mode gradients, the handful of layers those models
//! use, binary cross-entropy on logits, Adam, and finite-difference checks.
//!
//! Everything is `f64` and single-threaded so forward passes are
//! bit-reproducible for a given seed.

pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod layers;
pub mod optim;
pub mod params;
pub mod tensor;

pub use error::{NnError, Result};
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use graph::{bce_value, sigmoid, Gradients, Graph, NodeId};
pub use layers::{Dense, Embedding, LayerNorm, MultiHeadAttention, NonLinear, PRelu, TransformerLayer};
pub use optim::{lr_schedule, AdamState};
pub use params::{ParamId, ParamStore, Parameter};
pub use tensor::Tensor;
