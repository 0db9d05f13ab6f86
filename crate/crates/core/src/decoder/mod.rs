//! Decoders over precomputed chunk encodings: linear, flat MLP, parallel
//! MLP and transformer, each in three sizes, plus their training loop.

mod config;
mod model;
mod train;

pub use config::{Architecture, DecoderConfig, InputSlots, Size, SlotKey, TrainConfig};
pub use model::{Decoder, DecoderInput};
pub use train::{evaluation_loss, train_decoder, TrainHistory};
