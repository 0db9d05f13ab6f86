//! Chunk encoder: a small trainable transformer, its fine-tuning loop and
//! the ENC1 interchange format for encodings.

mod config;
mod enc1;
mod finetune;
mod model;

pub use config::{EncoderConfig, FineTuneConfig};
pub use enc1::{
    export_encodings, import_encodings, import_encodings_with_dim, read_enc1, write_enc1, Encoding, EncodingSet,
    ENC1_MAGIC, ENC1_VERSION,
};
pub use finetune::{finetune_encoder, label_prior, validation_loss, FineTuneResult, TrainExample};
pub use model::Encoder;
