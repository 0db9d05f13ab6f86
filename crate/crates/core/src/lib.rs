pub mod datagen;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod labels;
pub mod metrics;
pub mod pipeline;
pub mod textprep;

pub use error::{Error, Result};
