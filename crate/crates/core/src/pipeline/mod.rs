//! Stage functions and the experiment-matrix runner shared by the
//! command-line tool and the tests.

mod assemble;
mod data;
mod plan;
mod prepare;
mod runner;
mod stages;

pub use assemble::{assemble_inputs, slots_for};
pub use data::{load_documents, save_splits, split_file};
pub use plan::{CorpusSource, EncoderShape, ExperimentPlan, FineTunePlan, ReferenceKey, RunSpec};
pub use prepare::PreparedCorpus;
pub use runner::{
    content_key, derive_seed, encode_chunk_sets, parse_curve, render_curve, score, sha256_hex, ArtifactEntry,
    CellResult, LossCurve, MatrixResult, RunManifest, Runner,
};
pub use stages::{
    chunk_examples, chunk_file, encode_stage, evaluate_stage, load_prepared, prepare_dataset, read_chunk_file,
    render_metrics, train_decoder_stage, train_encoder_stage, write_chunk_file, DecoderSettings, PrepareInfo,
    PrepareSummary,
};
