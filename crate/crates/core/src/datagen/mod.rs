//! Synthetic corpora with position-controlled label signals, and dataset IO.

mod generate;
mod io;
mod spec;
mod stats;

pub use generate::{generate_corpus, GeneratedCorpus, SIGNAL_REGION};
pub use io::{load_dataset, save_dataset};
pub use spec::{CorpusSpec, SignalPosition, DEFAULT_HEADERS};
pub use stats::{corpus_stats, CorpusStats};
