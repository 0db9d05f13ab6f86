//! Text normalisation, subword tokenisation and the five chunking strategies.

mod chunking;
mod document;
mod paragraphs;
mod preprocess;
mod vocab;

pub use chunking::{split, Chunk, ChunkSet, ParagraphSpan, Strategy};
pub use document::{Document, Split};
pub use paragraphs::{build_paragraph_index, detect_paragraphs, paragraph_tokens, Paragraph, ParagraphIndex, DEFAULT_PARAGRAPHS};
pub use preprocess::{normalize, preprocess_text};
pub use vocab::{TokenSequence, Vocabulary, CLS, CONTINUATION, PAD, SEP, SPECIALS, UNK};
