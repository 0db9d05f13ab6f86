use crate::error::Result;
use crate::labels::LabelSpace;
use crate::textprep::{
    build_paragraph_index, normalize, paragraph_tokens, split, ChunkSet, Document, ParagraphIndex, ParagraphSpan,
    Split, Strategy, TokenSequence, Vocabulary,
};

/// A tokenized dataset: the vocabulary and paragraph index are learned from
/// the training split only.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub documents: Vec<Document>,
    pub labels: LabelSpace,
    pub vocab: Vocabulary,
    pub paragraph_index: Option<ParagraphIndex>,
    /// Multi-hot targets aligned with `documents`.
    pub targets: Vec<Vec<f64>>,
    pub sequences: Vec<TokenSequence>,
    pub spans: Vec<Vec<ParagraphSpan>>,
}

impl PreparedCorpus {
    /// Builds a vocabulary of `vocab_size` pieces and, when `paragraphs > 0`
    /// and the training split has headers, an index of that many names.
    pub fn new(documents: Vec<Document>, vocab_size: usize, paragraphs: usize) -> Result<Self> {
        let vocab = {
            let train: Vec<String> = documents
                .iter()
                .filter(|d| d.split == Split::Train)
                .map(|d| normalize(&d.raw_text))
                .collect();
            Vocabulary::build(&train, vocab_size)?
        };
        Self::with_vocab(documents, vocab, paragraphs)
    }

    pub fn with_vocab(documents: Vec<Document>, vocab: Vocabulary, paragraphs: usize) -> Result<Self> {
        let labels = LabelSpace::from_documents(&documents)?;
        // a corpus without headers still supports every other strategy
        let paragraph_index = match paragraphs {
            0 => None,
            k => match build_paragraph_index(&documents, k) {
                Ok(index) => Some(index),
                Err(crate::error::Error::NoParagraphs) => None,
                Err(e) => return Err(e),
            },
        };
        let mut targets = Vec::with_capacity(documents.len());
        let mut sequences = Vec::with_capacity(documents.len());
        let mut spans = Vec::with_capacity(documents.len());
        for d in &documents {
            if d.raw_text.trim().is_empty() {
                return Err(crate::error::Error::EmptyDocument);
            }
            targets.push(labels.multi_hot(d)?);
            let (seq, sp) = paragraph_tokens(&vocab, &d.id, &d.raw_text);
            sequences.push(seq);
            spans.push(sp);
        }
        Ok(Self {
            documents,
            labels,
            vocab,
            paragraph_index,
            targets,
            sequences,
            spans,
        })
    }

    /// Document positions belonging to `split`.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.documents.len())
            .filter(|&i| self.documents[i].split == split)
            .collect()
    }

    /// One chunk set per document, in document order.
    pub fn chunk_sets(&self, strategy: Strategy, max_len: usize) -> Result<Vec<ChunkSet>> {
        self.sequences
            .iter()
            .zip(&self.spans)
            .map(|(seq, sp)| split(seq, strategy, max_len, self.paragraph_index.as_ref(), Some(sp)))
            .collect()
    }
}
