//! Named-paragraph detection. A paragraph starts at a line beginning with a
//! 1–6 word header followed by `:` and runs until the next header.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::chunking::ParagraphSpan;
use super::document::{Document, Split};
use super::preprocess::normalize;
use super::vocab::{TokenSequence, Vocabulary, UNK};
use crate::error::{Error, Result};

pub const DEFAULT_PARAGRAPHS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    pub name: String,
    /// Byte range in the input, from the header line to the next header.
    pub span: Range<usize>,
}

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^[ \t]*([A-Za-z][A-Za-z/&'()\-]*(?:[ \t]+[A-Za-z/&'()\-]+){0,5})[ \t]*:").expect("valid regex")
    })
}

/// Finds colon-terminated section headers at line starts. Expects text with
/// its line structure intact; header names are lower-cased with single
/// spaces. Text before the first header belongs to no paragraph.
pub fn detect_paragraphs(doc_text: &str) -> Vec<Paragraph> {
    let mut starts: Vec<(usize, String)> = Vec::new();
    let mut offset = 0;
    for line in doc_text.split_inclusive('\n') {
        if let Some(c) = header_re().captures(line) {
            let name = c[1].split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
            starts.push((offset, name));
        }
        offset += line.len();
    }
    let mut out = Vec::with_capacity(starts.len());
    for (i, (start, name)) in starts.iter().enumerate() {
        let end = starts.get(i + 1).map_or(doc_text.len(), |(s, _)| *s);
        out.push(Paragraph {
            name: name.clone(),
            span: *start..end,
        });
    }
    out
}

/// Tokenises a raw document paragraph by paragraph, returning the full token
/// sequence together with each paragraph's token range. The sequence equals
/// `tokenize(normalize(raw))` because paragraphs split on line boundaries.
pub fn paragraph_tokens(vocab: &Vocabulary, doc_id: &str, raw: &str) -> (TokenSequence, Vec<ParagraphSpan>) {
    let paragraphs = detect_paragraphs(raw);
    let mut ids = Vec::new();
    let mut spans = Vec::with_capacity(paragraphs.len());
    let lead_end = paragraphs.first().map_or(raw.len(), |p| p.span.start);
    let lead = normalize(&raw[..lead_end]);
    if !lead.is_empty() {
        ids.extend(vocab.tokenize(doc_id, &lead).token_ids);
    }
    for p in paragraphs {
        let text = normalize(&raw[p.span.clone()]);
        let start = ids.len();
        if !text.is_empty() {
            ids.extend(vocab.tokenize(doc_id, &text).token_ids);
        }
        spans.push(ParagraphSpan {
            name: p.name,
            tokens: start..ids.len(),
        });
    }
    if ids.is_empty() {
        ids.push(UNK);
    }
    (
        TokenSequence {
            doc_id: doc_id.to_string(),
            token_ids: ids,
        },
        spans,
    )
}

/// The most frequent paragraph names of the training split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphIndex {
    /// `(name, document frequency)`, descending frequency, ties by name.
    pub names: Vec<(String, usize)>,
}

impl ParagraphIndex {
    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|(n, _)| n == name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Ranks paragraph names by the number of training documents containing them
/// (each document counted once) and keeps the top `k`. Documents from other
/// splits are ignored.
pub fn build_paragraph_index(docs: &[Document], k: usize) -> Result<ParagraphIndex> {
    if k == 0 {
        return Err(Error::Config("paragraph index size must be at least 1".into()));
    }
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs.iter().filter(|d| d.split == Split::Train) {
        let names: BTreeSet<String> = detect_paragraphs(&doc.raw_text).into_iter().map(|p| p.name).collect();
        for n in names {
            *freq.entry(n).or_default() += 1;
        }
    }
    if freq.is_empty() {
        return Err(Error::NoParagraphs);
    }
    let mut names: Vec<(String, usize)> = freq.into_iter().collect();
    names.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    names.truncate(k);
    Ok(ParagraphIndex { names })
}
