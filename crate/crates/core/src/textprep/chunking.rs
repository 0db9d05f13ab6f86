//! Splitting token sequences into fixed-length, CLS/SEP-framed chunks.
//!
//! `max_len` counts the two framing tokens, so every chunk carries at most
//! `max_len - 2` content tokens.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::paragraphs::ParagraphIndex;
use super::vocab::{TokenSequence, CLS, PAD, SEP};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Front,
    Back,
    Mixed,
    All,
    Paragraph,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Front,
        Strategy::Back,
        Strategy::Mixed,
        Strategy::All,
        Strategy::Paragraph,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Front => "front",
            Strategy::Back => "back",
            Strategy::Mixed => "mixed",
            Strategy::All => "all",
            Strategy::Paragraph => "paragraph",
        }
    }

    /// Wire code used by the ENC1 format.
    pub fn code(self) -> u8 {
        match self {
            Strategy::Front => 0,
            Strategy::Back => 1,
            Strategy::Mixed => 2,
            Strategy::All => 3,
            Strategy::Paragraph => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Strategies that yield one chunk from a fixed place in every document.
    pub fn is_aligned(self) -> bool {
        matches!(self, Strategy::Front | Strategy::Back | Strategy::Mixed)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    /// `[CLS] content [SEP] [PAD]...`, exactly `max_len` long.
    pub token_ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    pub position_key: String,
    /// Non-pad tokens, framing included.
    pub true_len: usize,
}

impl Chunk {
    pub fn new(content: &[u32], max_len: usize, position_key: impl Into<String>) -> Self {
        debug_assert!(content.len() + 2 <= max_len);
        let true_len = content.len() + 2;
        let mut token_ids = Vec::with_capacity(max_len);
        token_ids.push(CLS);
        token_ids.extend_from_slice(content);
        token_ids.push(SEP);
        token_ids.resize(max_len, PAD);
        let mut attention_mask = vec![1u8; true_len];
        attention_mask.resize(max_len, 0);
        Self {
            token_ids,
            attention_mask,
            position_key: position_key.into(),
            true_len,
        }
    }

    /// Content tokens without framing or padding.
    pub fn content(&self) -> &[u32] {
        &self.token_ids[1..self.true_len - 1]
    }

    /// Framed tokens without padding.
    pub fn framed(&self) -> &[u32] {
        &self.token_ids[..self.true_len]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkSet {
    pub doc_id: String,
    pub strategy: Strategy,
    pub chunks: Vec<Chunk>,
}

/// A named paragraph located in token space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParagraphSpan {
    pub name: String,
    pub tokens: Range<usize>,
}

/// Cuts `seq` into chunks under `strategy`.
///
/// * front: first `max_len-2` tokens
/// * back: last `max_len-2` tokens
/// * mixed: first `ceil((max_len-2)/2)` and last `floor((max_len-2)/2)`
///   tokens, or the whole sequence when it already fits
/// * all: consecutive `max_len-2` windows, the last possibly shorter
/// * paragraph: one chunk per indexed paragraph, truncated to its first
///   `max_len-2` tokens, keyed by name (`name#2`, `name#3`... for repeats)
pub fn split(
    seq: &TokenSequence,
    strategy: Strategy,
    max_len: usize,
    paragraph_index: Option<&ParagraphIndex>,
    paragraph_spans: Option<&[ParagraphSpan]>,
) -> Result<ChunkSet> {
    if max_len < 8 {
        return Err(Error::Config(format!("max_len must be at least 8, got {max_len}")));
    }
    let room = max_len - 2;
    let toks = &seq.token_ids;
    let n = toks.len();
    let chunks = match strategy {
        Strategy::Front => vec![Chunk::new(&toks[..n.min(room)], max_len, "0")],
        Strategy::Back => vec![Chunk::new(&toks[n - n.min(room)..], max_len, "0")],
        Strategy::Mixed => {
            if n <= room {
                vec![Chunk::new(toks, max_len, "0")]
            } else {
                let head = room - room / 2;
                let tail = room / 2;
                let mut content = Vec::with_capacity(room);
                content.extend_from_slice(&toks[..head]);
                content.extend_from_slice(&toks[n - tail..]);
                vec![Chunk::new(&content, max_len, "0")]
            }
        }
        Strategy::All => toks
            .chunks(room)
            .enumerate()
            .map(|(i, c)| Chunk::new(c, max_len, i.to_string()))
            .collect(),
        Strategy::Paragraph => {
            let index = paragraph_index.ok_or(Error::MissingParagraphs("a paragraph index"))?;
            let spans = paragraph_spans.ok_or(Error::MissingParagraphs("paragraph spans"))?;
            let mut seen: Vec<(&str, usize)> = Vec::new();
            let mut out = Vec::new();
            for span in spans {
                if !index.contains(&span.name) || span.tokens.end > n || span.tokens.is_empty() {
                    continue;
                }
                let count = match seen.iter_mut().find(|(name, _)| *name == span.name) {
                    Some((_, c)) => {
                        *c += 1;
                        *c
                    }
                    None => {
                        seen.push((&span.name, 1));
                        1
                    }
                };
                let key = if count == 1 {
                    span.name.clone()
                } else {
                    format!("{}#{count}", span.name)
                };
                let body = &toks[span.tokens.clone()];
                out.push(Chunk::new(&body[..body.len().min(room)], max_len, key));
            }
            out
        }
    };
    Ok(ChunkSet {
        doc_id: seq.doc_id.clone(),
        strategy,
        chunks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(n: usize) -> TokenSequence {
        TokenSequence {
            doc_id: "d".into(),
            token_ids: (0..n as u32).map(|i| 4 + i).collect(),
        }
    }

    #[test]
    fn all_on_1200_tokens() {
        let cs = split(&seq(1200), Strategy::All, 512, None, None).unwrap();
        let lens: Vec<usize> = cs.chunks.iter().map(|c| c.true_len).collect();
        assert_eq!(lens, [512, 512, 182]);
        let content: Vec<usize> = cs.chunks.iter().map(|c| c.content().len()).collect();
        assert_eq!(content, [510, 510, 180]);
        assert_eq!(cs.chunks[2].position_key, "2");
    }

    #[test]
    fn short_document_single_chunks_agree() {
        let s = seq(300);
        let f = split(&s, Strategy::Front, 512, None, None).unwrap();
        let b = split(&s, Strategy::Back, 512, None, None).unwrap();
        let m = split(&s, Strategy::Mixed, 512, None, None).unwrap();
        for cs in [&f, &b, &m] {
            assert_eq!(cs.chunks.len(), 1);
            assert_eq!(cs.chunks[0].true_len, 302);
            assert_eq!(cs.chunks[0].content(), s.token_ids.as_slice());
        }
    }

    #[test]
    fn mixed_on_1200_tokens() {
        let s = seq(1200);
        let m = split(&s, Strategy::Mixed, 512, None, None).unwrap();
        let mut expected = s.token_ids[0..255].to_vec();
        expected.extend_from_slice(&s.token_ids[945..1200]);
        assert_eq!(m.chunks[0].content(), expected.as_slice());
    }

    #[test]
    fn framing_and_mask() {
        let c = split(&seq(3), Strategy::Front, 8, None, None).unwrap().chunks.remove(0);
        assert_eq!(c.token_ids, vec![CLS, 4, 5, 6, SEP, PAD, PAD, PAD]);
        assert_eq!(c.attention_mask, vec![1, 1, 1, 1, 1, 0, 0, 0]);
        assert_eq!(c.true_len, 5);
    }

    #[test]
    fn errors() {
        assert!(split(&seq(10), Strategy::Front, 7, None, None).is_err());
        assert!(matches!(
            split(&seq(10), Strategy::Paragraph, 16, None, None),
            Err(Error::MissingParagraphs(_))
        ));
        assert!(matches!("middle".parse::<Strategy>(), Err(Error::UnknownStrategy(_))));
    }

    #[test]
    fn paragraph_chunks() {
        let index = ParagraphIndex {
            names: vec![("history".into(), 3), ("plan".into(), 2)],
        };
        let spans = vec![
            ParagraphSpan { name: "plan".into(), tokens: 0..3 },
            ParagraphSpan { name: "other".into(), tokens: 3..5 },
            ParagraphSpan { name: "history".into(), tokens: 5..30 },
            ParagraphSpan { name: "plan".into(), tokens: 30..32 },
        ];
        let cs = split(&seq(32), Strategy::Paragraph, 12, Some(&index), Some(&spans)).unwrap();
        let keys: Vec<&str> = cs.chunks.iter().map(|c| c.position_key.as_str()).collect();
        assert_eq!(keys, ["plan", "history", "plan#2"]);
        assert_eq!(cs.chunks[1].content(), &seq(32).token_ids[5..15]);

        let none = split(&seq(5), Strategy::Paragraph, 12, Some(&index), Some(&[])).unwrap();
        assert!(none.chunks.is_empty());
    }

    #[test]
    fn strategy_codes() {
        for s in Strategy::ALL {
            assert_eq!(Strategy::from_code(s.code()), Some(s));
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!(Strategy::from_code(5), None);
    }
}
