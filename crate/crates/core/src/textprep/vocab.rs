//! Subword vocabulary: greedy pair merges for construction, greedy
//! longest-match-first for segmentation.
//!
//! Word-initial pieces are stored bare; pieces that continue a word carry the
//! `##` prefix. Indices 0..4 are always `[CLS] [SEP] [PAD] [UNK]`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, IoContext, Result};

pub const CLS: u32 = 0;
pub const SEP: u32 = 1;
pub const PAD: u32 = 2;
pub const UNK: u32 = 3;
pub const SPECIALS: [&str; 4] = ["[CLS]", "[SEP]", "[PAD]", "[UNK]"];
pub const CONTINUATION: &str = "##";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub doc_id: String,
    pub token_ids: Vec<u32>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pieces: Vec<String>,
    index: HashMap<String, u32>,
    max_piece_chars: usize,
}

impl Vocabulary {
    pub fn from_pieces(pieces: Vec<String>) -> Result<Self> {
        for (i, s) in SPECIALS.iter().enumerate() {
            if pieces.get(i).map(String::as_str) != Some(*s) {
                return Err(Error::Vocabulary(format!("index {i} must hold {s}")));
            }
        }
        let mut index = HashMap::with_capacity(pieces.len());
        for (i, p) in pieces.iter().enumerate() {
            if p.is_empty() || p.chars().any(char::is_whitespace) {
                return Err(Error::Vocabulary(format!("invalid piece {p:?} at index {i}")));
            }
            if index.insert(p.clone(), i as u32).is_some() {
                return Err(Error::Vocabulary(format!("duplicate piece {p:?}")));
            }
        }
        let max_piece_chars = pieces
            .iter()
            .skip(SPECIALS.len())
            .map(|p| p.strip_prefix(CONTINUATION).unwrap_or(p).chars().count())
            .max()
            .unwrap_or(1);
        Ok(Self {
            pieces,
            index,
            max_piece_chars,
        })
    }

    /// Learns `target_size` pieces from `corpus` by repeatedly merging the most
    /// frequent adjacent pair (ties: lexicographically smallest pair).
    /// Stops early when no pair is left to merge.
    pub fn build<S: AsRef<str>>(corpus: &[S], target_size: usize) -> Result<Self> {
        let mut word_counts: BTreeMap<&str, u64> = BTreeMap::new();
        for text in corpus {
            for w in text.as_ref().split_whitespace() {
                *word_counts.entry(w).or_default() += 1;
            }
        }
        if word_counts.is_empty() {
            return Err(Error::Vocabulary("empty corpus".into()));
        }
        let mut words: Vec<(Vec<String>, u64)> = word_counts
            .iter()
            .map(|(w, &c)| {
                let syms = w
                    .chars()
                    .enumerate()
                    .map(|(i, ch)| if i == 0 { ch.to_string() } else { format!("{CONTINUATION}{ch}") })
                    .collect();
                (syms, c)
            })
            .collect();
        let alphabet: BTreeSet<String> = words.iter().flat_map(|(s, _)| s.iter().cloned()).collect();
        let floor = SPECIALS.len() + alphabet.len();
        if target_size < floor {
            return Err(Error::Vocabulary(format!(
                "target size {target_size} is below the {floor} pieces needed for specials and characters"
            )));
        }
        let mut pieces: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        pieces.extend(alphabet);
        let mut known: BTreeSet<String> = pieces.iter().cloned().collect();

        while pieces.len() < target_size {
            let mut pairs: BTreeMap<(&str, &str), u64> = BTreeMap::new();
            for (syms, c) in &words {
                for w in syms.windows(2) {
                    *pairs.entry((w[0].as_str(), w[1].as_str())).or_default() += c;
                }
            }
            // BTreeMap iterates in ascending pair order, so the first maximum wins ties.
            let Some(((l, r), _)) = pairs.iter().fold(None, |best: Option<(&(&str, &str), u64)>, (k, &v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((k, v)),
            }) else {
                break;
            };
            let (left, right) = (l.to_string(), r.to_string());
            let merged = format!("{left}{}", right.strip_prefix(CONTINUATION).unwrap_or(&right));
            for (syms, _) in &mut words {
                let mut i = 0;
                while i + 1 < syms.len() {
                    if syms[i] == left && syms[i + 1] == right {
                        syms[i] = merged.clone();
                        syms.remove(i + 1);
                    }
                    i += 1;
                }
            }
            if known.insert(merged.clone()) {
                pieces.push(merged);
            }
        }
        Self::from_pieces(pieces)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn id(&self, piece: &str) -> Option<u32> {
        self.index.get(piece).copied()
    }

    pub fn piece(&self, id: u32) -> Option<&str> {
        self.pieces.get(id as usize).map(String::as_str)
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    /// Greedy longest-match-first segmentation of each whitespace word.
    /// Characters no piece covers become `[UNK]`. Text without any word maps
    /// to a single `[UNK]` so sequences are never empty.
    pub fn tokenize(&self, doc_id: &str, text: &str) -> TokenSequence {
        let mut ids = Vec::new();
        for word in text.split_whitespace() {
            self.tokenize_word(word, &mut ids);
        }
        if ids.is_empty() {
            ids.push(UNK);
        }
        TokenSequence {
            doc_id: doc_id.to_string(),
            token_ids: ids,
        }
    }

    fn tokenize_word(&self, word: &str, out: &mut Vec<u32>) {
        let bounds: Vec<usize> = word.char_indices().map(|(i, _)| i).chain([word.len()]).collect();
        let n = bounds.len() - 1;
        let mut start = 0;
        let mut candidate = String::new();
        while start < n {
            let longest = (start + self.max_piece_chars).min(n);
            let mut found = None;
            for end in (start + 1..=longest).rev() {
                candidate.clear();
                if start > 0 {
                    candidate.push_str(CONTINUATION);
                }
                candidate.push_str(&word[bounds[start]..bounds[end]]);
                if let Some(&id) = self.index.get(candidate.as_str()) {
                    found = Some((id, end));
                    break;
                }
            }
            match found {
                Some((id, end)) => {
                    out.push(id);
                    start = end;
                }
                None => {
                    out.push(UNK);
                    start += 1;
                }
            }
        }
    }

    /// Joins pieces back into text; continuation pieces attach to the
    /// previous piece. Specials are rendered verbatim.
    pub fn detokenize(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        for &id in ids {
            let piece = self.piece(id).unwrap_or(SPECIALS[UNK as usize]);
            match piece.strip_prefix(CONTINUATION) {
                Some(rest) if !out.is_empty() => out.push_str(rest),
                _ => {
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(piece);
                }
            }
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.pieces {
            w.write_all(p.as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let pieces = r.lines().collect::<std::io::Result<Vec<_>>>()?;
        Self::from_pieces(pieces)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).at(path)?;
        self.write_to(std::io::BufWriter::new(f)).at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).at(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strip(p: &str) -> &str {
        p.strip_prefix(CONTINUATION).unwrap_or(p)
    }

    #[test]
    fn merge_example() {
        let v = Vocabulary::build(&["aaab", "aaac"], 10).unwrap();
        assert_eq!(v.len(), 10);
        let surface: BTreeSet<&str> = v.pieces().iter().map(|p| strip(p)).collect();
        for p in ["a", "b", "c", "aa"] {
            assert!(surface.contains(p), "missing {p} in {:?}", v.pieces());
        }
        // (##a, ##a) and (a, ##a) both occur twice; the smaller pair merges first.
        assert_eq!(v.piece(8), Some("##aa"));
    }

    #[test]
    fn specials_fixed() {
        let v = Vocabulary::build(&["hello world"], 40).unwrap();
        for (i, s) in SPECIALS.iter().enumerate() {
            assert_eq!(v.piece(i as u32), Some(*s));
        }
    }

    #[test]
    fn build_errors() {
        let empty: [&str; 0] = [];
        assert!(Vocabulary::build(&empty, 300).is_err());
        assert!(Vocabulary::build(&["   "], 300).is_err());
        assert!(Vocabulary::build(&["abcdef"], 8).is_err());
    }

    #[test]
    fn longest_match_example() {
        let pieces = ["[CLS]", "[SEP]", "[PAD]", "[UNK]", "a", "aa", "##a", "##b", "aaab"];
        let v = Vocabulary::from_pieces(pieces.iter().map(|s| s.to_string()).collect()).unwrap();
        assert_eq!(v.tokenize("d", "aaab").token_ids, vec![v.id("aaab").unwrap()]);

        let pieces = ["[CLS]", "[SEP]", "[PAD]", "[UNK]", "a", "aa", "##a", "##b"];
        let v = Vocabulary::from_pieces(pieces.iter().map(|s| s.to_string()).collect()).unwrap();
        let ids = v.tokenize("d", "aaab").token_ids;
        let got: Vec<&str> = ids.iter().map(|&i| v.piece(i).unwrap()).collect();
        assert_eq!(got, ["aa", "##a", "##b"]);
        assert_eq!(v.tokenize("d", "axb").token_ids, vec![v.id("a").unwrap(), UNK, v.id("##b").unwrap()]);
        assert_eq!(v.tokenize("d", "").token_ids, vec![UNK]);
    }

    #[test]
    fn rejects_bad_piece_lists() {
        let dup = ["[CLS]", "[SEP]", "[PAD]", "[UNK]", "a", "a"];
        assert!(Vocabulary::from_pieces(dup.iter().map(|s| s.to_string()).collect()).is_err());
        let swapped = ["[SEP]", "[CLS]", "[PAD]", "[UNK]"];
        assert!(Vocabulary::from_pieces(swapped.iter().map(|s| s.to_string()).collect()).is_err());
    }

    #[test]
    fn file_round_trip_keeps_indices() {
        let v = Vocabulary::build(&["the cat sat on the mat", "a cat"], 60).unwrap();
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        let back = Vocabulary::read_from(buf.as_slice()).unwrap();
        assert_eq!(v, back);
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), v.len());
    }

    proptest! {
        #[test]
        fn detokenize_inverts_tokenize(words in proptest::collection::vec("[a-f]{1,8}", 1..12), size in 20usize..80) {
            let text = words.join(" ");
            let v = Vocabulary::build(&[text.as_str(), "abcdef fedcba"], size).unwrap();
            let seq = v.tokenize("d", &text);
            prop_assert!(seq.token_ids.iter().all(|&i| (i as usize) < v.len() && i != UNK));
            prop_assert_eq!(v.detokenize(&seq.token_ids), text);
        }

        #[test]
        fn build_is_deterministic(words in proptest::collection::vec("[a-d]{1,6}", 1..20)) {
            let a = Vocabulary::build(&words, 30).unwrap();
            let b = Vocabulary::build(&words, 30).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
