use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::textprep::{normalize, Document, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub mean_tokens: f64,
    pub median_tokens: f64,
    pub mean_labels_per_doc: f64,
    pub label_frequency: BTreeMap<String, usize>,
    /// Full-scale reference values for side-by-side display.
    pub reference_mean_tokens: f64,
    pub reference_median_tokens: f64,
}

/// Token-length and label statistics under `vocab`.
pub fn corpus_stats(docs: &[Document], vocab: &Vocabulary) -> CorpusStats {
    let mut lengths: Vec<usize> = docs
        .iter()
        .map(|d| vocab.tokenize(&d.id, &normalize(&d.raw_text)).len())
        .collect();
    lengths.sort_unstable();
    let n = lengths.len();
    let median = match n {
        0 => 0.0,
        _ if n % 2 == 1 => lengths[n / 2] as f64,
        _ => (lengths[n / 2 - 1] + lengths[n / 2]) as f64 / 2.0,
    };
    let mean = |total: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
    let mut label_frequency = BTreeMap::new();
    for d in docs {
        for l in &d.labels {
            *label_frequency.entry(l.clone()).or_insert(0) += 1;
        }
    }
    CorpusStats {
        documents: n,
        min_tokens: lengths.first().copied().unwrap_or(0),
        max_tokens: lengths.last().copied().unwrap_or(0),
        mean_tokens: mean(lengths.iter().sum()),
        median_tokens: median,
        mean_labels_per_doc: mean(docs.iter().map(|d| d.labels.len()).sum()),
        label_frequency,
        reference_mean_tokens: 2740.0,
        reference_median_tokens: 2500.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::Split;

    #[test]
    fn single_document() {
        let vocab = Vocabulary::build(&["a"], 10).unwrap();
        let doc = Document {
            id: "d".into(),
            raw_text: vec!["a"; 100].join(" "),
            labels: vec!["x".into()],
            split: Split::Train,
        };
        let s = corpus_stats(&[doc], &vocab);
        assert_eq!((s.min_tokens, s.max_tokens), (100, 100));
        assert_eq!((s.mean_tokens, s.median_tokens), (100.0, 100.0));
        assert_eq!(s.label_frequency["x"], 1);
    }
}
