use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::{sample, sample_weighted};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson, Zipf};

use super::spec::{CorpusSpec, SignalPosition};
use crate::error::{Error, Result};
use crate::textprep::{Document, Split};

/// Fraction of a document that holds the planted signal.
pub const SIGNAL_REGION: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCorpus {
    pub documents: Vec<Document>,
    /// Label name to the words planted for it.
    pub signal_map: BTreeMap<String, BTreeSet<String>>,
}

impl GeneratedCorpus {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(move |d| d.split == split)
    }

    pub fn label_names(&self) -> Vec<String> {
        self.signal_map.keys().cloned().collect()
    }
}

pub(crate) fn label_name(i: usize) -> String {
    format!("code_{i:02}")
}

fn region_len(len: usize) -> usize {
    ((len as f64 * SIGNAL_REGION).ceil() as usize).max(1)
}

pub fn generate_corpus(spec: &CorpusSpec) -> Result<GeneratedCorpus> {
    spec.validate()?;
    let capacity = (spec.max_len as f64 * SIGNAL_REGION).floor() as usize;
    if spec.label_count * spec.signal_strength > capacity {
        return Err(Error::InfeasibleSpec(format!(
            "{} labels x {} signal words do not fit the signal region of a {}-word document",
            spec.label_count, spec.signal_strength, spec.max_len
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let headers: Vec<Vec<String>> = spec
        .paragraph_header_pool
        .iter()
        .map(|h| h.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>())
        .collect();
    if headers.iter().any(|h| h.is_empty() || h.len() > 6) {
        return Err(Error::InfeasibleSpec("paragraph headers must have 1 to 6 words".into()));
    }
    let mut taken: BTreeSet<String> = headers.iter().flatten().cloned().collect();
    let background = pseudo_words(&mut rng, spec.background_words, &mut taken);
    let signals = pseudo_words(&mut rng, spec.label_count, &mut taken);

    let sigma = (2.0 * (spec.mean_len / spec.median_len).ln()).sqrt();
    let lengths = LogNormal::new(spec.median_len.ln(), sigma)
        .map_err(|e| Error::InfeasibleSpec(format!("length distribution: {e}")))?;
    let label_counts = Poisson::new(spec.mean_labels_per_doc)
        .map_err(|e| Error::InfeasibleSpec(format!("label distribution: {e}")))?;
    let zipf = Zipf::new(spec.background_words as f64, spec.zipf_exponent)
        .map_err(|e| Error::InfeasibleSpec(format!("background distribution: {e}")))?;

    let splits = [
        (Split::Train, spec.n_train),
        (Split::Validation, spec.n_val),
        (Split::Test, spec.n_test),
    ];
    let mut documents = Vec::with_capacity(spec.n_train + spec.n_val + spec.n_test);
    for (split, n) in splits {
        for i in 0..n {
            let id = format!("{split}-{i:05}");
            let drawn: f64 = label_counts.sample(&mut rng);
            let n_labels = (drawn as usize).clamp(1, spec.label_count);
            // mildly skewed label frequencies, rarer codes at higher indices
            let mut labels: Vec<usize> =
                sample_weighted(&mut rng, spec.label_count, |j| 1.0 / ((j + 1) as f64).sqrt(), n_labels)
                    .map_err(|e| Error::InfeasibleSpec(format!("label sampling: {e}")))?
                    .into_vec();
            labels.sort_unstable();
            let len = (lengths.sample(&mut rng).round() as usize).clamp(spec.min_len, spec.max_len);
            let text = render_document(spec, &mut rng, &headers, &background, &signals, &zipf, &labels, len)
                .map_err(|m| Error::InfeasibleSpec(format!("document {id}: {m}")))?;
            documents.push(Document {
                id,
                raw_text: text,
                labels: labels.iter().map(|&j| label_name(j)).collect(),
                split,
            });
        }
    }
    let signal_map = signals
        .iter()
        .enumerate()
        .map(|(j, w)| (label_name(j), BTreeSet::from([w.clone()])))
        .collect();
    Ok(GeneratedCorpus { documents, signal_map })
}

/// Distinct lowercase consonant-vowel words not already in `taken`.
fn pseudo_words(rng: &mut ChaCha8Rng, n: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=4);
        let mut w = String::with_capacity(syllables * 2);
        for _ in 0..syllables {
            w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
            w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
        }
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Slot {
    Header,
    Body,
}

#[allow(clippy::too_many_arguments)]
fn render_document(
    spec: &CorpusSpec,
    rng: &mut ChaCha8Rng,
    headers: &[Vec<String>],
    background: &[String],
    signals: &[String],
    zipf: &Zipf<f64>,
    labels: &[usize],
    mut len: usize,
) -> std::result::Result<String, String> {
    let (front, back): (Vec<usize>, Vec<usize>) = match spec.signal_position {
        SignalPosition::Split => labels.iter().copied().partition(|&j| j % 2 == 0),
        SignalPosition::Back => (Vec::new(), labels.to_vec()),
        SignalPosition::Front | SignalPosition::Uniform => (labels.to_vec(), Vec::new()),
    };
    let need_front = front.len() * spec.signal_strength;
    let need_back = back.len() * spec.signal_strength;

    loop {
        if len > spec.max_len {
            return Err(format!("signal words do not fit within {} words", spec.max_len));
        }
        // paragraph layout: chosen headers keep pool order
        let mut k = (len / (spec.paragraph_len + 2)).clamp(1, headers.len());
        let chosen = loop {
            let mut idx = sample(rng, headers.len(), k).into_vec();
            idx.sort_unstable();
            let header_words: usize = idx.iter().map(|&h| headers[h].len()).sum();
            if header_words + k <= len || k == 1 {
                break idx;
            }
            k -= 1;
        };
        let header_words: usize = chosen.iter().map(|&h| headers[h].len()).sum();
        if header_words + k > len {
            len = header_words + k;
        }
        let body_total = len - header_words;
        let mut cuts = sample(rng, body_total - 1, k - 1)
            .into_iter()
            .map(|c| c + 1)
            .collect::<Vec<_>>();
        cuts.sort_unstable();
        cuts.push(body_total);
        let mut sizes = Vec::with_capacity(k);
        let mut prev = 0;
        for c in cuts {
            sizes.push(c - prev);
            prev = c;
        }

        let mut slots = Vec::with_capacity(len);
        for (&h, &size) in chosen.iter().zip(&sizes) {
            slots.extend(std::iter::repeat_n(Slot::Header, headers[h].len()));
            slots.extend(std::iter::repeat_n(Slot::Body, size));
        }

        let r = region_len(len);
        let front_region = match spec.signal_position {
            SignalPosition::Uniform => {
                let start = rng.random_range(0..=len - r);
                start..start + r
            }
            _ => 0..r,
        };
        let back_region = len - r..len;
        let free = |range: std::ops::Range<usize>| -> Vec<usize> {
            range.filter(|&p| matches!(slots[p], Slot::Body)).collect()
        };
        let free_front = free(front_region);
        let free_back = free(back_region);
        let overlap = spec.signal_position == SignalPosition::Split && 2 * r > len;
        if free_front.len() < need_front || free_back.len() < need_back || overlap {
            len += (len / 20).max(1);
            continue;
        }

        let mut words: Vec<Option<&str>> = vec![None; len];
        for (group, pool) in [(&front, &free_front), (&back, &free_back)] {
            let picks = sample(rng, pool.len(), group.len() * spec.signal_strength).into_vec();
            let mut picks = picks.into_iter();
            for &j in group.iter() {
                for _ in 0..spec.signal_strength {
                    let p = pool[picks.next().expect("sampled enough positions")];
                    words[p] = Some(&signals[j]);
                }
            }
        }

        let mut text = String::new();
        let mut pos = 0;
        for (&h, &size) in chosen.iter().zip(&sizes) {
            if !text.is_empty() {
                text.push('\n');
            }
            let header = &headers[h];
            for (i, w) in header.iter().enumerate() {
                if i == 0 {
                    let mut c = w.chars();
                    let first = c.next().expect("non-empty header word");
                    text.extend(first.to_uppercase());
                    text.push_str(c.as_str());
                } else {
                    text.push(' ');
                    text.push_str(w);
                }
            }
            text.push(':');
            pos += header.len();
            for _ in 0..size {
                let w = match words[pos] {
                    Some(w) => w,
                    None => {
                        let rank: f64 = zipf.sample(rng);
                        &background[rank as usize - 1]
                    }
                };
                text.push(' ');
                text.push_str(w);
                pos += 1;
            }
        }
        return Ok(text);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(position: SignalPosition) -> CorpusSpec {
        let mut s = CorpusSpec::default().with_position(position);
        s.n_train = 60;
        s.n_val = 15;
        s.n_test = 15;
        s
    }

    fn signal_positions(corpus: &GeneratedCorpus, doc: &Document) -> Vec<usize> {
        let signal_words: BTreeSet<&str> = corpus.signal_map.values().flatten().map(String::as_str).collect();
        doc.raw_text
            .split_whitespace()
            .enumerate()
            .filter(|(_, w)| signal_words.contains(w))
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn deterministic() {
        let s = small(SignalPosition::Front);
        assert_eq!(generate_corpus(&s).unwrap(), generate_corpus(&s).unwrap());
        let other = generate_corpus(&s.clone().with_seed(7)).unwrap();
        assert_ne!(generate_corpus(&s).unwrap(), other);
    }

    #[test]
    fn front_and_back_regions() {
        for position in [SignalPosition::Front, SignalPosition::Back] {
            let c = generate_corpus(&small(position)).unwrap();
            for d in &c.documents {
                let n = d.raw_text.split_whitespace().count();
                let r = region_len(n);
                let pos = signal_positions(&c, d);
                assert_eq!(pos.len(), d.labels.len());
                for p in pos {
                    match position {
                        SignalPosition::Front => assert!(p < r),
                        _ => assert!(p >= n - r),
                    }
                }
            }
        }
    }

    #[test]
    fn split_separates_label_parity() {
        let c = generate_corpus(&small(SignalPosition::Split)).unwrap();
        let word_label: BTreeMap<&str, usize> = c
            .signal_map
            .iter()
            .enumerate()
            .map(|(j, (_, ws))| (ws.iter().next().unwrap().as_str(), j))
            .collect();
        for d in &c.documents {
            let words: Vec<&str> = d.raw_text.split_whitespace().collect();
            let r = region_len(words.len());
            for (p, w) in words.iter().enumerate() {
                if let Some(&j) = word_label.get(w) {
                    if j % 2 == 0 {
                        assert!(p < r);
                    } else {
                        assert!(p >= words.len() - r);
                    }
                }
            }
        }
    }

    #[test]
    fn labels_and_paragraphs() {
        let c = generate_corpus(&small(SignalPosition::Uniform)).unwrap();
        for d in &c.documents {
            assert!(!d.labels.is_empty());
            assert!(d.raw_text.lines().all(|l| l.contains(':')));
        }
        assert_eq!(c.label_names().len(), 50);
        assert_eq!(c.split(Split::Validation).count(), 15);
    }

    #[test]
    fn infeasible() {
        let mut s = small(SignalPosition::Front);
        s.max_len = 300;
        s.signal_strength = 2;
        assert!(matches!(generate_corpus(&s), Err(Error::InfeasibleSpec(_))));
    }
}
