use std::collections::BTreeSet;

use chunkcode::datagen::{generate_corpus, CorpusSpec, SignalPosition};
use chunkcode::labels::LabelSpace;
use chunkcode::metrics::{evaluate, EvalBatch};
use chunkcode::textprep::Split;

#[test]
fn default_spec_matches_target_statistics() {
    let spec = CorpusSpec::default();
    let corpus = generate_corpus(&spec).unwrap();
    let docs = &corpus.documents;
    assert_eq!(docs.len(), 807 + 157 + 173);

    let lens: Vec<usize> = docs.iter().map(|d| d.raw_text.split_whitespace().count()).collect();
    let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
    assert!((mean - spec.mean_len).abs() / spec.mean_len < 0.10, "mean length {mean}");
    assert!(lens.iter().all(|&l| l >= spec.min_len && l <= spec.max_len));

    let labels_mean = docs.iter().map(|d| d.labels.len()).sum::<usize>() as f64 / docs.len() as f64;
    assert!((labels_mean - 13.15).abs() / 13.15 < 0.15, "labels per doc {labels_mean}");
}

#[test]
fn splits_disjoint_and_label_space_shared() {
    let corpus = generate_corpus(&CorpusSpec::default().with_position(SignalPosition::Split)).unwrap();
    let ids: BTreeSet<&str> = corpus.documents.iter().map(|d| d.id.as_str()).collect();
    assert_eq!(ids.len(), corpus.documents.len());
    let space = LabelSpace::from_documents(&corpus.documents).unwrap();
    assert_eq!(space.len(), 50);
    for split in Split::ALL {
        assert!(corpus.split(split).count() > 0);
    }
}

#[test]
fn signal_oracle_is_perfect() {
    for position in [
        SignalPosition::Front,
        SignalPosition::Back,
        SignalPosition::Split,
        SignalPosition::Uniform,
    ] {
        let mut spec = CorpusSpec::default().with_position(position).with_seed(3);
        spec.n_train = 120;
        spec.n_val = 30;
        spec.n_test = 30;
        let corpus = generate_corpus(&spec).unwrap();
        let space = LabelSpace::from_documents(&corpus.documents).unwrap();
        let mut scores = Vec::new();
        let mut targets = Vec::new();
        for d in &corpus.documents {
            let words: BTreeSet<&str> = d.raw_text.split_whitespace().collect();
            scores.push(
                space
                    .names()
                    .iter()
                    .map(|l| {
                        let planted = corpus.signal_map[l].iter().any(|w| words.contains(w.as_str()));
                        if planted { 1.0 } else { 0.0 }
                    })
                    .collect(),
            );
            targets.push(space.multi_hot(d).unwrap().iter().map(|&v| v == 1.0).collect());
        }
        let report = evaluate(&EvalBatch::new(scores, targets, space.names().to_vec()).unwrap()).unwrap();
        assert_eq!(report.macro_auc, 1.0, "{position}");
        assert_eq!(report.micro_auc, 1.0, "{position}");
    }
}
