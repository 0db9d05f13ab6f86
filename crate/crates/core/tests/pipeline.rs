use std::path::Path;

use chunkcode::datagen::{save_dataset, CorpusSpec};
use chunkcode::pipeline::{
    assemble_inputs, load_prepared, prepare_dataset, read_chunk_file, chunk_file, slots_for, ExperimentPlan,
    RunManifest, Runner,
};
use chunkcode::decoder::Architecture;
use chunkcode::encoder::{Encoding, EncodingSet};
use chunkcode::textprep::{Document, Split, Strategy};
use chunkcode::Error;

fn doc(id: &str, text: String, labels: &[&str], split: Split) -> Document {
    Document {
        id: id.into(),
        raw_text: text,
        labels: labels.iter().map(|s| s.to_string()).collect(),
        split,
    }
}

#[test]
fn all_strategy_on_a_1200_token_document() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.jsonl");
    let docs = vec![
        doc("long", "alpha ".repeat(1200), &["a"], Split::Train),
        doc("short", "alpha beta".into(), &["a", "b"], Split::Train),
    ];
    save_dataset(&docs, &data).unwrap();
    let out = dir.path().join("prep");
    let s = prepare_dataset(&data, &out, &[Strategy::All, Strategy::Front], 512, 300, 200).unwrap();
    let (prepared, _) = load_prepared(&out).unwrap();
    assert_eq!(prepared.sequences[0].len(), 1200);
    let sets = read_chunk_file(&chunk_file(&out, Strategy::All), Strategy::All).unwrap();
    assert_eq!(sets[0].doc_id, "long");
    assert_eq!(sets[0].chunks.len(), 3);
    let lens: Vec<usize> = sets[0].chunks.iter().map(|c| c.true_len - 2).collect();
    assert_eq!(lens, [510, 510, 180]);
    assert_eq!(s.chunks[&Strategy::All], 4);
    assert_eq!(s.chunks[&Strategy::Front], 2);
}

fn write_tiny_corpus(dir: &Path) -> std::path::PathBuf {
    let spec = tiny_spec();
    let corpus = chunkcode::datagen::generate_corpus(&spec).unwrap();
    let p = dir.join("data");
    chunkcode::pipeline::save_splits(&corpus.documents, &p).unwrap();
    p
}

fn tiny_spec() -> CorpusSpec {
    CorpusSpec {
        n_train: 60,
        n_val: 20,
        n_test: 30,
        mean_len: 120.0,
        median_len: 110.0,
        min_len: 30,
        max_len: 600,
        ..CorpusSpec::default()
    }
}

#[test]
fn prepare_reuses_its_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_tiny_corpus(dir.path());
    let out = dir.path().join("prep");
    let first = prepare_dataset(&data, &out, &[Strategy::Paragraph], 32, 2000, 200).unwrap();
    let vocab = std::fs::read(out.join("vocab.txt")).unwrap();
    let second = prepare_dataset(&out, &out, &[Strategy::Paragraph], 32, 2000, 200).unwrap();
    assert!(!first.vocab_reused);
    assert!(second.vocab_reused);
    assert_eq!(std::fs::read(out.join("vocab.txt")).unwrap(), vocab);
    assert!(first.paragraph_names > 0 && first.paragraph_names <= 200);

    let few = prepare_dataset(&data, &dir.path().join("few"), &[Strategy::Paragraph], 32, 2000, 3).unwrap();
    assert_eq!(few.paragraph_names, 3);
}

#[test]
fn missing_aligned_encoding_is_an_error() {
    let mut front = EncodingSet::new(2);
    let mut back = EncodingSet::new(2);
    for (set, s) in [(&mut front, Strategy::Front), (&mut back, Strategy::Back)] {
        set.push(Encoding {
            doc_id: "a".into(),
            strategy: s,
            position_key: "0".into(),
            vector: vec![1.0, 2.0],
        })
        .unwrap();
    }
    front
        .push(Encoding {
            doc_id: "b".into(),
            strategy: Strategy::Front,
            position_key: "0".into(),
            vector: vec![3.0, 4.0],
        })
        .unwrap();
    let sets = [&front, &back];
    let slots = slots_for(&sets).unwrap();
    assert_eq!(assemble_inputs(&["a"], &sets, &slots).unwrap()[0].vectors, [vec![1.0, 2.0], vec![1.0, 2.0]]);
    assert!(matches!(assemble_inputs(&["a", "b"], &sets, &slots), Err(Error::Input(_))));
}

fn tiny_plan() -> ExperimentPlan {
    let spec = serde_json::to_value(tiny_spec()).unwrap();
    let plan = serde_json::json!({
        "seed": 5,
        "corpora": {"tiny": {"spec": spec}},
        "max_len": 32,
        "vocab_size": 2000,
        "encoder": {"layers": 1, "dim": 16, "heads": 2, "ffn_dim": 32},
        "finetune": {"epochs": [0, 1]},
        "train": {"max_epochs": 3, "patience": 2, "base_lr": 0.001},
        "decoder_hidden": [16, 12],
        "decoder_heads": 2,
        "runs": [
            {"name": "grid", "corpus": "tiny", "inputs": ["front", "back", "mixed"],
             "architectures": ["flat", "parallel", "transformer"], "sizes": ["base", "large", "xlarge"]},
            {"name": "raw", "corpus": "tiny", "inputs": ["front"], "encoder_epochs": 0,
             "architectures": ["linear"], "reference": {"table": "finetune", "row": "None"}},
            {"name": "all", "corpus": "tiny", "inputs": ["all"], "architectures": ["transformer"]},
            {"name": "par", "corpus": "tiny", "inputs": ["paragraph"], "architectures": ["transformer"]}
        ]
    });
    ExperimentPlan::from_json(&plan.to_string()).unwrap()
}

fn metrics_files(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(out.join("metrics"))
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn matrix_runs_caches_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let first = Runner::new(tiny_plan(), &out).unwrap().run().unwrap();
    assert_eq!(first.cells.len(), 12);
    let files = metrics_files(&out);
    assert_eq!(files.len(), 12);
    assert_eq!(files.iter().filter(|(n, _)| n.starts_with("grid-")).count(), 9);
    assert_eq!(first.curves.len(), 5);
    assert!(first.curves.iter().all(|c| c.val_loss.len() == 2));
    let manifest = RunManifest::load(&out.join("manifest.json")).unwrap();
    manifest.verify(&out).unwrap();
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("55.76 / 69.55"));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);

    // lose one decoder and tamper with one encoding: both are rebuilt
    let dec = manifest
        .artifacts
        .keys()
        .find(|k| k.starts_with("decoders/grid-parallel-large") && k.ends_with(".nnc"))
        .unwrap()
        .clone();
    std::fs::remove_file(out.join(&dec)).unwrap();
    let enc = manifest.artifacts.keys().find(|k| k.ends_with(".enc1")).unwrap().clone();
    std::fs::write(out.join(&enc), b"junk").unwrap();
    let again = Runner::new(tiny_plan(), &out).unwrap().run().unwrap();
    assert_eq!(again.cells, first.cells);
    assert_eq!(metrics_files(&out), files);
    let m2 = RunManifest::load(&out.join("manifest.json")).unwrap();
    m2.verify(&out).unwrap();
    assert_eq!(m2.artifacts, manifest.artifacts);
    assert!(matches!(first.cell("raw", Architecture::Linear, chunkcode::decoder::Size::Base), Some(_)));
}

#[test]
fn matrix_is_deterministic_across_directories() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = tiny_plan();
    plan.runs.truncate(2);
    plan.runs[0].architectures = vec![Architecture::Parallel];
    plan.runs[0].sizes = vec![chunkcode::decoder::Size::Base];
    Runner::new(plan.clone(), dir.path().join("a")).unwrap().run().unwrap();
    Runner::new(plan, dir.path().join("b")).unwrap().run().unwrap();
    let a = metrics_files(&dir.path().join("a"));
    assert_eq!(a.len(), 2);
    assert_eq!(a, metrics_files(&dir.path().join("b")));
}

#[test]
fn plan_validation() {
    let base = serde_json::to_value(tiny_plan()).unwrap();
    let with = |f: &dyn Fn(&mut serde_json::Value)| {
        let mut v = base.clone();
        f(&mut v);
        ExperimentPlan::from_json(&v.to_string())
    };
    assert!(with(&|_| {}).is_ok());
    assert!(matches!(with(&|v| v["runs"][0]["corpus"] = "nope".into()), Err(Error::Config(_))));
    assert!(matches!(with(&|v| v["runs"][1]["encoder_epochs"] = 4.into()), Err(Error::Config(_))));
    assert!(matches!(with(&|v| v["runs"][1]["name"] = "grid".into()), Err(Error::Config(_))));
    assert!(matches!(
        with(&|v| v["runs"][1]["reference"]["row"] = "missing".into()),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        with(&|v| v["strategies"] = serde_json::json!(["front"])),
        Err(Error::Config(_))
    ));
    assert!(with(&|v| v["runs"][0]["inputs"] = serde_json::json!(["sideways"])).is_err());
}
