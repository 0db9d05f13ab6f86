//! One function per command-line stage. A prepared directory holds the split
//! files, `vocab.txt`, `prepare.json` and one `chunks-<strategy>.jsonl` per
//! prepared strategy, and is itself a valid dataset directory.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::assemble::{assemble_inputs, slots_for};
use super::data::{load_documents, save_splits};
use super::plan::{EncoderShape, FineTunePlan};
use super::prepare::PreparedCorpus;
use super::runner::{content_key, encode_chunk_sets, render_curve, score};
use crate::datagen::corpus_stats;
use crate::decoder::{train_decoder, Architecture, Decoder, DecoderConfig, DecoderInput, Size, TrainConfig, TrainHistory};
use crate::encoder::{
    export_encodings, finetune_encoder, import_encodings, label_prior, Encoder, EncoderConfig, EncodingSet,
    FineTuneConfig, FineTuneResult, TrainExample,
};
use crate::error::{Error, IoContext, Result};
use crate::metrics::{reference, MetricsReport};
use crate::textprep::{Chunk, ChunkSet, Split, Strategy, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareInfo {
    pub key: String,
    pub vocab_size: usize,
    pub paragraphs: usize,
    pub max_len: usize,
    pub strategies: Vec<Strategy>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub documents: usize,
    pub vocab_len: usize,
    pub vocab_reused: bool,
    pub paragraph_names: usize,
    pub chunks: BTreeMap<Strategy, usize>,
}

pub fn chunk_file(dir: &Path, strategy: Strategy) -> PathBuf {
    dir.join(format!("chunks-{strategy}.jsonl"))
}

#[derive(Serialize, Deserialize)]
struct ChunkRecord {
    doc_id: String,
    position_key: String,
    max_len: usize,
    content: Vec<u32>,
}

pub fn write_chunk_file(sets: &[ChunkSet], path: &Path) -> Result<usize> {
    let f = std::fs::File::create(path).at(path)?;
    let mut w = BufWriter::new(f);
    let mut n = 0;
    for set in sets {
        for c in &set.chunks {
            let rec = ChunkRecord {
                doc_id: set.doc_id.clone(),
                position_key: c.position_key.clone(),
                max_len: c.token_ids.len(),
                content: c.content().to_vec(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n").at(path)?;
            n += 1;
        }
    }
    w.flush().at(path)?;
    Ok(n)
}

/// Reads chunks back, grouped per document in file order.
pub fn read_chunk_file(path: &Path, strategy: Strategy) -> Result<Vec<ChunkSet>> {
    let f = std::fs::File::open(path).at(path)?;
    let mut sets: Vec<ChunkSet> = Vec::new();
    let mut at: HashMap<String, usize> = HashMap::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Dataset {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let rec: ChunkRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if rec.content.len() + 2 > rec.max_len {
            return Err(bad("chunk longer than its max_len".into()));
        }
        let chunk = Chunk::new(&rec.content, rec.max_len, rec.position_key);
        let slot = *at.entry(rec.doc_id.clone()).or_insert_with(|| {
            sets.push(ChunkSet {
                doc_id: rec.doc_id.clone(),
                strategy,
                chunks: Vec::new(),
            });
            sets.len() - 1
        });
        sets[slot].chunks.push(chunk);
    }
    Ok(sets)
}

/// Tokenizes a dataset and writes chunk files for each strategy. An existing
/// vocabulary in `out` built from the same documents and size is reused.
pub fn prepare_dataset(
    dataset: &Path,
    out: &Path,
    strategies: &[Strategy],
    max_len: usize,
    vocab_size: usize,
    paragraphs: usize,
) -> Result<PrepareSummary> {
    let docs = load_documents(dataset)?;
    let key = content_key(&(&docs, vocab_size))?;
    let info_path = out.join("prepare.json");
    let vocab_path = out.join("vocab.txt");
    let previous: Option<PrepareInfo> = std::fs::read(&info_path)
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok());
    let vocab_reused = previous.as_ref().is_some_and(|p| p.key == key) && vocab_path.exists();

    save_splits(&docs, out)?;
    let prepared = if vocab_reused {
        PreparedCorpus::with_vocab(docs, Vocabulary::load(&vocab_path)?, paragraphs)?
    } else {
        let p = PreparedCorpus::new(docs, vocab_size, paragraphs)?;
        p.vocab.save(&vocab_path)?;
        p
    };
    let stats = corpus_stats(&prepared.documents, &prepared.vocab);
    let stats_path = out.join("stats.json");
    std::fs::write(&stats_path, serde_json::to_vec_pretty(&stats)?).at(&stats_path)?;
    if let Some(index) = &prepared.paragraph_index {
        let p = out.join("paragraphs.json");
        std::fs::write(&p, serde_json::to_vec_pretty(index)?).at(&p)?;
    }
    let mut chunks = BTreeMap::new();
    for &s in strategies {
        let sets = prepared.chunk_sets(s, max_len)?;
        chunks.insert(s, write_chunk_file(&sets, &chunk_file(out, s))?);
    }
    let info = PrepareInfo {
        key,
        vocab_size,
        paragraphs,
        max_len,
        strategies: strategies.to_vec(),
    };
    std::fs::write(&info_path, serde_json::to_vec_pretty(&info)?).at(&info_path)?;
    Ok(PrepareSummary {
        documents: prepared.documents.len(),
        vocab_len: prepared.vocab.len(),
        vocab_reused,
        paragraph_names: prepared.paragraph_index.as_ref().map_or(0, |i| i.len()),
        chunks,
    })
}

/// Loads a directory written by [`prepare_dataset`].
pub fn load_prepared(dir: &Path) -> Result<(PreparedCorpus, PrepareInfo)> {
    let info_path = dir.join("prepare.json");
    let info: PrepareInfo = serde_json::from_slice(&std::fs::read(&info_path).at(&info_path)?)?;
    let docs = load_documents(dir)?;
    let vocab = Vocabulary::load(&dir.join("vocab.txt"))?;
    Ok((PreparedCorpus::with_vocab(docs, vocab, info.paragraphs)?, info))
}

fn prepared_chunks(dir: &Path, prepared: &PreparedCorpus, strategy: Strategy) -> Result<Vec<ChunkSet>> {
    let path = chunk_file(dir, strategy);
    if !path.exists() {
        return Err(Error::Input(format!(
            "{} has no {strategy} chunks; run prepare with that strategy",
            dir.display()
        )));
    }
    let sets = read_chunk_file(&path, strategy)?;
    let known: HashMap<&str, ()> = prepared.documents.iter().map(|d| (d.id.as_str(), ())).collect();
    if let Some(s) = sets.iter().find(|s| !known.contains_key(s.doc_id.as_str())) {
        return Err(Error::Input(format!("chunk file names unknown document `{}`", s.doc_id)));
    }
    Ok(sets)
}

/// Chunk-level training examples of one split.
pub fn chunk_examples<'a>(prepared: &'a PreparedCorpus, sets: &'a [ChunkSet], split: Split) -> Vec<TrainExample<'a>> {
    let pos: HashMap<&str, usize> = prepared
        .documents
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();
    sets.iter()
        .filter_map(|s| pos.get(s.doc_id.as_str()).map(|&i| (s, i)))
        .filter(|&(_, i)| prepared.documents[i].split == split)
        .flat_map(|(s, i)| {
            let target = prepared.targets[i].as_slice();
            s.chunks.iter().map(move |chunk| TrainExample { chunk, target })
        })
        .collect()
}

/// Fine-tunes a fresh encoder, with its head bias at the label prior,
/// and writes `encoder.nnc` and `loss.csv` into `out`.
pub fn train_encoder_stage(
    dir: &Path,
    strategy: Strategy,
    shape: &EncoderShape,
    finetune: &FineTunePlan,
    seed: u64,
    out: &Path,
) -> Result<FineTuneResult> {
    let (prepared, info) = load_prepared(dir)?;
    let sets = prepared_chunks(dir, &prepared, strategy)?;
    let train = chunk_examples(&prepared, &sets, Split::Train);
    let val = chunk_examples(&prepared, &sets, Split::Validation);
    let config = EncoderConfig {
        vocab_size: prepared.vocab.len(),
        max_len: info.max_len,
        layers: shape.layers,
        dim: shape.dim,
        heads: shape.heads,
        ffn_dim: shape.ffn_dim,
        label_count: prepared.labels.len(),
        dropout: shape.dropout,
    };
    let mut model = Encoder::new(config, seed)?;
    let targets: Vec<&[f64]> = train.iter().map(|e| e.target).collect();
    model.set_head_bias(&label_prior(&targets))?;
    let cfg = FineTuneConfig {
        batch_size: finetune.batch_size,
        learning_rate: finetune.learning_rate,
        epochs: finetune.max_epochs(),
        seed,
    };
    std::fs::create_dir_all(out).at(out)?;
    let result = finetune_encoder(&mut model, &train, &val, &cfg, |e, m| {
        if finetune.epochs.contains(&e) && e != cfg.epochs {
            m.save(&out.join(format!("encoder-epoch-{e}.nnc")))?;
        }
        Ok(())
    })?;
    model.save(&out.join("encoder.nnc"))?;
    let loss = out.join("loss.csv");
    std::fs::write(&loss, render_curve(&result.curve)).at(&loss)?;
    Ok(result)
}

/// Encodes every prepared chunk of `strategy` into an ENC1 file.
pub fn encode_stage(encoder: &Path, dir: &Path, strategy: Strategy, out: &Path) -> Result<EncodingSet> {
    let (prepared, _) = load_prepared(dir)?;
    let model = Encoder::load(encoder)?;
    let sets = prepared_chunks(dir, &prepared, strategy)?;
    let set = encode_chunk_sets(&model, &sets)?;
    export_encodings(&set, out)?;
    Ok(set)
}

fn load_sets(paths: &[PathBuf]) -> Result<Vec<EncodingSet>> {
    if paths.is_empty() {
        return Err(Error::Config("at least one encoding file is required".into()));
    }
    let sets: Vec<EncodingSet> = paths.iter().map(|p| import_encodings(p)).collect::<Result<_>>()?;
    if let Some(s) = sets.iter().find(|s| s.dim() != sets[0].dim()) {
        return Err(Error::DimMismatch {
            expected: sets[0].dim(),
            got: s.dim(),
        });
    }
    Ok(sets)
}

fn split_inputs(
    prepared: &PreparedCorpus,
    sets: &[&EncodingSet],
    slots: &crate::decoder::InputSlots,
    split: Split,
) -> Result<(Vec<DecoderInput>, Vec<Vec<f64>>)> {
    let idx = prepared.indices(split);
    let ids: Vec<&str> = idx.iter().map(|&i| prepared.documents[i].id.as_str()).collect();
    let inputs = assemble_inputs(&ids, sets, slots)?;
    Ok((inputs, idx.iter().map(|&i| prepared.targets[i].clone()).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderSettings {
    pub architecture: Architecture,
    pub size: Size,
    pub hidden: (usize, usize),
    pub heads: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

/// Trains a decoder on the train split, early-stopping on validation, and
/// writes `decoder.nnc` and `history.json` into `out`.
pub fn train_decoder_stage(
    dir: &Path,
    encodings: &[PathBuf],
    settings: &DecoderSettings,
    out: &Path,
) -> Result<(Decoder, TrainHistory)> {
    let (prepared, _) = load_prepared(dir)?;
    let owned = load_sets(encodings)?;
    let sets: Vec<&EncodingSet> = owned.iter().collect();
    let slots = slots_for(&sets)?;
    let (tx, ty) = split_inputs(&prepared, &sets, &slots, Split::Train)?;
    let (vx, vy) = split_inputs(&prepared, &sets, &slots, Split::Validation)?;
    let mut config = DecoderConfig::new(
        settings.architecture,
        settings.size,
        slots,
        sets[0].dim(),
        prepared.labels.len(),
    );
    config.hidden = settings.hidden;
    config.heads = settings.heads;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut model = Decoder::build(config, &mut rng)?;
    let mut train = settings.train.clone();
    train.seed = settings.seed;
    let history = train_decoder(&mut model, &tx, &ty, &vx, &vy, &train)?;
    std::fs::create_dir_all(out).at(out)?;
    model.save(&out.join("decoder.nnc"))?;
    let h = out.join("history.json");
    std::fs::write(&h, serde_json::to_vec_pretty(&history)?).at(&h)?;
    Ok((model, history))
}

/// Scores a trained decoder on one split.
pub fn evaluate_stage(decoder: &Path, dir: &Path, encodings: &[PathBuf], split: Split) -> Result<MetricsReport> {
    let (prepared, _) = load_prepared(dir)?;
    let model = Decoder::load(decoder)?;
    let owned = load_sets(encodings)?;
    let sets: Vec<&EncodingSet> = owned.iter().collect();
    let slots = slots_for(&sets)?;
    if slots != model.config().input_slots {
        return Err(Error::Input("encoding files do not match the decoder's input slots".into()));
    }
    let (x, y) = split_inputs(&prepared, &sets, &slots, split)?;
    score(&model, &x, &y, prepared.labels.names())
}

/// Plain-text rendering of a report, with a published row alongside when
/// one is named.
pub fn render_metrics(report: &MetricsReport, published: Option<(&str, &str)>) -> Result<String> {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:>9} {:>9}", "", "macro", "micro");
    let _ = writeln!(
        s,
        "{:<12} {:>9.2} {:>9.2}",
        "this run",
        100.0 * report.macro_auc,
        100.0 * report.micro_auc
    );
    if let Some((table, row)) = published {
        let r = reference(table, row)
            .ok_or_else(|| Error::Config(format!("no published row `{row}` in table `{table}`")))?;
        let micro = r.micro_auc.map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
        let _ = writeln!(s, "{:<12} {:>9.2} {:>9}  ({table}: {row}, full scale)", "published", r.macro_auc, micro);
    }
    for e in &report.excluded {
        let _ = writeln!(s, "excluded {}: {}", e.label, e.reason);
    }
    Ok(s)
}
