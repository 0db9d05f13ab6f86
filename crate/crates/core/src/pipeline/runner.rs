use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::assemble::{assemble_inputs, slots_for};
use super::data::{load_documents, save_splits};
use super::plan::{CorpusSource, ExperimentPlan, RunSpec};
use super::prepare::PreparedCorpus;
use crate::datagen::{corpus_stats, generate_corpus};
use crate::decoder::{train_decoder, Architecture, Decoder, DecoderConfig, Size};
use crate::encoder::{
    export_encodings, finetune_encoder, import_encodings, label_prior, Encoder, EncoderConfig, Encoding, EncodingSet,
    FineTuneConfig, TrainExample,
};
use crate::error::{Error, IoContext, Result};
use crate::metrics::{evaluate, reference, EvalBatch, MetricsReport};
use crate::textprep::{ChunkSet, Split, Strategy, Vocabulary};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Short content key of any serialisable value.
pub fn content_key<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(value)?)[..16].to_string())
}

/// A seed for one named stage, derived from the plan seed.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub stage: String,
    pub sha256: String,
}

/// Every artifact a matrix run produced, with content hashes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub plan_hash: String,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    /// Paths relative to the output directory.
    pub artifacts: BTreeMap<String, ArtifactEntry>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path).at(path)?)?)
    }

    /// Checks that every listed artifact exists and matches its hash.
    pub fn verify(&self, root: &Path) -> Result<()> {
        for (rel, entry) in &self.artifacts {
            let p = root.join(rel);
            let bytes = std::fs::read(&p).at(&p)?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(Error::Input(format!("artifact {rel} does not match its recorded hash")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub run: String,
    pub corpus: String,
    pub inputs: Vec<Strategy>,
    pub encoder_epochs: usize,
    pub architecture: Architecture,
    pub size: Size,
    pub parameters: usize,
    pub macro_auc: f64,
    pub micro_auc: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub metrics_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub corpus: String,
    pub strategy: Strategy,
    pub val_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixResult {
    pub cells: Vec<CellResult>,
    pub curves: Vec<LossCurve>,
}

impl MatrixResult {
    pub fn cell(&self, run: &str, architecture: Architecture, size: Size) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.run == run && c.architecture == architecture && c.size == size)
    }

    pub fn curve(&self, corpus: &str, strategy: Strategy) -> Option<&LossCurve> {
        self.curves.iter().find(|c| c.corpus == corpus && c.strategy == strategy)
    }
}

struct EncoderArtifacts {
    dir: String,
    curve: Vec<f64>,
}

/// Executes an [`ExperimentPlan`] into an output directory, reusing any
/// artifact whose cache key and recorded hash still match.
pub struct Runner {
    plan: ExperimentPlan,
    out: PathBuf,
    manifest: RunManifest,
    pub verbose: bool,
    corpora: HashMap<String, (String, Rc<PreparedCorpus>)>,
    chunks: HashMap<(String, Strategy), Rc<Vec<ChunkSet>>>,
    encoders: HashMap<(String, Strategy), Rc<EncoderArtifacts>>,
    encodings: HashMap<(String, Strategy, usize), Rc<EncodingSet>>,
}

impl Runner {
    pub fn new(plan: ExperimentPlan, out: impl Into<PathBuf>) -> Result<Self> {
        plan.validate()?;
        let out = out.into();
        std::fs::create_dir_all(&out).at(&out)?;
        let plan_hash = sha256_hex(&serde_json::to_vec(&plan)?);
        let manifest_path = out.join("manifest.json");
        let mut manifest = if manifest_path.exists() {
            RunManifest::load(&manifest_path)?
        } else {
            RunManifest::default()
        };
        if manifest.plan_hash != plan_hash {
            manifest.plan_hash = plan_hash;
        }
        manifest.started_unix = now_unix();
        manifest.finished_unix = None;
        Ok(Self {
            plan,
            out,
            manifest,
            verbose: false,
            corpora: HashMap::new(),
            chunks: HashMap::new(),
            encoders: HashMap::new(),
            encodings: HashMap::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[chunkcode] {}", msg.as_ref());
        }
    }

    /// Whether `rel` exists and still matches its recorded hash.
    fn cached(&self, rel: &str) -> bool {
        let Some(entry) = self.manifest.artifacts.get(rel) else {
            return false;
        };
        std::fs::read(self.out.join(rel)).is_ok_and(|b| sha256_hex(&b) == entry.sha256)
    }

    fn record(&mut self, rel: &str, stage: &str) -> Result<()> {
        let p = self.out.join(rel);
        let sha256 = sha256_hex(&std::fs::read(&p).at(&p)?);
        self.manifest.artifacts.insert(
            rel.to_string(),
            ArtifactEntry {
                stage: stage.to_string(),
                sha256,
            },
        );
        self.save_manifest()
    }

    fn save_manifest(&self) -> Result<()> {
        let p = self.out.join("manifest.json");
        std::fs::write(&p, serde_json::to_vec_pretty(&self.manifest)?).at(&p)
    }

    fn write(&mut self, rel: &str, bytes: &[u8], stage: &str) -> Result<()> {
        let p = self.out.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).at(parent)?;
        }
        std::fs::write(&p, bytes).at(&p)?;
        self.record(rel, stage)
    }

    fn ensure_dir(&self, rel: &str) -> Result<PathBuf> {
        let p = self.out.join(rel);
        std::fs::create_dir_all(&p).at(&p)?;
        Ok(p)
    }

    fn corpus(&mut self, name: &str) -> Result<(String, Rc<PreparedCorpus>)> {
        if let Some(c) = self.corpora.get(name) {
            return Ok(c.clone());
        }
        let source = self.plan.corpora[name].clone();
        let source_key = match &source {
            CorpusSource::Generated { spec } => content_key(spec)?,
            CorpusSource::Dataset { dataset } => {
                let docs = load_documents(dataset)?;
                content_key(&docs)?
            }
        };
        let key = content_key(&(&source_key, self.plan.vocab_size, self.plan.paragraphs))?;
        let dir = format!("corpora/{name}-{key}");
        let split_rels: Vec<String> = Split::ALL.iter().map(|s| format!("{dir}/{s}.jsonl")).collect();
        let vocab_rel = format!("{dir}/vocab.txt");

        let prepared = if split_rels.iter().all(|r| self.cached(r)) && self.cached(&vocab_rel) {
            self.log(format!("corpus {name}: cached"));
            let docs = load_documents(&self.out.join(&dir))?;
            let vocab = Vocabulary::load(&self.out.join(&vocab_rel))?;
            PreparedCorpus::with_vocab(docs, vocab, self.plan.paragraphs)?
        } else {
            self.log(format!("corpus {name}: preparing"));
            let docs = match &source {
                CorpusSource::Generated { spec } => generate_corpus(spec)?.documents,
                CorpusSource::Dataset { dataset } => load_documents(dataset)?,
            };
            let abs = self.ensure_dir(&dir)?;
            save_splits(&docs, &abs)?;
            for r in &split_rels {
                self.record(r, "generate")?;
            }
            let prepared = PreparedCorpus::new(docs, self.plan.vocab_size, self.plan.paragraphs)?;
            prepared.vocab.save(&self.out.join(&vocab_rel))?;
            self.record(&vocab_rel, "prepare")?;
            let stats = corpus_stats(&prepared.documents, &prepared.vocab);
            self.write(&format!("{dir}/stats.json"), &serde_json::to_vec_pretty(&stats)?, "prepare")?;
            if let Some(index) = &prepared.paragraph_index {
                self.write(
                    &format!("{dir}/paragraphs.json"),
                    &serde_json::to_vec_pretty(index)?,
                    "prepare",
                )?;
            }
            prepared
        };
        let entry = (key, Rc::new(prepared));
        self.corpora.insert(name.to_string(), entry.clone());
        Ok(entry)
    }

    fn chunk_sets(&mut self, corpus: &str, strategy: Strategy) -> Result<Rc<Vec<ChunkSet>>> {
        let k = (corpus.to_string(), strategy);
        if let Some(c) = self.chunks.get(&k) {
            return Ok(c.clone());
        }
        let (_, prepared) = self.corpus(corpus)?;
        let sets = Rc::new(prepared.chunk_sets(strategy, self.plan.max_len)?);
        self.chunks.insert(k, sets.clone());
        Ok(sets)
    }

    fn encoder_config(&self, prepared: &PreparedCorpus) -> EncoderConfig {
        let s = &self.plan.encoder;
        EncoderConfig {
            vocab_size: prepared.vocab.len(),
            max_len: self.plan.max_len,
            layers: s.layers,
            dim: s.dim,
            heads: s.heads,
            ffn_dim: s.ffn_dim,
            label_count: prepared.labels.len(),
            dropout: s.dropout,
        }
    }

    fn encoder(&mut self, corpus: &str, strategy: Strategy) -> Result<Rc<EncoderArtifacts>> {
        let k = (corpus.to_string(), strategy);
        if let Some(e) = self.encoders.get(&k) {
            return Ok(e.clone());
        }
        let (corpus_key, prepared) = self.corpus(corpus)?;
        let config = self.encoder_config(&prepared);
        let seed = derive_seed(self.plan.seed, &["encoder", corpus, strategy.as_str()]);
        let key = content_key(&(&corpus_key, strategy, &config, &self.plan.finetune, seed))?;
        let dir = format!("encoders/{corpus}-{strategy}-{key}");
        let epochs = self.plan.finetune.epochs.clone();
        let ckpt = |e: usize| format!("{dir}/epoch-{e}.nnc");
        let curve_rel = format!("{dir}/loss.csv");
        let all_cached = epochs
            .iter()
            .all(|&e| self.cached(&ckpt(e)) && self.cached(&format!("{}.json", ckpt(e))))
            && self.cached(&curve_rel);

        let curve = if all_cached {
            self.log(format!("encoder {corpus}/{strategy}: cached"));
            parse_curve(&std::fs::read_to_string(self.out.join(&curve_rel)).at(self.out.join(&curve_rel))?)?
        } else {
            let sets = self.chunk_sets(corpus, strategy)?;
            let examples = |split: Split| -> Vec<TrainExample> {
                prepared
                    .indices(split)
                    .into_iter()
                    .flat_map(|i| {
                        let target = prepared.targets[i].as_slice();
                        sets[i].chunks.iter().map(move |chunk| TrainExample { chunk, target })
                    })
                    .collect()
            };
            let train = examples(Split::Train);
            let val = examples(Split::Validation);
            self.log(format!(
                "encoder {corpus}/{strategy}: fine-tuning on {} chunks ({} validation)",
                train.len(),
                val.len()
            ));
            let mut model = Encoder::new(config, seed)?;
            let targets: Vec<&[f64]> = train.iter().map(|e| e.target).collect();
            model.set_head_bias(&label_prior(&targets))?;
            let cfg = FineTuneConfig {
                batch_size: self.plan.finetune.batch_size,
                learning_rate: self.plan.finetune.learning_rate,
                epochs: self.plan.finetune.max_epochs(),
                seed: derive_seed(seed, &["finetune"]),
            };
            let abs = self.ensure_dir(&dir)?;
            let mut saved = Vec::new();
            let verbose = self.verbose;
            let result = finetune_encoder(&mut model, &train, &val, &cfg, |e, m| {
                if verbose {
                    eprintln!("[chunkcode] encoder {corpus}/{strategy}: epoch {e} done");
                }
                if epochs.contains(&e) {
                    m.save(&abs.join(format!("epoch-{e}.nnc")))?;
                    saved.push(e);
                }
                Ok(())
            })?;
            for e in saved {
                self.record(&ckpt(e), "train-encoder")?;
                self.record(&format!("{}.json", ckpt(e)), "train-encoder")?;
            }
            self.write(&curve_rel, render_curve(&result.curve).as_bytes(), "train-encoder")?;
            result.curve
        };
        let art = Rc::new(EncoderArtifacts { dir, curve });
        self.encoders.insert(k, art.clone());
        Ok(art)
    }

    fn encodings(&mut self, corpus: &str, strategy: Strategy, epochs: usize) -> Result<Rc<EncodingSet>> {
        let k = (corpus.to_string(), strategy, epochs);
        if let Some(e) = self.encodings.get(&k) {
            return Ok(e.clone());
        }
        let enc = self.encoder(corpus, strategy)?;
        let ckpt_rel = format!("{}/epoch-{epochs}.nnc", enc.dir);
        let ckpt_hash = self.manifest.artifacts[&ckpt_rel].sha256.clone();
        let key = content_key(&(&ckpt_hash, strategy, self.plan.max_len))?;
        let rel = format!("encodings/{corpus}-{strategy}-e{epochs}-{key}.enc1");
        let set = if self.cached(&rel) {
            import_encodings(&self.out.join(&rel))?
        } else {
            self.log(format!("encoding {corpus}/{strategy} with the {epochs}-epoch encoder"));
            let model = Encoder::load(&self.out.join(&ckpt_rel))?;
            let sets = self.chunk_sets(corpus, strategy)?;
            let set = encode_chunk_sets(&model, &sets)?;
            self.ensure_dir("encodings")?;
            export_encodings(&set, &self.out.join(&rel))?;
            self.record(&rel, "encode")?;
            set
        };
        let set = Rc::new(set);
        self.encodings.insert(k, set.clone());
        Ok(set)
    }

    fn run_cell(&mut self, run: &RunSpec, arch: Architecture, size: Size) -> Result<CellResult> {
        let (_, prepared) = self.corpus(&run.corpus)?;
        let epochs = self.plan.run_epochs(run);
        let sets: Vec<Rc<EncodingSet>> = run
            .inputs
            .iter()
            .map(|&s| self.encodings(&run.corpus, s, epochs))
            .collect::<Result<_>>()?;
        let refs: Vec<&EncodingSet> = sets.iter().map(|s| s.as_ref()).collect();
        let slots = slots_for(&refs)?;
        let split_inputs = |split: Split| -> Result<(Vec<crate::decoder::DecoderInput>, Vec<Vec<f64>>)> {
            let idx = prepared.indices(split);
            let ids: Vec<&str> = idx.iter().map(|&i| prepared.documents[i].id.as_str()).collect();
            let inputs = assemble_inputs(&ids, &refs, &slots)?;
            let targets = idx.iter().map(|&i| prepared.targets[i].clone()).collect();
            Ok((inputs, targets))
        };
        let (tx, ty) = split_inputs(Split::Train)?;
        let (vx, vy) = split_inputs(Split::Validation)?;

        let mut config = DecoderConfig::new(arch, size, slots.clone(), refs[0].dim(), prepared.labels.len());
        config.hidden = self.plan.decoder_hidden;
        config.heads = self.plan.decoder_heads;
        let cell = format!("{}-{arch}-{size}", run.name);
        let seed = derive_seed(self.plan.seed, &["decoder", &cell]);
        let input_hashes: Vec<String> = sets
            .iter()
            .map(|s| content_key(&s.entries().iter().map(|e| &e.vector).collect::<Vec<_>>()))
            .collect::<Result<_>>()?;
        let key = content_key(&(&config, &self.plan.train, seed, &input_hashes))?;
        let dir = format!("decoders/{cell}-{key}");
        let ckpt_rel = format!("{dir}/decoder.nnc");
        let history_rel = format!("{dir}/history.json");

        let (model, history) = if self.cached(&ckpt_rel) && self.cached(&format!("{ckpt_rel}.json")) && self.cached(&history_rel)
        {
            self.log(format!("decoder {cell}: cached"));
            let model = Decoder::load(&self.out.join(&ckpt_rel))?;
            let history: crate::decoder::TrainHistory =
                serde_json::from_slice(&std::fs::read(self.out.join(&history_rel)).at(self.out.join(&history_rel))?)?;
            (model, history)
        } else {
            self.log(format!("decoder {cell}: training"));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut model = Decoder::build(config, &mut rng)?;
            let mut train_cfg = self.plan.train.clone();
            train_cfg.seed = derive_seed(seed, &["train"]);
            let history = train_decoder(&mut model, &tx, &ty, &vx, &vy, &train_cfg)?;
            self.ensure_dir(&dir)?;
            model.save(&self.out.join(&ckpt_rel))?;
            self.record(&ckpt_rel, "train-decoder")?;
            self.record(&format!("{ckpt_rel}.json"), "train-decoder")?;
            self.write(&history_rel, &serde_json::to_vec_pretty(&history)?, "train-decoder")?;
            (model, history)
        };

        // test labels are read only from here on
        let (test_x, test_y) = split_inputs(Split::Test)?;
        let report = score(&model, &test_x, &test_y, prepared.labels.names())?;
        let metrics_rel = format!("metrics/{cell}.json");
        self.write(&metrics_rel, report.to_json()?.as_bytes(), "evaluate")?;
        Ok(CellResult {
            run: run.name.clone(),
            corpus: run.corpus.clone(),
            inputs: run.inputs.clone(),
            encoder_epochs: epochs,
            architecture: arch,
            size,
            parameters: model.parameter_count(),
            macro_auc: report.macro_auc,
            micro_auc: report.micro_auc,
            best_epoch: history.best_epoch,
            epochs_run: history.epochs_run,
            metrics_path: metrics_rel,
        })
    }

    /// Runs every cell of the plan and writes the consolidated report,
    /// `results.csv` and `loss_curves.csv`.
    pub fn run(&mut self) -> Result<MatrixResult> {
        let runs = self.plan.runs.clone();
        let mut cells = Vec::new();
        for run in &runs {
            for &arch in &run.architectures {
                let sizes: &[Size] = if arch == Architecture::Linear { &[Size::Base] } else { &run.sizes };
                for &size in sizes {
                    cells.push(self.run_cell(run, arch, size)?);
                }
            }
        }
        let mut curves: Vec<LossCurve> = self
            .encoders
            .iter()
            .map(|((corpus, strategy), a)| LossCurve {
                corpus: corpus.clone(),
                strategy: *strategy,
                val_loss: a.curve.clone(),
            })
            .collect();
        curves.sort_by(|a, b| (&a.corpus, a.strategy).cmp(&(&b.corpus, b.strategy)));
        let result = MatrixResult { cells, curves };

        self.write("results.csv", render_results(&result).as_bytes(), "report")?;
        self.write("loss_curves.csv", render_curves(&result).as_bytes(), "report")?;
        self.write("report.txt", render_report(&self.plan, &result).as_bytes(), "report")?;
        self.manifest.finished_unix = Some(now_unix());
        self.save_manifest()?;
        Ok(result)
    }
}

/// Encodes every chunk of every set; vectors are stored as `f32`.
pub fn encode_chunk_sets(model: &Encoder, sets: &[ChunkSet]) -> Result<EncodingSet> {
    let mut out = EncodingSet::new(model.dim());
    for set in sets {
        for chunk in &set.chunks {
            let v = model.encode_chunk(chunk)?;
            out.push(Encoding {
                doc_id: set.doc_id.clone(),
                strategy: set.strategy,
                position_key: chunk.position_key.clone(),
                vector: v.iter().map(|&x| x as f32).collect(),
            })?;
        }
    }
    Ok(out)
}

/// Decoder probabilities scored against targets.
pub fn score(
    model: &Decoder,
    inputs: &[crate::decoder::DecoderInput],
    targets: &[Vec<f64>],
    label_names: &[String],
) -> Result<MetricsReport> {
    let scores = model.predict(inputs)?;
    let targets = targets.iter().map(|r| r.iter().map(|&v| v == 1.0).collect()).collect();
    evaluate(&EvalBatch::new(scores, targets, label_names.to_vec())?)
}

pub fn render_curve(curve: &[f64]) -> String {
    let mut s = String::from("epoch,val_loss\n");
    for (e, v) in curve.iter().enumerate() {
        let _ = writeln!(s, "{e},{v}");
    }
    s
}

pub fn parse_curve(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .nth(1)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Input(format!("bad loss curve line `{l}`")))
        })
        .collect()
}

fn join_inputs(inputs: &[Strategy]) -> String {
    inputs.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("+")
}

fn render_results(r: &MatrixResult) -> String {
    let mut s = String::from("run,corpus,inputs,encoder_epochs,architecture,size,parameters,macro_auc,micro_auc,best_epoch,epochs_run\n");
    for c in &r.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.run,
            c.corpus,
            join_inputs(&c.inputs),
            c.encoder_epochs,
            c.architecture,
            c.size,
            c.parameters,
            c.macro_auc,
            c.micro_auc,
            c.best_epoch,
            c.epochs_run
        );
    }
    s
}

fn render_curves(r: &MatrixResult) -> String {
    let mut s = String::from("corpus,strategy,epoch,val_loss\n");
    for c in &r.curves {
        for (e, v) in c.val_loss.iter().enumerate() {
            let _ = writeln!(s, "{},{},{e},{v}", c.corpus, c.strategy);
        }
    }
    s
}

fn render_report(plan: &ExperimentPlan, r: &MatrixResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<24} {:<22} {:>3} {:<12} {:<7} {:>9} {:>7} {:>7}   {:>15}",
        "run", "inputs", "ep", "decoder", "size", "params", "macro", "micro", "published"
    );
    for c in &r.cells {
        let published = plan
            .runs
            .iter()
            .find(|run| run.name == c.run)
            .and_then(|run| run.reference.as_ref())
            .and_then(|k| reference(&k.table, &k.row))
            .map(|row| match row.micro_auc {
                Some(m) => format!("{:.2} / {:.2}", row.macro_auc, m),
                None => format!("{:.2} / -", row.macro_auc),
            })
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{:<24} {:<22} {:>3} {:<12} {:<7} {:>9} {:>7.2} {:>7.2}   {:>15}",
            c.run,
            join_inputs(&c.inputs),
            c.encoder_epochs,
            c.architecture.as_str(),
            c.size.as_str(),
            c.parameters,
            100.0 * c.macro_auc,
            100.0 * c.micro_auc,
            published
        );
    }
    s.push_str("\nencoder validation loss per epoch\n");
    for c in &r.curves {
        let vals: Vec<String> = c.val_loss.iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(s, "{:<16} {:<10} {}", c.corpus, c.strategy.as_str(), vals.join(" "));
    }
    s.push_str("\nPublished numbers are full-scale results shown for orientation only.\n");
    s
}
