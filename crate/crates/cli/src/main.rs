use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chunkcode::datagen::{corpus_stats, generate_corpus, CorpusSpec, SignalPosition};
use chunkcode::decoder::{Architecture, Size, TrainConfig};
use chunkcode::metrics::reference;
use chunkcode::pipeline::{
    encode_stage, evaluate_stage, prepare_dataset, render_metrics, save_splits, train_decoder_stage,
    train_encoder_stage, DecoderSettings, EncoderShape, ExperimentPlan, FineTunePlan, Runner,
};
use chunkcode::textprep::{normalize, Split, Strategy, Vocabulary};
use chunkcode::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chunkcode", version, about = "Chunked long-document multi-label coding pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print stage progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus as train/validation/test JSONL.
    Generate(GenerateArgs),
    /// Build the vocabulary and write chunk files.
    Prepare(PrepareArgs),
    /// Fine-tune an encoder on one chunking strategy.
    TrainEncoder(TrainEncoderArgs),
    /// Encode prepared chunks into an ENC1 file.
    Encode(EncodeArgs),
    /// Train a decoder on one or more ENC1 files.
    TrainDecoder(TrainDecoderArgs),
    /// Score a decoder on a split.
    Evaluate(EvaluateArgs),
    /// Run an experiment plan end to end.
    Matrix(MatrixArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// JSON corpus spec; omitted fields take desk-scale defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    position: Option<SignalPosition>,
    #[arg(long)]
    seed: Option<u64>,
    /// Vocabulary size used for the token statistics.
    #[arg(long, default_value_t = 2000)]
    vocab_size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PrepareArgs {
    /// JSONL file or directory of split files.
    #[arg(long)]
    dataset: PathBuf,
    /// Repeatable; defaults to every strategy.
    #[arg(long = "strategy")]
    strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 512)]
    max_len: usize,
    #[arg(long, default_value_t = 2000)]
    vocab_size: usize,
    #[arg(long, default_value_t = 200)]
    paragraphs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainEncoderArgs {
    /// Prepared directory.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    strategy: Strategy,
    #[arg(long, default_value_t = 6)]
    epochs: usize,
    #[arg(long, default_value_t = 5e-4)]
    lr: f64,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    heads: usize,
    #[arg(long, default_value_t = 256)]
    ffn_dim: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    encoder: PathBuf,
    /// Prepared directory.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    strategy: Strategy,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainDecoderArgs {
    /// Prepared directory.
    #[arg(long)]
    dataset: PathBuf,
    /// Repeatable; several files combine strategies.
    #[arg(long = "enc", required = true)]
    encodings: Vec<PathBuf>,
    #[arg(long)]
    arch: Architecture,
    #[arg(long, default_value_t = Size::Base)]
    size: Size,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 100)]
    max_epochs: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, num_args = 2, default_values_t = [768, 512])]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    heads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    decoder: PathBuf,
    /// Prepared directory.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long = "enc", required = true)]
    encodings: Vec<PathBuf>,
    #[arg(long, default_value_t = Split::Test)]
    split: Split,
    /// Published table and row to show alongside, e.g. `finetune fbm-6`.
    #[arg(long, num_args = 2, value_names = ["TABLE", "ROW"])]
    reference: Vec<String>,
    /// Metrics JSON destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Overrides the plan seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the plan output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownStrategy(_) => 1,
        Error::Training(_) | Error::Nn(_) => 3,
        _ => 2,
    }
}

fn read_spec(path: &Path) -> chunkcode::Result<CorpusSpec> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> chunkcode::Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn generate(a: GenerateArgs) -> chunkcode::Result<()> {
    let mut spec: CorpusSpec = match &a.spec {
        Some(p) => read_spec(p)?,
        None => CorpusSpec::default(),
    };
    if let Some(p) = a.position {
        spec.signal_position = p;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let corpus = generate_corpus(&spec)?;
    save_splits(&corpus.documents, &a.out)?;
    let train: Vec<String> = corpus.split(Split::Train).map(|d| normalize(&d.raw_text)).collect();
    let vocab = Vocabulary::build(&train, a.vocab_size)?;
    let stats = corpus_stats(&corpus.documents, &vocab);
    write_file(&a.out.join("stats.json"), &serde_json::to_vec_pretty(&stats)?)?;
    write_file(&a.out.join("signals.json"), &serde_json::to_vec_pretty(&corpus.signal_map)?)?;
    println!(
        "{} documents, mean {:.1} tokens, {:.2} labels per document",
        stats.documents, stats.mean_tokens, stats.mean_labels_per_doc
    );
    Ok(())
}

fn prepare(a: PrepareArgs) -> chunkcode::Result<()> {
    let strategies = if a.strategies.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        a.strategies
    };
    let s = prepare_dataset(&a.dataset, &a.out, &strategies, a.max_len, a.vocab_size, a.paragraphs)?;
    println!(
        "{} documents, {} vocabulary pieces{}, {} paragraph names",
        s.documents,
        s.vocab_len,
        if s.vocab_reused { " (reused)" } else { "" },
        s.paragraph_names
    );
    for (strategy, n) in &s.chunks {
        println!("{strategy}: {n} chunks");
    }
    Ok(())
}

fn train_encoder(a: TrainEncoderArgs) -> chunkcode::Result<()> {
    let shape = EncoderShape {
        layers: a.layers,
        dim: a.dim,
        heads: a.heads,
        ffn_dim: a.ffn_dim,
        ..EncoderShape::default()
    };
    let finetune = FineTunePlan {
        epochs: vec![a.epochs],
        learning_rate: a.lr,
        batch_size: a.batch_size,
    };
    let r = train_encoder_stage(&a.dataset, a.strategy, &shape, &finetune, a.seed, &a.out)?;
    println!(
        "validation loss {:.4} -> {:.4} ({:+.1}%)",
        r.initial(),
        r.last(),
        100.0 * r.relative_change()
    );
    Ok(())
}

fn encode(a: EncodeArgs) -> chunkcode::Result<()> {
    let set = encode_stage(&a.encoder, &a.dataset, a.strategy, &a.out)?;
    println!("{} encodings of dimension {}", set.len(), set.dim());
    Ok(())
}

fn train_decoder(a: TrainDecoderArgs) -> chunkcode::Result<()> {
    let settings = DecoderSettings {
        architecture: a.arch,
        size: a.size,
        hidden: (a.hidden[0], a.hidden[1]),
        heads: a.heads,
        train: TrainConfig {
            batch_size: a.batch_size,
            base_lr: a.lr,
            max_epochs: a.max_epochs,
            patience: a.patience,
            ..TrainConfig::default()
        },
        seed: a.seed,
    };
    let (model, h) = train_decoder_stage(&a.dataset, &a.encodings, &settings, &a.out)?;
    println!(
        "{} parameters, best epoch {} of {}, validation loss {:.5}",
        model.parameter_count(),
        h.best_epoch,
        h.epochs_run,
        h.best_val_loss
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> chunkcode::Result<()> {
    let published = match a.reference.as_slice() {
        [t, r] if reference(t, r).is_none() => {
            return Err(Error::Config(format!("no published row `{r}` in table `{t}`")));
        }
        [t, r] => Some((t.as_str(), r.as_str())),
        _ => None,
    };
    let report = evaluate_stage(&a.decoder, &a.dataset, &a.encodings, a.split)?;
    if let Some(out) = &a.out {
        write_file(out, report.to_json()?.as_bytes())?;
    }
    print!("{}", render_metrics(&report, published)?);
    Ok(())
}

fn matrix(a: MatrixArgs, verbose: bool) -> chunkcode::Result<()> {
    let text = std::fs::read_to_string(&a.plan).map_err(|source| Error::Io {
        path: a.plan.clone(),
        source,
    })?;
    let mut plan = ExperimentPlan::from_json(&text)?;
    if let Some(s) = a.seed {
        plan.seed = s;
    }
    let out = a
        .out
        .or_else(|| plan.out.clone())
        .ok_or_else(|| Error::Config("no output directory; pass --out or set `out` in the plan".into()))?;
    let mut runner = Runner::new(plan, &out)?;
    runner.verbose = verbose;
    let result = runner.run()?;
    print!(
        "{}",
        std::fs::read_to_string(out.join("report.txt")).map_err(|source| Error::Io {
            path: out.join("report.txt"),
            source,
        })?
    );
    println!("{} cells written to {}", result.cells.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let verbose = cli.verbose;
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Prepare(a) => prepare(a),
        Command::TrainEncoder(a) => train_encoder(a),
        Command::Encode(a) => encode(a),
        Command::TrainDecoder(a) => train_decoder(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Matrix(a) => matrix(a, verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
