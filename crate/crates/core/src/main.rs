use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use murreid::config::ConfigFile;
use murreid::corpus::{
    compute_stats, filter_by_duration, parse_manifest, split, Partition, SplitManifest, SplitMode, SplitRatios,
    Utterance, MAX_DURATION_S,
};
use murreid::dsp::{decode_wav, FeatureKind};
use murreid::eval::{evaluate, render_report, ReportStyle};
use murreid::models::{load_bundle, save_bundle, train_fusion, train_text_only, ModelKind, ModelOptions};
use murreid::nn::{OptimizerKind, TrainConfig};
use murreid::serve::{router, ClassifyResponse};
use murreid::synth::{describe, generate, Placement, SynthConfig, MANIFEST_NAME};
use murreid::text::Granularity;
use murreid::Error;

const SEED_ENV: &str = "MURREID_SEED";
const DEFAULT_SEED: u64 = 42;
const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Parser)]
#[command(name = "murreid", version, about = "Finnish dialect identification from transcripts and audio")]
struct Cli {
    /// Flat key=value settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assign manifest utterances to train/val/test partitions.
    Split(SplitArgs),
    /// Train a text-only or fusion model and write a bundle.
    Train(TrainArgs),
    /// Evaluate a bundle on the test partition.
    Eval(EvalArgs),
    /// Classify one transcript (and optional WAV file).
    Predict(PredictArgs),
    /// Serve a bundle over HTTP.
    Serve(ServeArgs),
    /// Generate a synthetic corpus with class-marker tokens and tones.
    Synth(SynthArgs),
    /// Per-dialect sentence, audio and speaker counts of a manifest.
    Stats(StatsArgs),
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Utterances at or above this many seconds are dropped.
    #[arg(long)]
    max_duration: Option<f64>,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    out: PathBuf,
    /// Train,val,test fractions.
    #[arg(long)]
    ratios: Option<SplitRatios>,
    #[arg(long)]
    mode: Option<SplitMode>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    split: PathBuf,
    #[arg(long)]
    model_kind: Option<ModelKind>,
    /// Where to write the model bundle.
    #[arg(long)]
    out: PathBuf,
    /// Also write the training report JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    optimizer: Option<OptimizerKind>,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    audio_proj: Option<usize>,
    #[arg(long)]
    audio_segments: Option<usize>,
    #[arg(long)]
    granularity: Option<Granularity>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    min_count: Option<usize>,
    #[arg(long)]
    max_vocab: Option<usize>,
    /// log-mel or mfcc.
    #[arg(long)]
    features: Option<FeatureKind>,
    #[arg(long)]
    n_mels: Option<usize>,
    #[arg(long)]
    n_mfcc: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    split: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Fail unless the bundle holds this kind of model.
    #[arg(long)]
    model_kind: Option<ModelKind>,
    /// tsv or table.
    #[arg(long)]
    style: Option<ReportStyle>,
    /// Print unrounded metrics (TSV style only).
    #[arg(long)]
    full_precision: bool,
    /// Also write the confusion matrix as TSV.
    #[arg(long)]
    confusion: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    transcript: String,
    #[arg(long)]
    wav: Option<PathBuf>,
    /// Print all 23 class probabilities, not only the top five.
    #[arg(long)]
    all_scores: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    model: PathBuf,
    /// host:port to bind; port 0 picks a free port.
    #[arg(long)]
    addr: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    placement: Option<Placement>,
    #[arg(long)]
    p_text: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    min_duration: Option<f64>,
    #[arg(long)]
    max_duration: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
}

/// Flag > config file > built-in default.
struct Settings {
    file: ConfigFile,
}

impl Settings {
    fn load(path: Option<&Path>) -> murreid::Result<Self> {
        let file = match path {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(Self { file })
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> murreid::Result<T> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> murreid::Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file.get(key),
        }
    }

    /// Flag > config file > `MURREID_SEED` > default.
    fn seed(&self, flag: Option<u64>) -> murreid::Result<u64> {
        if let Some(s) = self.opt(flag, "seed")? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    fn corpus(&self, args: &CorpusArgs) -> murreid::Result<Vec<Utterance>> {
        let max = self.pick(args.max_duration, "max_duration", MAX_DURATION_S)?;
        let utts = parse_manifest(&args.manifest)?;
        Ok(filter_by_duration(&utts, max))
    }
}

fn audio_root(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn partition(utts: &[Utterance], split_path: &Path, part: Partition) -> murreid::Result<Vec<Utterance>> {
    let sm = SplitManifest::read(split_path)?;
    Ok(sm.select(utts, part)?.into_iter().cloned().collect())
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_split(s: &Settings, a: SplitArgs) -> anyhow::Result<()> {
    let utts = s.corpus(&a.corpus)?;
    let ratios = s.pick(a.ratios, "ratios", SplitRatios::default())?;
    let mode = s.pick(a.mode, "mode", SplitMode::RandomSentence)?;
    let sm = split(&utts, ratios, s.seed(a.seed)?, mode)?;
    sm.write(&a.out)?;
    let (tr, va, te) = sm.counts();
    println!("train\t{tr}\nval\t{va}\ntest\t{te}");
    Ok(())
}

fn model_options(s: &Settings, a: &TrainArgs) -> murreid::Result<ModelOptions> {
    let d = ModelOptions::default();
    let mut o = d.clone();
    o.dropout = s.pick(a.dropout, "dropout", d.dropout)?;
    o.dims.embed_dim = s.pick(a.embed_dim, "embed_dim", d.dims.embed_dim)?;
    o.dims.hidden = s.pick(a.hidden, "hidden", d.dims.hidden)?;
    o.dims.audio_proj = s.pick(a.audio_proj, "audio_proj", d.dims.audio_proj)?;
    o.dims.audio_segments = s.pick(a.audio_segments, "audio_segments", d.dims.audio_segments)?;
    o.text.granularity = s.pick(a.granularity, "granularity", d.text.granularity)?;
    o.text.max_len = s.pick(a.max_len, "max_len", d.text.max_len)?;
    o.text.min_count = s.pick(a.min_count, "min_count", d.text.min_count)?;
    o.text.max_vocab = s.pick(a.max_vocab, "max_vocab", d.text.max_vocab)?;
    o.dsp.kind = s.pick(a.features, "features", d.dsp.kind)?;
    o.dsp.n_mels = s.pick(a.n_mels, "n_mels", d.dsp.n_mels)?;
    o.dsp.n_mfcc = s.pick(a.n_mfcc, "n_mfcc", d.dsp.n_mfcc)?;
    o.dsp.target_rate_hz = s.pick(None, "target_rate_hz", d.dsp.target_rate_hz)?;
    o.dsp.fft_size = s.pick(None, "fft_size", d.dsp.fft_size)?;
    o.dsp.frame_len_s = s.pick(None, "frame_len_s", d.dsp.frame_len_s)?;
    o.dsp.frame_shift_s = s.pick(None, "frame_shift_s", d.dsp.frame_shift_s)?;
    o.dsp.validate()?;
    Ok(o)
}

fn train_config(s: &Settings, a: &TrainArgs) -> murreid::Result<TrainConfig> {
    let d = TrainConfig::default();
    let clip = s.pick(a.clip_norm, "clip_norm", d.clip_norm.unwrap_or(0.0))?;
    Ok(TrainConfig {
        learning_rate: s.pick(a.lr, "lr", d.learning_rate)?,
        epochs: s.pick(a.epochs, "epochs", d.epochs)?,
        batch_size: s.pick(a.batch_size, "batch_size", d.batch_size)?,
        seed: s.seed(a.seed)?,
        optimizer: s.pick(a.optimizer, "optimizer", d.optimizer)?,
        max_steps: s.opt(a.max_steps, "max_steps")?.or(d.max_steps),
        clip_norm: (clip > 0.0).then_some(clip),
    })
}

fn cmd_train(s: &Settings, a: TrainArgs) -> anyhow::Result<()> {
    let kind: ModelKind = s
        .opt(a.model_kind, "model_kind")?
        .ok_or_else(|| Error::Config("--model-kind (text or fusion) is required".into()))?;
    let opts = model_options(s, &a)?;
    let cfg = train_config(s, &a)?;
    let utts = s.corpus(&a.corpus)?;
    let train = partition(&utts, &a.split, Partition::Train)?;
    let val = partition(&utts, &a.split, Partition::Val)?;
    let (bundle, report) = match kind {
        ModelKind::Text => train_text_only(&train, &val, &opts, &cfg)?,
        ModelKind::Fusion => train_fusion(&train, &val, &audio_root(&a.corpus.manifest), &opts, &cfg)?,
    };
    save_bundle(&bundle, &a.out)?;
    if let Some(path) = &a.report {
        let json = serde_json::to_string_pretty(&report)? + "\n";
        std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    print_json(&report)
}

fn cmd_eval(s: &Settings, a: EvalArgs) -> anyhow::Result<()> {
    let bundle = load_bundle(&a.model)?;
    if let Some(expected) = s.opt(a.model_kind, "model_kind")? {
        if expected != bundle.kind() {
            return Err(Error::KindMismatch {
                expected: expected.to_string(),
                found: bundle.kind().to_string(),
            }
            .into());
        }
    }
    let style = s.pick(a.style, "style", ReportStyle::Tsv)?;
    let full = a.full_precision || s.pick(None, "full_precision", false)?;
    let utts = s.corpus(&a.corpus)?;
    let test = partition(&utts, &a.split, Partition::Test)?;
    if test.is_empty() {
        return Err(Error::Split("test partition is empty".into()).into());
    }
    let (cm, report) = evaluate(&bundle, &test, &audio_root(&a.corpus.manifest))?;
    if let Some(path) = &a.confusion {
        std::fs::write(path, cm.to_tsv()).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{}", render_report(&report, style, full));
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> anyhow::Result<()> {
    let bundle = load_bundle(&a.model)?;
    let audio = a.wav.as_ref().map(decode_wav).transpose()?;
    let p = bundle.predict(&a.transcript, audio.as_ref())?;
    let top: Vec<_> = p
        .top_k(5)
        .into_iter()
        .map(|(l, score)| serde_json::json!({"code": l.code(), "dialect": l.name(), "score": score}))
        .collect();
    let mut out = serde_json::json!({
        "dialect": p.label.name(),
        "code": p.label.code(),
        "top": top,
    });
    if a.all_scores {
        out["scores"] = serde_json::to_value(ClassifyResponse::from(&p).scores)?;
    }
    print_json(&out)
}

fn cmd_serve(s: &Settings, a: ServeArgs) -> anyhow::Result<()> {
    let addr = s.pick(a.addr, "addr", DEFAULT_ADDR.to_string())?;
    let bundle = Arc::new(load_bundle(&a.model)?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Error::Config(format!("cannot bind {addr}: {e}")))?;
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        axum::serve(listener, router(bundle))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn cmd_synth(s: &Settings, a: SynthArgs) -> anyhow::Result<()> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        n_classes: a.classes.unwrap_or(d.n_classes),
        per_class: a.per_class.unwrap_or(d.per_class),
        placement: a.placement.unwrap_or(d.placement),
        p_text: a.p_text.unwrap_or(d.p_text),
        noise_amplitude: a.noise.unwrap_or(d.noise_amplitude),
        duration_s: (
            a.min_duration.unwrap_or(d.duration_s.0),
            a.max_duration.unwrap_or(d.duration_s.1),
        ),
        seed: s.seed(a.seed)?,
        ..d
    };
    let utts = generate(&cfg, &a.out)?;
    eprintln!("wrote {} utterances to {}", utts.len(), a.out.join(MANIFEST_NAME).display());
    print!("{}", describe(&cfg));
    Ok(())
}

fn cmd_stats(s: &Settings, a: StatsArgs) -> anyhow::Result<()> {
    let utts = s.corpus(&a.corpus)?;
    print!("{}", compute_stats(&utts).render_tsv());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Split(a) => cmd_split(&settings, a),
        Command::Train(a) => cmd_train(&settings, a),
        Command::Eval(a) => cmd_eval(&settings, a),
        Command::Predict(a) => cmd_predict(a),
        Command::Serve(a) => cmd_serve(&settings, a),
        Command::Synth(a) => cmd_synth(&settings, a),
        Command::Stats(a) => cmd_stats(&settings, a),
    }
}

/// 2 for bad input, 1 for internal faults.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_input_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
