//! `wristgest`: corpus generation, training, evaluation, detection and the
//! live event service.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wristgest_core::augment::NoiseKind;
use wristgest_core::dataset::{SampleSource, Split};
use wristgest_core::gesture::GestureClass;
use wristgest_service::ServeOptions;

use crate::config::ParseError;

#[derive(Debug, Parser)]
#[command(name = "wristgest", version, about = "Gesture recognition from wrist bone-conducted audio")]
pub struct Cli {
    /// Seed for every random draw
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file: top-level keys set global flags, `[command]` tables set
    /// that command's flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic gesture corpus with noise pools and a manifest
    Synth(SynthArgs),
    /// Cut single-class recordings into peak-centred 1 s clips
    Segment(SegmentArgs),
    /// Add noisy copies of clean clips to a manifest
    Augment(AugmentArgs),
    /// Train a model on a manifest's training and validation splits
    Train(TrainArgs),
    /// Clip-level evaluation report for one split
    Eval(EvalArgs),
    /// Train per augmentation ratio and score clean and noisy test sets
    Sweep(SweepArgs),
    /// Trigger and false-alarm profile of a recording without gestures
    Falsealarm(FalseAlarmArgs),
    /// Run the two-stage detector and print events as JSON lines
    Detect(DetectArgs),
    /// Serve live events over HTTP
    Serve(ServeOptions),
    /// Print events from a running service as JSON lines
    Watch(WatchArgs),
    /// Print a running service's state
    State(UrlArgs),
    /// Change a running service's settings
    Config(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    /// Noise clips per kind in each of the train and test pools
    #[arg(long, default_value_t = 2)]
    pub noise_clips: usize,
    #[arg(long, default_value_t = 15.0)]
    pub noise_duration: f64,
    #[arg(long, value_delimiter = ',', default_values_t = NoiseKind::ALL)]
    pub noise_kinds: Vec<NoiseKind>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Gesture performed throughout the recordings
    #[arg(long)]
    pub label: GestureClass,
    /// Corpus directory; clips go to `clips/` and records are merged into
    /// its manifest
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub min_interval: f64,
    /// WAV recordings
    #[arg(required = true)]
    pub recordings: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Noisy copies per clean clip
    #[arg(long, default_value_t = 10)]
    pub ratio: usize,
    #[arg(long, default_value_t = 0.0)]
    pub snr_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub snr_max: f64,
    /// Noise WAV directory [default: <corpus>/noise/train]
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [Split::Train, Split::Val])]
    pub splits: Vec<Split>,
    /// Output manifest [default: overwrite --manifest]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Model file to write
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    /// Window indices (0..=10) of each clip used as training samples
    #[arg(long, value_delimiter = ',', default_values_t = [5usize])]
    pub windows: Vec<usize>,
    /// Per-epoch CSV
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = Split::Test)]
    pub split: Split,
    /// Only records from this source (clean, augmented, synthetic)
    #[arg(long, value_parser = parse_source)]
    pub source: Option<SampleSource>,
    #[arg(long, default_value_t = 0.7)]
    pub epsilon: f64,
    /// Write confusion.csv, roc_<class>.csv, roc.svg and report.json here
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Corpus written by `synth` [default: generate one in memory]
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Clips per class for the in-memory corpus
    #[arg(long, default_value_t = 60)]
    pub per_class: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 5, 10, 50, 100])]
    pub ratios: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    /// Write sweep.csv, sweep.svg and per-ratio histories here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FalseAlarmArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Recording to profile [default: synthetic noise]
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long, default_value_t = NoiseKind::Babble, conflicts_with = "replay")]
    pub noise_kind: NoiseKind,
    /// Synthetic noise length in seconds
    #[arg(long, default_value_t = 60.0, conflicts_with = "replay")]
    pub duration: f64,
    /// Synthetic noise RMS
    #[arg(long, default_value_t = 0.1, conflicts_with = "replay")]
    pub rms: f64,
    #[arg(long, default_value_t = 0.7)]
    pub epsilon: f64,
    /// Max-probability histogram CSV
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["replay", "mic", "stdin"]))]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// WAV file to replay
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Capture from the default microphone
    #[arg(long)]
    pub mic: bool,
    /// Raw s16le 16 kHz mono PCM on standard input
    #[arg(long)]
    pub stdin: bool,
    #[arg(long, default_value_t = 0.7)]
    pub epsilon: f64,
    /// object_viewer or web_browser
    #[arg(long, default_value = "object_viewer")]
    pub context: String,
    /// Pace a replay at wall-clock speed
    #[arg(long)]
    pub realtime: bool,
}

#[derive(Debug, Args)]
pub struct UrlArgs {
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    pub url: String,
}

#[derive(Debug, Args)]
pub struct WatchArgs {
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    pub url: String,
    /// Stop after this many events
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    pub url: String,
    #[arg(long)]
    pub epsilon: f64,
}

fn parse_source(s: &str) -> Result<SampleSource, String> {
    match s {
        "clean" => Ok(SampleSource::Clean),
        "augmented" => Ok(SampleSource::Augmented),
        "synthetic" => Ok(SampleSource::Synthetic),
        _ => Err(format!("unknown source `{s}` (clean, augmented, synthetic)")),
    }
}

fn main() -> ExitCode {
    let cli = match config::parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(ParseError::Clap(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
