use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use wristgest_client::Client;
use wristgest_core::audio::{load_canonical, save_wav, CANONICAL_RATE};
use wristgest_core::augment::AugmentConfig;
use wristgest_core::corpus::{
    augment_corpus, load_experiment_data, load_noise_dir, train_from_manifest, write_synthetic_corpus, MANIFEST_FILE,
    TRAIN_NOISE_DIR,
};
use wristgest_core::dataset::{
    auto_segment, read_manifest, split, write_manifest, DatasetManifest, SampleRecord, SampleSource, SegmentConfig,
    Split,
};
use wristgest_core::eval::{
    evaluate_model, false_alarm_profile, ratio_sweep, synthetic_corpus, synthetic_stream, CorpusConfig, EvalReport,
    ExperimentConfig, FeatureConfig, NmsConfig, NoiseLevel, StreamSpec, SweepTable, TestCondition,
};
use wristgest_core::model::{load_model, save_model, TrainConfig};
use wristgest_core::pipeline::{
    open_microphone, run_source, ActionMapping, AppContext, AudioSource, GesturePipeline, Pacing, PcmReaderSource,
    PipelineConfig, ReplaySource,
};
use wristgest_core::wire::{ConfigRequest, WireEvent};
use wristgest_core::Error as CoreError;

use crate::svg::{Chart, Series};
use crate::{
    AugmentArgs, Cli, Command, ConfigArgs, DetectArgs, EvalArgs, FalseAlarmArgs, SegmentArgs, SweepArgs, SynthArgs,
    TrainArgs, UrlArgs, WatchArgs,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Service(#[from] wristgest_service::ServiceError),
    #[error(transparent)]
    Client(#[from] wristgest_client::ClientError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

type Result<T> = std::result::Result<T, CliError>;

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.into(), source })
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Synth(a) => synth(a, seed),
        Command::Segment(a) => segment(a, seed),
        Command::Augment(a) => augment(a, seed),
        Command::Train(a) => train(a, seed),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a, seed),
        Command::Falsealarm(a) => falsealarm(a, seed),
        Command::Detect(a) => detect(a),
        Command::Serve(mut opts) => {
            opts.seed = opts.seed.or(cli.seed);
            runtime()?.block_on(wristgest_service::run(opts))?;
            // A blocking stdin reader may still be parked; do not wait for it.
            std::process::exit(0)
        }
        Command::Watch(a) => runtime()?.block_on(watch(a)),
        Command::State(a) => runtime()?.block_on(state(a)),
        Command::Config(a) => runtime()?.block_on(configure(a)),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Runtime::new().map_err(|source| CliError::Io { path: "tokio runtime".into(), source })
}

fn synth(a: SynthArgs, seed: u64) -> Result<()> {
    let cfg = CorpusConfig {
        per_class: a.per_class,
        noise_kinds: a.noise_kinds,
        noise_clips_per_kind: a.noise_clips,
        noise_duration_s: a.noise_duration,
        seed,
    };
    let manifest = write_synthetic_corpus(&a.out, &cfg)?;
    let path = a.out.join(MANIFEST_FILE);
    write_manifest(&path, &manifest)?;
    println!("wrote {} clips to {}", manifest.records.len(), path.display());
    print!("{}", manifest.summary());
    Ok(())
}

fn segment(a: SegmentArgs, seed: u64) -> Result<()> {
    let cfg = SegmentConfig { min_interval_s: a.min_interval, ..SegmentConfig::default() };
    let path = a.out.join(MANIFEST_FILE);
    let mut manifest = if path.exists() { read_manifest(&path)? } else { DatasetManifest::default() };
    let mut added = Vec::new();
    for rec in &a.recordings {
        let recording = load_canonical(rec)?;
        let stem = rec.file_stem().map_or_else(|| "rec".into(), |s| s.to_string_lossy().into_owned());
        let clips = auto_segment(&recording, a.label, &cfg)?;
        println!("{}: {} clips", rec.display(), clips.len());
        for (k, c) in clips.iter().enumerate() {
            let id = format!("{}_{stem}_{k:04}", a.label);
            let rel = PathBuf::from("clips").join(format!("{id}.wav"));
            save_wav(&c.clip, a.out.join(&rel))?;
            added.push(SampleRecord {
                id,
                path: rel,
                label: a.label,
                split: Split::Train,
                source: SampleSource::Clean,
                parent_id: None,
                snr_db: None,
                noise_id: None,
                recorder: stem.clone(),
            });
        }
    }
    manifest.records.retain(|r| !added.iter().any(|n| n.id == r.id));
    manifest.records.extend(added);
    match split(&mut manifest.records, seed) {
        Ok(()) => {}
        Err(CoreError::TooFewSamples(why)) => eprintln!("not split yet, every clip stays in train: {why}"),
        Err(e) => return Err(e.into()),
    }
    write_manifest(&path, &manifest)?;
    print!("{}", manifest.summary());
    Ok(())
}

fn augment(a: AugmentArgs, seed: u64) -> Result<()> {
    let manifest = read_manifest(&a.manifest)?;
    let base = base_dir(&a.manifest);
    let noise_dir = a.noise.unwrap_or_else(|| base.join(TRAIN_NOISE_DIR));
    let noise = load_noise_dir(&noise_dir)?;
    let cfg = AugmentConfig { ratio: a.ratio, snr_db_range: [a.snr_min, a.snr_max], seed };
    let out = augment_corpus(&manifest, &base, &noise, &cfg, &a.splits)?;
    let path = a.out.unwrap_or(a.manifest);
    write_manifest(&path, &out)?;
    println!(
        "added {} augmented clips from {} noise clips; wrote {}",
        out.records.len() - manifest.records.len(),
        noise.len(),
        path.display()
    );
    print!("{}", out.summary());
    Ok(())
}

fn train(a: TrainArgs, seed: u64) -> Result<()> {
    let manifest = read_manifest(&a.manifest)?;
    let cfg = TrainConfig {
        learning_rate: a.lr,
        batch_size: a.batch_size,
        max_epochs: a.epochs,
        early_stop_patience: a.patience,
        seed,
        ..TrainConfig::default()
    };
    let features = FeatureConfig { window_indices: a.windows };
    let (model, history) = train_from_manifest(&manifest, &base_dir(&a.manifest), &cfg, &features, |e| {
        eprintln!(
            "epoch {:>3}  train loss {:.4} acc {:.4}  val loss {:.4} acc {:.4}",
            e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc
        );
    })?;
    save_model(&model, &a.out)?;
    if let Some(h) = &a.history {
        write(h, history.to_csv())?;
    }
    match history.best_epoch {
        Some(best) => println!(
            "kept epoch {best} of {}{}; wrote {}",
            history.epochs.len(),
            if history.stopped_early { " (stopped early)" } else { "" },
            a.out.display()
        ),
        None => println!("no epochs run; wrote the initial model to {}", a.out.display()),
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let manifest = read_manifest(&a.manifest)?;
    let model = load_model(&a.model)?;
    let nms = NmsConfig::default().with_epsilon(a.epsilon);
    let report = evaluate_model(&model, &manifest, &base_dir(&a.manifest), a.split, a.source, &nms)?;
    println!("{} split, epsilon {}", a.split, a.epsilon);
    print!("{report}");
    println!();
    print!("{}", report.confusion);
    if let Some(dir) = &a.report_dir {
        write_eval_artifacts(dir, &report)?;
        println!("wrote report files to {}", dir.display());
    }
    Ok(())
}

fn write_eval_artifacts(dir: &Path, report: &EvalReport) -> Result<()> {
    write(&dir.join("confusion.csv"), report.confusion.to_csv())?;
    write(&dir.join("report.json"), serde_json::to_string_pretty(report).expect("report serialises"))?;
    let mut series = Vec::new();
    for (class, roc) in &report.roc {
        if let Some(roc) = roc {
            write(&dir.join(format!("roc_{class}.csv")), roc.to_csv())?;
            series.push(Series {
                name: format!("{class} ({:.3})", roc.auc),
                points: roc.points.iter().map(|p| (p.fpr, p.tpr)).collect(),
            });
        }
    }
    let chart = Chart {
        title: "One-vs-rest ROC".into(),
        x_label: "false positive rate".into(),
        y_label: "true positive rate".into(),
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        x_log: false,
        series,
    };
    write(&dir.join("roc.svg"), chart.render())
}

fn sweep(a: SweepArgs, seed: u64) -> Result<()> {
    let data = match &a.manifest {
        Some(m) => load_experiment_data(&read_manifest(m)?, &base_dir(m))?,
        None => synthetic_corpus(&CorpusConfig { per_class: a.per_class, seed, ..CorpusConfig::default() })?,
    };
    let cfg = ExperimentConfig {
        train: TrainConfig { max_epochs: a.epochs, early_stop_patience: a.patience, seed, ..TrainConfig::default() },
        ..ExperimentConfig::default()
    };
    let table = ratio_sweep(&data, &a.ratios, &cfg, |r| {
        eprintln!("ratio {:>4} {:<6} f1 {:.4} accuracy {:.4}", r.ratio, r.condition, r.macro_avg.f1, r.accuracy);
    })?;
    print!("{table}");
    if let Some(dir) = &a.out {
        write(&dir.join("sweep.csv"), table.to_csv())?;
        write(&dir.join("sweep.svg"), sweep_chart(&table).render())?;
        for (ratio, h) in &table.histories {
            write(&dir.join(format!("history_ratio_{ratio}.csv")), h.to_csv())?;
        }
        println!("wrote sweep files to {}", dir.display());
    }
    Ok(())
}

fn sweep_chart(table: &SweepTable) -> Chart {
    let series = [TestCondition::Clean, TestCondition::Noisy]
        .into_iter()
        .map(|c| Series {
            name: format!("{c} test"),
            points: table.rows.iter().filter(|r| r.condition == c).map(|r| (r.ratio as f64, r.macro_avg.f1)).collect(),
        })
        .collect();
    let (lo, hi) =
        table.rows.iter().fold((f64::INFINITY, 1.0f64), |(lo, hi), r| (lo.min(r.ratio as f64), hi.max(r.ratio as f64)));
    Chart {
        title: "Macro F1 by augmentation ratio".into(),
        x_label: "synthesized : clean ratio".into(),
        y_label: "macro F1".into(),
        x_range: (lo.min(hi), hi),
        y_range: (0.0, 1.0),
        x_log: true,
        series,
    }
}

fn falsealarm(a: FalseAlarmArgs, seed: u64) -> Result<()> {
    let model = Arc::new(load_model(&a.model)?);
    let stream = match &a.replay {
        Some(p) => load_canonical(p)?,
        None => {
            let spec = StreamSpec { lead_s: a.duration, ..StreamSpec::new(Vec::new(), seed) }
                .with_noise(a.noise_kind, NoiseLevel::Rms { rms: a.rms });
            synthetic_stream(&spec)?.clip
        }
    };
    let mut cfg = PipelineConfig::default();
    cfg.nms = cfg.nms.with_epsilon(a.epsilon);
    cfg.validate()?;
    let profile = false_alarm_profile(model, &stream, &cfg)?;
    print!("{profile}");
    if let Some(h) = &a.histogram {
        write(h, profile.histogram_csv())?;
    }
    Ok(())
}

fn detect(a: DetectArgs) -> Result<()> {
    let model = Arc::new(load_model(&a.model)?);
    let mut cfg = PipelineConfig::default();
    cfg.mapping = ActionMapping::new(a.context.parse::<AppContext>()?);
    cfg.nms = cfg.nms.with_epsilon(a.epsilon);
    cfg.validate()?;
    let mapping = cfg.mapping;
    let mut pipeline = GesturePipeline::new(model, cfg, CANONICAL_RATE)?;
    let mut source: Box<dyn AudioSource + Send> = match (&a.replay, a.mic) {
        (Some(p), _) => Box::new(ReplaySource::new(load_canonical(p)?)),
        (None, true) => open_microphone()?,
        (None, false) => Box::new(PcmReaderSource::new(std::io::stdin(), CANONICAL_RATE)),
    };
    let pacing = if a.realtime { Pacing::Realtime } else { Pacing::Fast };
    let stdout = std::io::stdout();
    let summary = run_source(&mut pipeline, source.as_mut(), pacing, 0.1, |e| {
        let mut out = stdout.lock();
        let _ =
            writeln!(out, "{}", serde_json::to_string(&WireEvent::from_event(e, &mapping)).expect("event serialises"));
        let _ = out.flush();
    })?;
    eprintln!(
        "{:.1} s of audio in {:.2} s: {} triggers, {} inferences, {} events",
        summary.stream_s, summary.elapsed_s, summary.stats.triggers, summary.stats.inferences, summary.stats.events
    );
    Ok(())
}

async fn watch(a: WatchArgs) -> Result<()> {
    let mut events = Client::new(&a.url).events().await?;
    let mut seen = 0;
    while a.count.is_none_or(|n| seen < n) {
        let Some(e) = events.next().await else {
            break;
        };
        println!("{}", serde_json::to_string(&e?).expect("event serialises"));
        seen += 1;
    }
    Ok(())
}

async fn state(a: UrlArgs) -> Result<()> {
    let s = Client::new(&a.url).state().await?;
    println!("{}", serde_json::to_string_pretty(&s).expect("state serialises"));
    Ok(())
}

async fn configure(a: ConfigArgs) -> Result<()> {
    let s = Client::new(&a.url).configure(&ConfigRequest { epsilon: Some(a.epsilon) }).await?;
    println!("{}", serde_json::to_string_pretty(&s).expect("state serialises"));
    Ok(())
}
