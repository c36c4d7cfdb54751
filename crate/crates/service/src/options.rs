use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use wristgest_core::audio::{load_canonical, CANONICAL_RATE};
use wristgest_core::augment::NoiseKind;
use wristgest_core::eval::{synthetic_stream, NoiseLevel, StreamSpec};
use wristgest_core::gesture::{GestureClass, NUM_CLASSES};
use wristgest_core::model::load_model;
use wristgest_core::pipeline::{
    open_microphone, ActionMapping, AppContext, AudioSource, GesturePipeline, Pacing, PcmReaderSource, PipelineConfig,
    ReplaySource,
};

use crate::feed::{join_feed, spawn_feed, LoopSource};
use crate::{bind, router, Result, ServiceState, DEFAULT_CHANNEL_CAPACITY};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Replay(PathBuf),
    /// Raw s16le mono PCM at 16 kHz on standard input.
    Stdin,
    Mic,
    /// A looping synthetic recording with one gesture every two seconds.
    Demo,
}

/// Settings for `serve`. Every field is optional so a config file can fill
/// in whatever the command line leaves out.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeOptions {
    /// Port to listen on [default: 8080]
    #[arg(long)]
    pub port: Option<u16>,
    /// Interface to bind [default: 127.0.0.1]
    #[arg(long)]
    pub host: Option<String>,
    /// Trained model file
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Replay a WAV file
    #[arg(long, conflicts_with_all = ["stdin", "mic", "demo"])]
    pub replay: Option<PathBuf>,
    /// Read raw s16le 16 kHz mono PCM from standard input
    #[arg(long)]
    #[serde(skip)]
    pub stdin: bool,
    /// Capture from the default microphone
    #[arg(long)]
    #[serde(skip)]
    pub mic: bool,
    /// Loop a synthetic gesture recording
    #[arg(long)]
    pub demo: bool,
    /// Restart the replay when it ends
    #[arg(long = "loop")]
    #[serde(rename = "loop")]
    pub looped: bool,
    /// Replay as fast as possible instead of in real time
    #[arg(long)]
    pub fast: bool,
    /// Event threshold in (0, 1] [default: 0.7]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Action mapping: object_viewer or web_browser
    #[arg(long)]
    pub context: Option<String>,
    /// Directory served under /ui/ (a built-in page otherwise)
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    /// Events a client may fall behind before it is disconnected
    #[arg(long)]
    pub capacity: Option<usize>,
    /// Seed for the demo recording
    #[arg(skip)]
    pub seed: Option<u64>,
}

impl ServeOptions {
    /// Command-line values win; missing ones come from `file`.
    pub fn merged(self, file: ServeOptions) -> Self {
        Self {
            port: self.port.or(file.port),
            host: self.host.or(file.host),
            model: self.model.or(file.model),
            replay: self.replay.or(file.replay),
            stdin: self.stdin,
            mic: self.mic,
            demo: self.demo || file.demo,
            looped: self.looped || file.looped,
            fast: self.fast || file.fast,
            epsilon: self.epsilon.or(file.epsilon),
            context: self.context.or(file.context),
            ui_dir: self.ui_dir.or(file.ui_dir),
            capacity: self.capacity.or(file.capacity),
            seed: self.seed.or(file.seed),
        }
    }

    pub fn source(&self) -> SourceKind {
        if self.stdin {
            SourceKind::Stdin
        } else if self.mic {
            SourceKind::Mic
        } else if let Some(p) = &self.replay {
            SourceKind::Replay(p.clone())
        } else {
            SourceKind::Demo
        }
    }

    pub fn pipeline_config(&self) -> wristgest_core::Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(c) = &self.context {
            cfg.mapping = ActionMapping::new(c.parse::<AppContext>()?);
        }
        if let Some(eps) = self.epsilon {
            cfg.nms = cfg.nms.with_epsilon(eps);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn open_source(kind: &SourceKind, looped: bool, seed: u64) -> wristgest_core::Result<Box<dyn AudioSource + Send>> {
    Ok(match kind {
        SourceKind::Replay(path) => {
            let clip = load_canonical(path)?;
            if looped {
                Box::new(LoopSource::new(clip))
            } else {
                Box::new(ReplaySource::new(clip))
            }
        }
        SourceKind::Stdin => Box::new(PcmReaderSource::new(std::io::stdin(), CANONICAL_RATE)),
        SourceKind::Mic => open_microphone()?,
        SourceKind::Demo => {
            let gestures: Vec<GestureClass> = (0..20).map(|i| GestureClass::ALL[i % NUM_CLASSES]).collect();
            let spec = StreamSpec::new(gestures, seed).with_noise(NoiseKind::Pink, NoiseLevel::Snr { db: 20.0 });
            Box::new(LoopSource::new(synthetic_stream(&spec)?.clip))
        }
    })
}

/// Loads the model, starts the pipeline and serves until Ctrl-C or, for a
/// finite source, until the source has ended and Ctrl-C arrives.
pub async fn run(opts: ServeOptions) -> Result<()> {
    let model_path =
        opts.model.clone().ok_or_else(|| wristgest_core::Error::ModelMissing("no --model given".into()))?;
    if !model_path.exists() {
        return Err(wristgest_core::Error::ModelMissing(model_path.display().to_string()).into());
    }
    let model = Arc::new(load_model(&model_path)?);
    let cfg = opts.pipeline_config()?;
    let model_id = model_path.file_stem().map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned());
    let state = Arc::new(ServiceState::new(
        model_id,
        cfg.detector.threshold.mode_name(),
        cfg.nms.epsilon,
        opts.capacity.unwrap_or(DEFAULT_CHANNEL_CAPACITY),
    ));
    let pipeline = GesturePipeline::new(model, cfg, CANONICAL_RATE)?;
    let source = open_source(&opts.source(), opts.looped, opts.seed.unwrap_or(0))?;

    let host = opts.host.clone().unwrap_or_else(|| "127.0.0.1".into());
    let listener = bind(&host, opts.port.unwrap_or(8080)).await?;
    tracing::info!(addr = %listener.local_addr()?, source = ?opts.source(), "serving");

    let pacing = if opts.fast { Pacing::Fast } else { Pacing::Realtime };
    let feed = spawn_feed(state.clone(), pipeline, source, pacing, 0.1);
    let app = router(state.clone(), opts.ui_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await?;
    state.close();
    if feed.is_finished() {
        let stats = join_feed(feed).await?;
        tracing::info!(?stats, "pipeline finished");
    }
    Ok(())
}
