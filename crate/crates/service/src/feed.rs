use std::sync::Arc;
use std::time::{Duration, Instant};

use tokio::task::JoinHandle;
use wristgest_core::pipeline::{AudioSource, GesturePipeline, Pacing, PipelineStats};
use wristgest_core::wire::WireEvent;
use wristgest_core::AudioClip;

use crate::{Result, ServiceError, ServiceState};

/// Replays a clip forever.
#[derive(Debug, Clone)]
pub struct LoopSource {
    clip: AudioClip,
    pos: usize,
}

impl LoopSource {
    pub fn new(clip: AudioClip) -> Self {
        Self { clip, pos: 0 }
    }
}

impl AudioSource for LoopSource {
    fn sample_rate_hz(&self) -> u32 {
        self.clip.sample_rate_hz
    }

    fn read_chunk(&mut self, max_samples: usize) -> wristgest_core::Result<Option<Vec<f64>>> {
        if self.clip.is_empty() {
            return Ok(None);
        }
        let want = max_samples.max(1);
        let mut out = Vec::with_capacity(want);
        while out.len() < want {
            let end = (self.pos + want - out.len()).min(self.clip.len());
            out.extend_from_slice(&self.clip.samples[self.pos..end]);
            self.pos = if end == self.clip.len() { 0 } else { end };
        }
        Ok(Some(out))
    }
}

/// Runs the pipeline on a blocking thread until the source ends or the
/// service shuts down. Threshold changes posted to the state apply from the
/// next chunk on.
pub fn spawn_feed(
    state: Arc<ServiceState>,
    mut pipeline: GesturePipeline,
    mut source: Box<dyn AudioSource + Send>,
    pacing: Pacing,
    chunk_s: f64,
) -> JoinHandle<Result<PipelineStats>> {
    tokio::task::spawn_blocking(move || {
        let rate = source.sample_rate_hz();
        if rate != pipeline.sample_rate_hz() {
            return Err(
                wristgest_core::Error::RateMismatch { expected: pipeline.sample_rate_hz(), actual: rate }.into()
            );
        }
        let chunk = ((chunk_s * rate as f64).round() as usize).max(1);
        let mut epsilon = state.watch_epsilon();
        if pipeline.epsilon() != state.epsilon() {
            pipeline.set_epsilon(state.epsilon())?;
        }
        let mapping = pipeline.config().mapping;
        let start = Instant::now();
        let t0 = pipeline.stream_time();
        while !state.is_closing() {
            if epsilon.has_changed().unwrap_or(false) {
                let eps = *epsilon.borrow_and_update();
                match pipeline.set_epsilon(eps) {
                    Ok(()) => tracing::info!(epsilon = eps, "threshold updated"),
                    Err(e) => tracing::warn!(epsilon = eps, "threshold rejected: {e}"),
                }
            }
            let Some(samples) = source.read_chunk(chunk)? else {
                tracing::info!("audio source ended");
                break;
            };
            for e in pipeline.process_chunk(&samples)? {
                tracing::debug!(seq = e.seq, t = e.t, gesture = %e.gesture, p = e.p, "event");
                state.publish(WireEvent::from_event(&e, &mapping));
            }
            if pacing == Pacing::Realtime {
                let due = Duration::from_secs_f64(pipeline.stream_time() - t0);
                if let Some(wait) = due.checked_sub(start.elapsed()) {
                    std::thread::sleep(wait);
                }
            }
        }
        Ok(pipeline.stats())
    })
}

/// Flattens the join result of [`spawn_feed`].
pub(crate) async fn join_feed(handle: JoinHandle<Result<PipelineStats>>) -> Result<PipelineStats> {
    handle.await.map_err(|e| ServiceError::Join(e.to_string()))?
}
