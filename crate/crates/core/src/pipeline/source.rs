//! Audio sources and a synchronous driver loop.

use std::io::{ErrorKind, Read};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{GestureEvent, GesturePipeline, PipelineStats};
use crate::audio::AudioClip;
use crate::{Error, Result};

pub trait AudioSource {
    fn sample_rate_hz(&self) -> u32;

    /// Up to `max_samples` new samples; `None` once the source is exhausted.
    fn read_chunk(&mut self, max_samples: usize) -> Result<Option<Vec<f64>>>;
}

/// Plays back a clip from memory.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    clip: AudioClip,
    pos: usize,
}

impl ReplaySource {
    pub fn new(clip: AudioClip) -> Self {
        Self { clip, pos: 0 }
    }
}

impl AudioSource for ReplaySource {
    fn sample_rate_hz(&self) -> u32 {
        self.clip.sample_rate_hz
    }

    fn read_chunk(&mut self, max_samples: usize) -> Result<Option<Vec<f64>>> {
        if self.pos >= self.clip.len() {
            return Ok(None);
        }
        let end = (self.pos + max_samples.max(1)).min(self.clip.len());
        let out = self.clip.samples[self.pos..end].to_vec();
        self.pos = end;
        Ok(Some(out))
    }
}

/// Raw signed 16-bit little-endian mono PCM, e.g. piped from a recorder.
pub struct PcmReaderSource<R> {
    reader: R,
    sample_rate_hz: u32,
    carry: Option<u8>,
}

impl<R: Read> PcmReaderSource<R> {
    pub fn new(reader: R, sample_rate_hz: u32) -> Self {
        Self { reader, sample_rate_hz, carry: None }
    }
}

impl<R: Read> AudioSource for PcmReaderSource<R> {
    fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    fn read_chunk(&mut self, max_samples: usize) -> Result<Option<Vec<f64>>> {
        let mut buf = vec![0u8; 2 * max_samples.max(1)];
        let mut filled = 0;
        if let Some(b) = self.carry.take() {
            buf[0] = b;
            filled = 1;
        }
        while filled < buf.len() {
            match self.reader.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                Err(e) => return Err(Error::SourceLost(e.to_string())),
            }
        }
        if filled % 2 == 1 {
            self.carry = Some(buf[filled - 1]);
            filled -= 1;
        }
        if filled == 0 {
            return Ok(None);
        }
        Ok(Some(buf[..filled].chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0).collect()))
    }
}

/// Live capture is not built into this toolkit; pipe raw PCM into
/// [`PcmReaderSource`] instead.
pub fn open_microphone() -> Result<Box<dyn AudioSource + Send>> {
    Err(Error::SourceLost("no microphone backend is available; pipe 16 kHz s16le mono PCM to stdin instead".into()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pacing {
    /// As fast as the CPU allows; timestamps stay on the stream clock.
    #[default]
    Fast,
    /// Sleeps so stream time tracks wall time.
    Realtime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub events: Vec<GestureEvent>,
    pub stats: PipelineStats,
    pub stream_s: f64,
    pub elapsed_s: f64,
}

/// Feeds a source through the pipeline in `chunk_s` pieces until it ends.
pub fn run_source(
    pipeline: &mut GesturePipeline,
    source: &mut dyn AudioSource,
    pacing: Pacing,
    chunk_s: f64,
    mut on_event: impl FnMut(&GestureEvent),
) -> Result<RunSummary> {
    let rate = source.sample_rate_hz();
    if rate != pipeline.sample_rate_hz() {
        return Err(Error::RateMismatch { expected: pipeline.sample_rate_hz(), actual: rate });
    }
    let chunk = ((chunk_s * rate as f64).round() as usize).max(1);
    let start = Instant::now();
    let t0 = pipeline.stream_time();
    let mut events = Vec::new();
    while let Some(samples) = source.read_chunk(chunk)? {
        for e in pipeline.process_chunk(&samples)? {
            on_event(&e);
            events.push(e);
        }
        if pacing == Pacing::Realtime {
            let due = Duration::from_secs_f64(pipeline.stream_time() - t0);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                std::thread::sleep(wait);
            }
        }
    }
    Ok(RunSummary {
        events,
        stats: pipeline.stats(),
        stream_s: pipeline.stream_time() - t0,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}
