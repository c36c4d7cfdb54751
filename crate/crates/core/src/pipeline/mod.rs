//! The two-stage streaming recogniser.
//!
//! Audio arrives in arbitrary chunks and is consumed in `step_s` ticks. Each
//! tick is band-pass filtered with persistent state, pushed into a ring
//! buffer and scanned by the amplitude detector. Only when the detector fires
//! are MFCC windows computed and the model run; suppression then reduces the
//! eleven window predictions to at most one event.

mod action;
mod source;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use action::{map_action, Action, ActionMapping, AppContext};
pub use source::{open_microphone, run_source, AudioSource, Pacing, PcmReaderSource, ReplaySource, RunSummary};

use crate::detector::{CandidateSegment, DetectorConfig, EventDetector};
use crate::eval::{nms, Detection, NmsConfig};
use crate::features::{MfccConfig, MfccExtractor, WINDOW_S};
use crate::filter::{BiquadCascade, FilterState};
use crate::gesture::{GestureClass, NUM_CLASSES};
use crate::model::CnnModel;
use crate::ring::RingBuffer;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub detector: DetectorConfig,
    pub nms: NmsConfig,
    pub mapping: ActionMapping,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.nms.validate()
    }
}

/// One recognised gesture on the stream clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub seq: u64,
    /// Stream seconds of the winning window's centre.
    pub t: f64,
    pub gesture: GestureClass,
    pub p: f64,
    pub probs: [f64; NUM_CLASSES],
}

/// Every first-stage trigger and what the model made of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub t_start: f64,
    pub peak_amplitude: f64,
    pub trigger_level: f64,
    /// Highest class probability over the candidate's windows.
    pub max_prob: f64,
    pub class: GestureClass,
    /// Sequence number of the event this trigger produced, if any.
    pub event_seq: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub samples: u64,
    pub ticks: u64,
    pub triggers: u64,
    /// Windows passed through the model.
    pub inferences: u64,
    pub events: u64,
}

pub struct GesturePipeline {
    model: Arc<CnnModel>,
    cfg: PipelineConfig,
    filter: BiquadCascade,
    filter_state: FilterState,
    mfcc: MfccExtractor,
    ring: RingBuffer,
    detector: EventDetector,
    step: usize,
    pending: Vec<f64>,
    next_seq: u64,
    stats: PipelineStats,
    triggers: Vec<TriggerRecord>,
}

impl GesturePipeline {
    pub fn new(model: Arc<CnnModel>, cfg: PipelineConfig, sample_rate_hz: u32) -> Result<Self> {
        cfg.validate()?;
        let filter = BiquadCascade::gesture_band(sample_rate_hz)?;
        let mfcc = MfccExtractor::new(MfccConfig::default(), sample_rate_hz)?;
        if mfcc.feature_len() != model.arch.input_len() {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} inputs, features have {}",
                model.arch.input_len(),
                mfcc.feature_len()
            )));
        }
        let step = ((cfg.detector.step_s * sample_rate_hz as f64).round() as usize).max(1);
        Ok(Self {
            filter_state: filter.new_state(),
            filter,
            mfcc,
            ring: RingBuffer::new(cfg.detector.window_s, sample_rate_hz),
            detector: EventDetector::new(cfg.detector, sample_rate_hz)?,
            model,
            cfg,
            step,
            pending: Vec::with_capacity(step),
            next_seq: 0,
            stats: PipelineStats::default(),
            triggers: Vec::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn model(&self) -> &Arc<CnnModel> {
        &self.model
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.ring.sample_rate_hz()
    }

    pub fn epsilon(&self) -> f64 {
        self.cfg.nms.epsilon
    }

    /// Changes the event threshold from the next candidate on.
    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<()> {
        let nms = self.cfg.nms.with_epsilon(epsilon);
        nms.validate()?;
        self.cfg.nms = nms;
        Ok(())
    }

    pub fn stats(&self) -> PipelineStats {
        self.stats
    }

    /// Stream seconds consumed so far, including a partial tick.
    pub fn stream_time(&self) -> f64 {
        self.stats.samples as f64 / self.sample_rate_hz() as f64
    }

    /// Drains the trigger log.
    pub fn take_triggers(&mut self) -> Vec<TriggerRecord> {
        std::mem::take(&mut self.triggers)
    }

    /// Feeds raw samples at the pipeline's rate. Returns the events completed
    /// by whole ticks; a trailing partial tick waits for more audio.
    pub fn process_chunk(&mut self, chunk: &[f64]) -> Result<Vec<GestureEvent>> {
        self.stats.samples += chunk.len() as u64;
        let mut events = Vec::new();
        let mut rest = chunk;
        while !rest.is_empty() {
            let take = (self.step - self.pending.len()).min(rest.len());
            self.pending.extend_from_slice(&rest[..take]);
            rest = &rest[take..];
            if self.pending.len() == self.step {
                let mut tick = std::mem::take(&mut self.pending);
                self.filter.process_in_place(&mut self.filter_state, &mut tick);
                self.ring.push(&tick)?;
                tick.clear();
                self.pending = tick;
                self.stats.ticks += 1;
                if let Some(seg) = self.detector.scan(&self.ring) {
                    events.extend(self.classify(&seg)?);
                }
            }
        }
        Ok(events)
    }

    fn classify(&mut self, seg: &CandidateSegment) -> Result<Option<GestureEvent>> {
        let windows = self.mfcc.segment_windows(&seg.samples)?;
        let x: Vec<f64> = windows.iter().flat_map(|(_, f)| f.values.iter().copied()).collect();
        let preds = self.model.predict_batch(&x)?;
        self.stats.triggers += 1;
        self.stats.inferences += preds.len() as u64;
        let dets: Vec<Detection> = windows
            .iter()
            .zip(&preds)
            .map(|((offset, _), p)| Detection {
                t: seg.t_start + offset + WINDOW_S / 2.0,
                class: p.class,
                p: p.max_prob,
                probs: p.probs,
            })
            .collect();
        let best = dets
            .iter()
            .max_by(|a, b| a.p.total_cmp(&b.p).then(b.t.total_cmp(&a.t)))
            .expect("a segment always has windows");
        let mut record = TriggerRecord {
            t_start: seg.t_start,
            peak_amplitude: seg.peak_amplitude,
            trigger_level: seg.trigger_level,
            max_prob: best.p,
            class: best.class,
            event_seq: None,
        };
        let top = nms(&dets, &self.cfg.nms).into_iter().max_by(|a, b| a.p.total_cmp(&b.p).then(b.t.total_cmp(&a.t)));
        let event = top.map(|d| {
            let e = GestureEvent { seq: self.next_seq, t: d.t, gesture: d.class, p: d.p, probs: d.probs };
            self.next_seq += 1;
            self.stats.events += 1;
            record.event_seq = Some(e.seq);
            e
        });
        self.triggers.push(record);
        Ok(event)
    }
}
