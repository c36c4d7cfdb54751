//! Long synthetic recordings with known gesture positions, for exercising
//! the streaming stages.

use serde::{Deserialize, Serialize};

use crate::audio::{mean_square, AudioClip, CANONICAL_RATE};
use crate::augment::{synth_noise, synth_sample, NoiseKind, SYNTH_CLIP_S};
use crate::gesture::GestureClass;
use crate::rngutil::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseLevel {
    /// Mean gesture-clip power over noise power, in dB.
    Snr {
        db: f64,
    },
    Rms {
        rms: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub gestures: Vec<GestureClass>,
    /// Distance between consecutive gesture clip starts.
    pub spacing_s: f64,
    /// Audio before the first and after the last gesture clip.
    pub lead_s: f64,
    pub tail_s: f64,
    pub noise: Option<(NoiseKind, NoiseLevel)>,
    pub seed: u64,
}

impl StreamSpec {
    pub fn new(gestures: Vec<GestureClass>, seed: u64) -> Self {
        Self { gestures, spacing_s: 2.0, lead_s: 2.0, tail_s: 2.0, noise: None, seed }
    }

    pub fn with_noise(mut self, kind: NoiseKind, level: NoiseLevel) -> Self {
        self.noise = Some((kind, level));
        self
    }
}

/// Where a gesture was placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureMark {
    pub class: GestureClass,
    /// Stream time of the gesture clip's first sample.
    pub clip_start: f64,
    /// Nominal gesture centre.
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticStream {
    pub clip: AudioClip,
    pub marks: Vec<GestureMark>,
}

pub fn synthetic_stream(spec: &StreamSpec) -> Result<SyntheticStream> {
    if !(spec.spacing_s >= SYNTH_CLIP_S && spec.lead_s >= 0.0 && spec.tail_s >= 0.0) {
        return Err(Error::InvalidConfig("gesture clips must not overlap".into()));
    }
    let rate = CANONICAL_RATE as f64;
    let n_gest = spec.gestures.len();
    let span = if n_gest == 0 { 0.0 } else { (n_gest - 1) as f64 * spec.spacing_s + SYNTH_CLIP_S };
    let len = ((spec.lead_s + span + spec.tail_s) * rate).round() as usize;
    let mut samples = vec![0.0; len.max(1)];
    let mut marks = Vec::with_capacity(n_gest);
    let mut gesture_power = 0.0;
    for (i, &class) in spec.gestures.iter().enumerate() {
        let clip = synth_sample(class, derive_seed(spec.seed, i as u64));
        gesture_power += clip.power();
        let clip_start = spec.lead_s + i as f64 * spec.spacing_s;
        let at = (clip_start * rate).round() as usize;
        samples[at..at + clip.len()].iter_mut().zip(&clip.samples).for_each(|(s, g)| *s += g);
        marks.push(GestureMark { class, clip_start, t: clip_start + SYNTH_CLIP_S / 2.0 });
    }
    if let Some((kind, level)) = spec.noise {
        let noise = synth_noise(kind, samples.len() as f64 / rate, derive_seed(spec.seed, u64::MAX));
        let p_noise = mean_square(&noise.samples);
        let target_rms = match level {
            NoiseLevel::Rms { rms } => rms,
            NoiseLevel::Snr { db } => {
                if n_gest == 0 {
                    return Err(Error::InvalidConfig("SNR needs at least one gesture".into()));
                }
                (gesture_power / n_gest as f64 / 10f64.powf(db / 10.0)).sqrt()
            }
        };
        let gain = if p_noise > 0.0 { target_rms / p_noise.sqrt() } else { 0.0 };
        samples.iter_mut().zip(&noise.samples).for_each(|(s, n)| *s += gain * n);
    }
    let mut clip = AudioClip { samples, sample_rate_hz: CANONICAL_RATE };
    clip.hard_clip();
    Ok(SyntheticStream { clip, marks })
}
