//! Noise augmentation and the synthetic corpus generators.
//!
//! Every clean clip gets `ratio` noisy copies, each mixing in a random
//! excerpt of a random noise clip at a random SNR. Copies are described by
//! an [`AugmentPlan`] first and rendered on demand, so large ratios never
//! need every mixed waveform in memory at once.

mod synth;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use synth::{
    synth_gesture, synth_noise, synth_sample, Jitter, NoiseKind, SynthGestureSpec, NOISE_RMS, SYNTH_CLIP_S,
    TEMPLATE_PEAK,
};

use crate::audio::{mean_square, AudioClip};
use crate::gesture::GestureClass;
use crate::rngutil::{child_rng, rng};
use crate::{Error, Result};

/// Clean power below this leaves the SNR undefined.
pub const MIN_CLEAN_POWER: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Noisy copies per clean sample.
    pub ratio: usize,
    pub snr_db_range: [f64; 2],
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { ratio: 10, snr_db_range: [0.0, 20.0], seed: 0 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ratio == 0 {
            return Err(Error::InvalidConfig("augmentation ratio must be >= 1".into()));
        }
        let [lo, hi] = self.snr_db_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidConfig(format!("bad SNR range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// A mixed clip together with what went into it.
#[derive(Debug, Clone, PartialEq)]
pub struct Mix {
    pub clip: AudioClip,
    pub noise_offset: usize,
    pub noise_gain: f64,
    pub clipped_samples: usize,
}

/// Mixes `clean` with a seeded random excerpt of `noise` at `snr_db`.
pub fn mix_at_snr(clean: &AudioClip, noise: &AudioClip, snr_db: f64, seed: u64) -> Result<AudioClip> {
    Ok(mix_at_snr_detailed(clean, noise, snr_db, seed)?.clip)
}

pub fn mix_at_snr_detailed(clean: &AudioClip, noise: &AudioClip, snr_db: f64, seed: u64) -> Result<Mix> {
    if noise.sample_rate_hz != clean.sample_rate_hz {
        return Err(Error::RateMismatch { expected: clean.sample_rate_hz, actual: noise.sample_rate_hz });
    }
    if noise.len() < clean.len() {
        return Err(Error::NoiseTooShort { noise: noise.len(), clean: clean.len() });
    }
    let p_clean = clean.power();
    if p_clean < MIN_CLEAN_POWER {
        return Err(Error::SilentClean);
    }
    let offset = rng(seed).random_range(0..=noise.len() - clean.len());
    let excerpt = &noise.samples[offset..offset + clean.len()];
    let p_noise = mean_square(excerpt);
    let noise_gain = if p_noise > 0.0 { (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt() } else { 0.0 };
    let mut clip = AudioClip {
        samples: clean.samples.iter().zip(excerpt).map(|(c, n)| c + noise_gain * n).collect(),
        sample_rate_hz: clean.sample_rate_hz,
    };
    let clipped_samples = clip.hard_clip();
    Ok(Mix { clip, noise_offset: offset, noise_gain, clipped_samples })
}

/// One noisy copy, before rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    /// Index into the clean set.
    pub source: usize,
    /// Copy number within the source, `0..ratio`.
    pub copy: usize,
    /// Index into the noise corpus.
    pub noise: usize,
    pub snr_db: f64,
    /// Seed for the noise excerpt offset.
    pub mix_seed: u64,
}

impl AugmentPlan {
    pub fn render(&self, clean: &AudioClip, noise: &AudioClip) -> Result<AudioClip> {
        mix_at_snr(clean, noise, self.snr_db, self.mix_seed)
    }
}

/// Draws `ratio` independent (noise, SNR, offset) triples per clean sample.
/// Record `i` uses a generator derived from `(cfg.seed, i)` only, so plans
/// are stable under reordering and parallel rendering.
pub fn plan_augmentation(n_clean: usize, n_noise: usize, cfg: &AugmentConfig) -> Result<Vec<AugmentPlan>> {
    cfg.validate()?;
    if n_clean == 0 {
        return Err(Error::EmptyBatch);
    }
    if n_noise == 0 {
        return Err(Error::InvalidConfig("noise corpus is empty".into()));
    }
    let [lo, hi] = cfg.snr_db_range;
    Ok((0..n_clean * cfg.ratio)
        .map(|i| {
            let mut r = child_rng(cfg.seed, i as u64);
            AugmentPlan {
                source: i / cfg.ratio,
                copy: i % cfg.ratio,
                noise: r.random_range(0..n_noise),
                snr_db: if hi > lo { r.random_range(lo..=hi) } else { lo },
                mix_seed: r.random(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip {
    pub id: String,
    pub label: GestureClass,
    pub clip: AudioClip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedClip {
    pub id: String,
    pub label: GestureClass,
    pub clip: AudioClip,
    /// Clean parent id; `None` for retained originals.
    pub source_id: Option<String>,
    pub noise_id: Option<String>,
    pub snr_db: Option<f64>,
}

/// Originals followed by `ratio` noisy copies of each.
pub fn augment_dataset(
    clean_set: &[LabeledClip],
    noise_corpus: &[(String, AudioClip)],
    cfg: &AugmentConfig,
) -> Result<Vec<AugmentedClip>> {
    let plans = plan_augmentation(clean_set.len(), noise_corpus.len(), cfg)?;
    let mut out: Vec<AugmentedClip> = clean_set
        .iter()
        .map(|c| AugmentedClip {
            id: c.id.clone(),
            label: c.label,
            clip: c.clip.clone(),
            source_id: None,
            noise_id: None,
            snr_db: None,
        })
        .collect();
    out.reserve(plans.len());
    for p in plans {
        let src = &clean_set[p.source];
        let (noise_id, noise) = &noise_corpus[p.noise];
        out.push(AugmentedClip {
            id: augmented_id(&src.id, p.copy),
            label: src.label,
            clip: p.render(&src.clip, noise)?,
            source_id: Some(src.id.clone()),
            noise_id: Some(noise_id.clone()),
            snr_db: Some(p.snr_db),
        });
    }
    Ok(out)
}

pub fn augmented_id(source_id: &str, copy: usize) -> String {
    format!("{source_id}_aug{copy:03}")
}
