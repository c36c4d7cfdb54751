//! Shared plumbing for the offline experiments: a split clean corpus with
//! separate train/test noise, feature building and clean-vs-noisy training.

use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_clips, EvalReport};
use super::nms::NmsConfig;
use crate::audio::{AudioClip, CANONICAL_RATE};
use crate::augment::{plan_augmentation, synth_noise, synth_sample, AugmentConfig, NoiseKind};
use crate::dataset::split_counts;
use crate::features::ClipFeaturizer;
use crate::gesture::{GestureClass, NUM_CLASSES};
use crate::model::{train_with_progress, CnnModel, EpochStats, FeatureSet, History, TrainConfig};
use crate::rngutil::derive_seed;
use crate::{Error, Result};

pub type LabeledAudio = (GestureClass, AudioClip);

/// Clean clips per split plus two disjoint noise pools: one mixed into
/// training and validation data, one reserved for the noisy test set.
#[derive(Debug, Clone, Default)]
pub struct ExperimentData {
    pub train: Vec<LabeledAudio>,
    pub val: Vec<LabeledAudio>,
    pub test: Vec<LabeledAudio>,
    pub train_noise: Vec<AudioClip>,
    pub test_noise: Vec<AudioClip>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub per_class: usize,
    pub noise_kinds: Vec<NoiseKind>,
    /// Clips per noise kind in each pool.
    pub noise_clips_per_kind: usize,
    pub noise_duration_s: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            per_class: 200,
            noise_kinds: NoiseKind::ALL.to_vec(),
            noise_clips_per_kind: 2,
            noise_duration_s: 15.0,
            seed: 0,
        }
    }
}

/// Generates a synthetic corpus split 70/10/20 per class.
pub fn synthetic_corpus(cfg: &CorpusConfig) -> Result<ExperimentData> {
    if cfg.noise_kinds.is_empty() || cfg.noise_clips_per_kind == 0 {
        return Err(Error::InvalidConfig("noise pool is empty".into()));
    }
    if cfg.noise_duration_s.is_nan() || cfg.noise_duration_s < 1.0 {
        return Err(Error::InvalidConfig("noise clips must last at least 1 s".into()));
    }
    let counts = split_counts(&[cfg.per_class; NUM_CLASSES]);
    let mut data = ExperimentData::default();
    for (c, class) in GestureClass::ALL.into_iter().enumerate() {
        let (n_train, n_val, _) = counts[c];
        for i in 0..cfg.per_class {
            let clip = synth_sample(class, derive_seed(cfg.seed, (c * 1_000_000 + i) as u64));
            let dest = if i < n_train {
                &mut data.train
            } else if i < n_train + n_val {
                &mut data.val
            } else {
                &mut data.test
            };
            dest.push((class, clip));
        }
    }
    let pool = |tag: u64| -> Vec<AudioClip> {
        let base = derive_seed(cfg.seed, tag);
        cfg.noise_kinds
            .iter()
            .enumerate()
            .flat_map(|(k, &kind)| {
                (0..cfg.noise_clips_per_kind)
                    .map(move |j| synth_noise(kind, cfg.noise_duration_s, derive_seed(base, (k * 1000 + j) as u64)))
            })
            .collect()
    };
    data.train_noise = pool(0xA11CE);
    data.test_noise = pool(0xB0B);
    Ok(data)
}

pub fn clean_copies(clips: &[LabeledAudio]) -> impl Iterator<Item = Result<LabeledAudio>> + '_ {
    clips.iter().map(|(l, c)| Ok((*l, c.clone())))
}

/// Noisy copies of `clips`, rendered one at a time.
pub fn noisy_copies<'a>(
    clips: &'a [LabeledAudio],
    noise: &'a [AudioClip],
    cfg: &AugmentConfig,
) -> Result<impl Iterator<Item = Result<LabeledAudio>> + 'a> {
    let plans = plan_augmentation(clips.len(), noise.len(), cfg)?;
    Ok(plans.into_iter().map(move |p| {
        let (label, clean) = &clips[p.source];
        Ok((*label, p.render(clean, &noise[p.noise])?))
    }))
}

/// Which windows of each clip become training samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub window_indices: Vec<usize>,
}

impl Default for FeatureConfig {
    /// The centred window, where a segmented gesture sits.
    fn default() -> Self {
        Self { window_indices: vec![5] }
    }
}

pub fn build_features<I>(clips: I, featurizer: &ClipFeaturizer, cfg: &FeatureConfig) -> Result<FeatureSet>
where
    I: IntoIterator<Item = Result<LabeledAudio>>,
{
    let mut set = FeatureSet::new(featurizer.extractor().feature_len());
    for item in clips {
        let (label, clip) = item?;
        for frame in featurizer.windows_at(&clip, &cfg.window_indices)? {
            set.push(&frame.values, label.index());
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub features: FeatureConfig,
    pub snr_db_range: [f64; 2],
    /// Validation copies per clip are capped at this ratio.
    pub max_val_ratio: usize,
    /// Noisy copies per test clip in the noisy condition.
    pub noisy_test_copies: usize,
    pub nms: NmsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            features: FeatureConfig::default(),
            snr_db_range: [0.0, 20.0],
            max_val_ratio: 10,
            noisy_test_copies: 5,
            nms: NmsConfig::default(),
        }
    }
}

impl ExperimentConfig {
    fn augment(&self, ratio: usize, stream: u64) -> AugmentConfig {
        AugmentConfig { ratio, snr_db_range: self.snr_db_range, seed: derive_seed(self.train.seed, stream) }
    }
}

/// Trains on the clean training clips plus `ratio` noisy copies of each
/// (`ratio == 0` trains on clean clips only). Validation mirrors the
/// training mix with at most `max_val_ratio` copies.
pub fn train_with_ratio(
    data: &ExperimentData,
    ratio: usize,
    cfg: &ExperimentConfig,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<(CnnModel, History)> {
    let featurizer = ClipFeaturizer::new(CANONICAL_RATE)?;
    let mut train_set = build_features(clean_copies(&data.train), &featurizer, &cfg.features)?;
    let mut val_set = build_features(clean_copies(&data.val), &featurizer, &cfg.features)?;
    if ratio > 0 {
        let extra = build_features(
            noisy_copies(&data.train, &data.train_noise, &cfg.augment(ratio, 1))?,
            &featurizer,
            &cfg.features,
        )?;
        train_set.extend(&extra);
        let val_ratio = ratio.min(cfg.max_val_ratio).max(1);
        let extra = build_features(
            noisy_copies(&data.val, &data.train_noise, &cfg.augment(val_ratio, 2))?,
            &featurizer,
            &cfg.features,
        )?;
        val_set.extend(&extra);
    }
    train_with_progress(CnnModel::new(cfg.train.seed), &train_set, &val_set, &cfg.train, on_epoch)
}

/// Clip-level report on the clean test clips.
pub fn evaluate_clean(model: &CnnModel, data: &ExperimentData, cfg: &ExperimentConfig) -> Result<EvalReport> {
    evaluate_clips(model, clean_copies(&data.test), &cfg.nms)
}

/// Clip-level report on noisy copies of the test clips, mixed from the
/// held-out noise pool with a fixed seed so every model sees the same set.
pub fn evaluate_noisy(model: &CnnModel, data: &ExperimentData, cfg: &ExperimentConfig) -> Result<EvalReport> {
    let aug = cfg.augment(cfg.noisy_test_copies, 3);
    evaluate_clips(model, noisy_copies(&data.test, &data.test_noise, &aug)?, &cfg.nms)
}
