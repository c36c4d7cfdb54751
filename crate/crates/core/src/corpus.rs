//! Corpora on disk: WAV files plus a JSON-lines manifest.
//!
//! ```text
//! <dir>/manifest.jsonl
//! <dir>/clips/<class>_<nnnn>.wav
//! <dir>/aug/<id>.wav
//! <dir>/noise/train/<kind>_<n>.wav
//! <dir>/noise/test/<kind>_<n>.wav
//! ```

use std::path::{Path, PathBuf};

use crate::audio::{load_canonical, save_wav, AudioClip, CANONICAL_RATE};
use crate::augment::{plan_augmentation, AugmentConfig};
use crate::dataset::{augmented_record, DatasetManifest, SampleRecord, SampleSource, Split};
use crate::eval::{build_features, synthetic_corpus, CorpusConfig, ExperimentData, FeatureConfig, LabeledAudio};
use crate::features::ClipFeaturizer;
use crate::model::{train_with_progress, CnnModel, EpochStats, FeatureSet, History, TrainConfig};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const TRAIN_NOISE_DIR: &str = "noise/train";
pub const TEST_NOISE_DIR: &str = "noise/test";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Writes the in-memory synthetic corpus under `out_dir`: one WAV per clip
/// with its split recorded in the manifest, and both noise pools.
pub fn write_synthetic_corpus(out_dir: &Path, cfg: &CorpusConfig) -> Result<DatasetManifest> {
    let data = synthetic_corpus(cfg)?;
    create_dir(&out_dir.join("clips"))?;
    let mut next = [0usize; crate::gesture::NUM_CLASSES];
    let mut records = Vec::new();
    for (split, clips) in [(Split::Train, &data.train), (Split::Val, &data.val), (Split::Test, &data.test)] {
        for (label, clip) in clips {
            let n = &mut next[label.index()];
            let id = format!("{label}_{n:04}");
            *n += 1;
            let path = PathBuf::from("clips").join(format!("{id}.wav"));
            save_wav(clip, out_dir.join(&path))?;
            records.push(SampleRecord {
                id,
                path,
                label: *label,
                split,
                source: SampleSource::Synthetic,
                parent_id: None,
                snr_db: None,
                noise_id: None,
                recorder: "synth".into(),
            });
        }
    }
    let names: Vec<String> =
        cfg.noise_kinds.iter().flat_map(|k| (0..cfg.noise_clips_per_kind).map(move |j| format!("{k}_{j}"))).collect();
    for (dir, pool) in [(TRAIN_NOISE_DIR, &data.train_noise), (TEST_NOISE_DIR, &data.test_noise)] {
        create_dir(&out_dir.join(dir))?;
        for (name, clip) in names.iter().zip(pool) {
            save_wav(clip, out_dir.join(dir).join(format!("{name}.wav")))?;
        }
    }
    let mut manifest = DatasetManifest::new(records);
    manifest.created_with = serde_json::json!({ "synth": cfg });
    Ok(manifest)
}

/// Every `.wav` in `dir`, sorted by file name, keyed by file stem.
pub fn load_noise_dir(dir: &Path) -> Result<Vec<(String, AudioClip)>> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, load_canonical(&p)?))
        })
        .collect()
}

/// Adds `cfg.ratio` noisy copies of every original record in `splits`,
/// writing them to `<base_dir>/aug/`. Existing augmented records are kept.
pub fn augment_corpus(
    manifest: &DatasetManifest,
    base_dir: &Path,
    noise: &[(String, AudioClip)],
    cfg: &AugmentConfig,
    splits: &[Split],
) -> Result<DatasetManifest> {
    let originals: Vec<&SampleRecord> =
        manifest.records.iter().filter(|r| r.is_original() && splits.contains(&r.split)).collect();
    let plans = plan_augmentation(originals.len(), noise.len(), cfg)?;
    create_dir(&base_dir.join("aug"))?;
    let mut records = manifest.records.clone();
    let mut loaded: Option<(usize, AudioClip)> = None;
    for p in &plans {
        let parent = originals[p.source];
        // Plans come grouped by source, so each parent is read once.
        if loaded.as_ref().is_none_or(|(i, _)| *i != p.source) {
            loaded = Some((p.source, load_canonical(DatasetManifest::resolve(base_dir, parent))?));
        }
        let clean = &loaded.as_ref().expect("loaded above").1;
        let (noise_id, noise_clip) = &noise[p.noise];
        let rec = augmented_record(parent, p, noise_id, PathBuf::new());
        let path = PathBuf::from("aug").join(format!("{}.wav", rec.id));
        save_wav(&p.render(clean, noise_clip)?, base_dir.join(&path))?;
        records.push(SampleRecord { path, ..rec });
    }
    let mut out = DatasetManifest::new(records);
    out.created_with = serde_json::json!({ "source": manifest.created_with, "augment": cfg });
    Ok(out)
}

/// Records of one split, loaded lazily at the canonical rate.
pub fn split_clips<'a>(
    manifest: &'a DatasetManifest,
    base_dir: &'a Path,
    split: Split,
    source: Option<SampleSource>,
) -> impl Iterator<Item = Result<LabeledAudio>> + 'a {
    manifest
        .select(split, source)
        .into_iter()
        .map(move |r| Ok((r.label, load_canonical(DatasetManifest::resolve(base_dir, r))?)))
}

pub fn split_features(
    manifest: &DatasetManifest,
    base_dir: &Path,
    split: Split,
    features: &FeatureConfig,
) -> Result<FeatureSet> {
    let featurizer = ClipFeaturizer::new(CANONICAL_RATE)?;
    let set = build_features(split_clips(manifest, base_dir, split, None), &featurizer, features)?;
    if set.is_empty() {
        return Err(Error::EmptySplit(split.to_string()));
    }
    Ok(set)
}

/// Trains on every training record (clean and augmented) and validates on
/// every validation record.
pub fn train_from_manifest(
    manifest: &DatasetManifest,
    base_dir: &Path,
    cfg: &TrainConfig,
    features: &FeatureConfig,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<(CnnModel, History)> {
    let train_set = split_features(manifest, base_dir, Split::Train, features)?;
    let val_set = split_features(manifest, base_dir, Split::Val, features)?;
    train_with_progress(CnnModel::new(cfg.seed), &train_set, &val_set, cfg, on_epoch)
}

/// Rebuilds experiment data from a corpus written by
/// [`write_synthetic_corpus`] (or laid out the same way): original clips per
/// split plus the two noise pools.
pub fn load_experiment_data(manifest: &DatasetManifest, base_dir: &Path) -> Result<ExperimentData> {
    let originals = |split: Split| -> Result<Vec<LabeledAudio>> {
        manifest
            .select(split, None)
            .into_iter()
            .filter(|r| r.is_original())
            .map(|r| Ok((r.label, load_canonical(DatasetManifest::resolve(base_dir, r))?)))
            .collect()
    };
    let pool = |dir: &str| -> Result<Vec<AudioClip>> {
        Ok(load_noise_dir(&base_dir.join(dir))?.into_iter().map(|(_, c)| c).collect())
    };
    Ok(ExperimentData {
        train: originals(Split::Train)?,
        val: originals(Split::Val)?,
        test: originals(Split::Test)?,
        train_noise: pool(TRAIN_NOISE_DIR)?,
        test_noise: pool(TEST_NOISE_DIR)?,
    })
}
