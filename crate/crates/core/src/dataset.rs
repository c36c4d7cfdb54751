//! Sample records, JSON-lines manifests, splitting and auto-segmentation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::augment::{augmented_id, AugmentPlan};
use crate::detector::{median_abs, DetectorConfig, Threshold, MIN_TRIGGER_LEVEL};
use crate::filter::{apply, BiquadCascade};
use crate::gesture::{GestureClass, NUM_CLASSES};
use crate::rngutil::{derive_seed, rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    Clean,
    Augmented,
    Synthetic,
}

impl SampleSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleSource::Clean => "clean",
            SampleSource::Augmented => "augmented",
            SampleSource::Synthetic => "synthetic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub path: PathBuf,
    pub label: GestureClass,
    pub split: Split,
    pub source: SampleSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_id: Option<String>,
    #[serde(default)]
    pub recorder: String,
}

impl SampleRecord {
    pub fn is_original(&self) -> bool {
        self.source != SampleSource::Augmented
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub records: Vec<SampleRecord>,
    /// Free-form snapshot of the settings and seeds that produced the set.
    #[serde(default)]
    pub created_with: serde_json::Value,
}

impl DatasetManifest {
    pub fn new(records: Vec<SampleRecord>) -> Self {
        Self { records, created_with: serde_json::Value::Null }
    }

    pub fn class_set(&self) -> [GestureClass; NUM_CLASSES] {
        GestureClass::ALL
    }

    pub fn select(&self, split: Split, source: Option<SampleSource>) -> Vec<&SampleRecord> {
        self.records.iter().filter(|r| r.split == split && source.is_none_or(|s| r.source == s)).collect()
    }

    /// Resolves a record path against the manifest's directory.
    pub fn resolve(base_dir: &Path, record: &SampleRecord) -> PathBuf {
        if record.path.is_absolute() {
            record.path.clone()
        } else {
            base_dir.join(&record.path)
        }
    }

    pub fn summary(&self) -> ManifestSummary {
        let mut s = ManifestSummary::default();
        for r in &self.records {
            *s.per_class.entry(r.label).or_default() += 1;
            *s.per_split.entry(r.split).or_default() += 1;
            *s.per_source.entry(r.source).or_default() += 1;
            *s.per_split_source.entry((r.split, r.source)).or_default() += 1;
        }
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ManifestSummary {
    pub per_class: BTreeMap<GestureClass, usize>,
    pub per_split: BTreeMap<Split, usize>,
    pub per_source: BTreeMap<SampleSource, usize>,
    pub per_split_source: BTreeMap<(Split, SampleSource), usize>,
}

impl ManifestSummary {
    pub fn count(&self, split: Split, source: SampleSource) -> usize {
        self.per_split_source.get(&(split, source)).copied().unwrap_or(0)
    }
}

impl fmt::Display for ManifestSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12}{:>8}{:>8}{:>8}{:>8}", "source", "train", "val", "test", "total")?;
        for src in [SampleSource::Clean, SampleSource::Synthetic, SampleSource::Augmented] {
            let row: Vec<usize> = Split::ALL.iter().map(|&sp| self.count(sp, src)).collect();
            let total: usize = row.iter().sum();
            if total > 0 {
                writeln!(f, "{:<12}{:>8}{:>8}{:>8}{:>8}", src.as_str(), row[0], row[1], row[2], total)?;
            }
        }
        for (class, n) in &self.per_class {
            writeln!(f, "  {class:<10} {n}")?;
        }
        Ok(())
    }
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in &manifest.records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    if !manifest.created_with.is_null() {
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&manifest.created_with)?)?;
    }
    Ok(())
}

/// `manifest.jsonl` -> `manifest.meta.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord =
            serde_json::from_str(&line).map_err(|e| Error::InvalidManifest(format!("line {}: {e}", n + 1)))?;
        records.push(rec);
    }
    let sidecar = sidecar_path(path);
    let created_with = if sidecar.exists() {
        serde_json::from_str(&std::fs::read_to_string(sidecar)?)?
    } else {
        serde_json::Value::Null
    };
    Ok(DatasetManifest { records, created_with })
}

/// Checks ids, parent links, split hygiene and (optionally) file presence
/// and split proportions.
pub fn validate_records(
    records: &[SampleRecord],
    base_dir: Option<&Path>,
    check_proportions: bool,
) -> Result<ManifestSummary> {
    let mut by_id: HashMap<&str, &SampleRecord> = HashMap::with_capacity(records.len());
    for r in records {
        if by_id.insert(r.id.as_str(), r).is_some() {
            return Err(Error::DuplicateId(r.id.clone()));
        }
    }
    for r in records {
        match (r.source, &r.parent_id) {
            (SampleSource::Augmented, Some(parent)) => {
                let p = by_id
                    .get(parent.as_str())
                    .ok_or_else(|| Error::InvalidManifest(format!("'{}' names unknown parent '{parent}'", r.id)))?;
                if p.split != r.split {
                    return Err(Error::SplitLeak {
                        child: r.id.clone(),
                        parent: parent.clone(),
                        child_split: r.split.to_string(),
                        parent_split: p.split.to_string(),
                    });
                }
                if p.label != r.label {
                    return Err(Error::InvalidManifest(format!("'{}' changes its parent's label", r.id)));
                }
                if r.snr_db.is_none() {
                    return Err(Error::InvalidManifest(format!("augmented record '{}' lacks snr_db", r.id)));
                }
            }
            (SampleSource::Augmented, None) => {
                return Err(Error::InvalidManifest(format!("augmented record '{}' lacks parent_id", r.id)));
            }
            (_, Some(_)) => {
                return Err(Error::InvalidManifest(format!("original record '{}' has a parent_id", r.id)));
            }
            _ => {}
        }
        if let Some(dir) = base_dir {
            let path = if r.path.is_absolute() { r.path.clone() } else { dir.join(&r.path) };
            if !path.exists() {
                return Err(Error::MissingFile(path));
            }
        }
    }
    if check_proportions {
        check_split_proportions(records)?;
    }
    Ok(DatasetManifest { records: records.to_vec(), created_with: serde_json::Value::Null }.summary())
}

pub fn validate_manifest(
    path: impl AsRef<Path>,
    check_proportions: bool,
) -> Result<(DatasetManifest, ManifestSummary)> {
    let path = path.as_ref();
    let manifest = read_manifest(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let summary = validate_records(&manifest.records, Some(base), check_proportions)?;
    Ok((manifest, summary))
}

pub const SPLIT_FRACTIONS: [f64; 3] = [0.7, 0.1, 0.2];

fn check_split_proportions(records: &[SampleRecord]) -> Result<()> {
    let originals: Vec<&SampleRecord> = records.iter().filter(|r| r.is_original()).collect();
    if originals.is_empty() {
        return Ok(());
    }
    let n = originals.len() as f64;
    for (split, target) in Split::ALL.iter().zip(SPLIT_FRACTIONS) {
        let frac = originals.iter().filter(|r| r.split == *split).count() as f64 / n;
        if (frac - target).abs() > 0.02 {
            return Err(Error::InvalidManifest(format!(
                "{split} holds {:.1}% of original records, expected {:.0}% ± 2%",
                100.0 * frac,
                100.0 * target
            )));
        }
    }
    Ok(())
}

/// Minimum records per class accepted by [`split`].
pub const MIN_PER_CLASS: usize = 10;

/// Per-class `(train, val, test)` counts. Validation and test totals are
/// `round(0.1 N)` and `round(0.2 N)`, spread over classes by largest
/// remainder; everything else is training data.
pub fn split_counts(per_class: &[usize]) -> Vec<(usize, usize, usize)> {
    let total: usize = per_class.iter().sum();
    let allocate = |frac: f64| -> Vec<usize> {
        let target = (frac * total as f64).round() as usize;
        let ideal: Vec<f64> = per_class.iter().map(|&n| frac * n as f64).collect();
        let mut alloc: Vec<usize> = ideal.iter().map(|v| v.floor() as usize).collect();
        let mut order: Vec<usize> = (0..per_class.len()).collect();
        order.sort_by(|&a, &b| (ideal[b] - ideal[b].floor()).total_cmp(&(ideal[a] - ideal[a].floor())).then(a.cmp(&b)));
        let mut missing = target.saturating_sub(alloc.iter().sum());
        for &c in order.iter().cycle().take(missing * per_class.len().max(1)) {
            if missing == 0 {
                break;
            }
            if alloc[c] < per_class[c] {
                alloc[c] += 1;
                missing -= 1;
            }
        }
        alloc
    };
    let val = allocate(SPLIT_FRACTIONS[1]);
    let test = allocate(SPLIT_FRACTIONS[2]);
    per_class
        .iter()
        .enumerate()
        .map(|(c, &n)| {
            let t = test[c].min(n);
            let v = val[c].min(n - t);
            (n - t - v, v, t)
        })
        .collect()
}

/// Seeded, class-stratified 70/10/20 split of original records. Augmented
/// records follow their parent.
pub fn split(records: &mut [SampleRecord], seed: u64) -> Result<()> {
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_CLASSES];
    for (i, r) in records.iter().enumerate() {
        if r.is_original() {
            per_class[r.label.index()].push(i);
        }
    }
    for (c, idx) in per_class.iter().enumerate() {
        if !idx.is_empty() && idx.len() < MIN_PER_CLASS {
            return Err(Error::TooFewSamples(format!(
                "{} has {} records, need at least {MIN_PER_CLASS}",
                GestureClass::ALL[c],
                idx.len()
            )));
        }
    }
    if per_class.iter().all(Vec::is_empty) {
        return Err(Error::TooFewSamples("no original records".into()));
    }
    let counts = split_counts(&per_class.iter().map(Vec::len).collect::<Vec<_>>());
    for (c, idx) in per_class.iter_mut().enumerate() {
        idx.shuffle(&mut rng(derive_seed(seed, c as u64)));
        let (_, v, t) = counts[c];
        for (k, &i) in idx.iter().enumerate() {
            records[i].split = if k < t {
                Split::Test
            } else if k < t + v {
                Split::Val
            } else {
                Split::Train
            };
        }
    }
    let parents: HashMap<String, Split> =
        records.iter().filter(|r| r.is_original()).map(|r| (r.id.clone(), r.split)).collect();
    for r in records.iter_mut().filter(|r| !r.is_original()) {
        if let Some(s) = r.parent_id.as_ref().and_then(|p| parents.get(p)) {
            r.split = *s;
        }
    }
    Ok(())
}

/// Record for one noisy copy of `parent`; label and split are inherited.
pub fn augmented_record(parent: &SampleRecord, plan: &AugmentPlan, noise_id: &str, path: PathBuf) -> SampleRecord {
    SampleRecord {
        id: augmented_id(&parent.id, plan.copy),
        path,
        label: parent.label,
        split: parent.split,
        source: SampleSource::Augmented,
        parent_id: Some(parent.id.clone()),
        snr_db: Some(plan.snr_db),
        noise_id: Some(noise_id.to_string()),
        recorder: parent.recorder.clone(),
    }
}

/// Leak check: no clean parent may appear in a different split from any of
/// its augmented children.
pub fn leaked_sources(records: &[SampleRecord]) -> HashSet<String> {
    let parents: HashMap<&str, Split> =
        records.iter().filter(|r| r.is_original()).map(|r| (r.id.as_str(), r.split)).collect();
    records
        .iter()
        .filter_map(|r| {
            let p = r.parent_id.as_deref()?;
            (parents.get(p).is_some_and(|s| *s != r.split)).then(|| p.to_string())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    /// Minimum spacing between accepted peaks.
    pub min_interval_s: f64,
    /// Length of each emitted clip, centred on its peak.
    pub clip_s: f64,
    pub threshold: Threshold,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        let det = DetectorConfig::default();
        Self { min_interval_s: 0.5, clip_s: 1.0, threshold: det.threshold }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedClip {
    pub label: GestureClass,
    /// Peak position in the recording, seconds.
    pub peak_s: f64,
    pub clip: AudioClip,
}

/// Cuts a quiet single-class recording into peak-centred clips.
///
/// The recording is band-passed, the first sample above the trigger level
/// opens a search over the next `min_interval_s`, the loudest sample there
/// becomes the peak, and scanning resumes `min_interval_s` after it. Clips
/// are cut from the unfiltered audio; clips that would overrun either edge
/// are dropped.
pub fn auto_segment(recording: &AudioClip, label: GestureClass, cfg: &SegmentConfig) -> Result<Vec<SegmentedClip>> {
    let filter = BiquadCascade::gesture_band(recording.sample_rate_hz)?;
    let filtered = apply(&filter, recording)?;
    let x = &filtered.samples;
    let level = match cfg.threshold {
        Threshold::Adaptive { k } => (k * median_abs(x)).max(MIN_TRIGGER_LEVEL),
        Threshold::Absolute { level } => level.max(MIN_TRIGGER_LEVEL),
    };
    let rate = recording.sample_rate_hz as f64;
    let interval = (cfg.min_interval_s * rate).round() as usize;
    let clip_len = (cfg.clip_s * rate).round() as usize;
    let half = clip_len / 2;

    let mut peaks = Vec::new();
    let mut i = 0;
    while i < x.len() {
        if x[i].abs() <= level {
            i += 1;
            continue;
        }
        let end = (i + interval).min(x.len());
        let peak = (i..end).fold(i, |best, j| if x[j].abs() > x[best].abs() { j } else { best });
        peaks.push(peak);
        i = peak + interval;
    }
    let clips: Vec<SegmentedClip> = peaks
        .into_iter()
        .filter(|&p| p >= half && p - half + clip_len <= x.len())
        .map(|p| SegmentedClip { label, peak_s: p as f64 / rate, clip: recording.slice(p - half, clip_len) })
        .collect();
    if clips.is_empty() {
        return Err(Error::NoEventsFound);
    }
    Ok(clips)
}
