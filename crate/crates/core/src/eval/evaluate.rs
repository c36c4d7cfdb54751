//! Clip-level evaluation: eleven windows, suppression, one verdict per clip.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::metrics::{metrics, ConfusionMatrix, MetricsReport};
use super::nms::{nms, Detection, NmsConfig};
use super::roc::{roc_auc, RocCurve};
use crate::audio::{load_canonical, AudioClip};
use crate::dataset::{DatasetManifest, SampleSource, Split};
use crate::features::{ClipFeaturizer, WINDOW_S};
use crate::gesture::{GestureClass, NUM_CLASSES};
use crate::model::CnnModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClipVerdict {
    pub truth: GestureClass,
    /// Class of the strongest surviving event, if any.
    pub predicted: Option<GestureClass>,
    pub p: f64,
    /// Per-class maximum over the clip's windows.
    pub max_probs: [f64; NUM_CLASSES],
}

/// Window detections for a clip; `t` is the window centre within the clip.
pub fn clip_detections(model: &CnnModel, featurizer: &ClipFeaturizer, clip: &AudioClip) -> Result<Vec<Detection>> {
    let windows = featurizer.windows(clip)?;
    let x: Vec<f64> = windows.iter().flat_map(|f| f.values.iter().copied()).collect();
    let preds = model.predict_batch(&x)?;
    Ok(windows
        .iter()
        .zip(preds)
        .map(|(w, p)| Detection { t: w.t_start + WINDOW_S / 2.0, class: p.class, p: p.max_prob, probs: p.probs })
        .collect())
}

pub fn classify_clip(
    model: &CnnModel,
    featurizer: &ClipFeaturizer,
    clip: &AudioClip,
    truth: GestureClass,
    cfg: &NmsConfig,
) -> Result<ClipVerdict> {
    let dets = clip_detections(model, featurizer, clip)?;
    let mut max_probs = [0.0f64; NUM_CLASSES];
    for d in &dets {
        for (m, p) in max_probs.iter_mut().zip(d.probs) {
            *m = m.max(p);
        }
    }
    let top = nms(&dets, cfg).into_iter().max_by(|a, b| a.p.total_cmp(&b.p).then(b.t.total_cmp(&a.t)));
    Ok(ClipVerdict { truth, predicted: top.map(|d| d.class), p: top.map_or(0.0, |d| d.p), max_probs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    /// Correct clips over all clips.
    pub overall_accuracy: f64,
    pub n_clips: u64,
    /// Clips where no event survived.
    pub misses: u64,
    /// Per-class ROC over clip-level maximum probabilities; `None` when a
    /// class is absent from the evaluated labels.
    pub roc: Vec<(GestureClass, Option<RocCurve>)>,
}

impl EvalReport {
    pub fn from_verdicts(verdicts: &[ClipVerdict]) -> Result<Self> {
        if verdicts.is_empty() {
            return Err(Error::EmptySplit("no clips to evaluate".into()));
        }
        let mut confusion = ConfusionMatrix::default();
        for v in verdicts {
            confusion.record(v.truth, v.predicted);
        }
        let roc = GestureClass::ALL
            .iter()
            .map(|&c| {
                let scores: Vec<f64> = verdicts.iter().map(|v| v.max_probs[c.index()]).collect();
                let labels: Vec<bool> = verdicts.iter().map(|v| v.truth == c).collect();
                (c, roc_auc(&scores, &labels).ok())
            })
            .collect();
        Ok(Self {
            metrics: metrics(&confusion.to_counts())?,
            overall_accuracy: confusion.overall_accuracy(),
            n_clips: confusion.total(),
            misses: confusion.misses(),
            confusion,
            roc,
        })
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<11}{:>10}{:>10}{:>10}{:>10}{:>8}", "class", "precision", "recall", "f1", "acc", "auc")?;
        for (c, m) in GestureClass::ALL.iter().zip(&self.metrics.per_class) {
            let auc = self.roc[c.index()].1.as_ref().map_or("-".to_string(), |r| format!("{:.4}", r.auc));
            writeln!(
                f,
                "{:<11}{:>10.4}{:>10.4}{:>10.4}{:>10.4}{:>8}",
                c.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.accuracy,
                auc
            )?;
        }
        let m = &self.metrics.macro_avg;
        writeln!(f, "{:<11}{:>10.4}{:>10.4}{:>10.4}{:>10.4}", "macro", m.precision, m.recall, m.f1, m.accuracy)?;
        writeln!(
            f,
            "overall accuracy {:.4} over {} clips ({} without an event)",
            self.overall_accuracy, self.n_clips, self.misses
        )
    }
}

/// Evaluates labelled clips, which may be produced lazily.
pub fn evaluate_clips<I>(model: &CnnModel, clips: I, cfg: &NmsConfig) -> Result<EvalReport>
where
    I: IntoIterator<Item = Result<(GestureClass, AudioClip)>>,
{
    cfg.validate()?;
    let featurizer = ClipFeaturizer::new(crate::audio::CANONICAL_RATE)?;
    let mut verdicts = Vec::new();
    for item in clips {
        let (label, clip) = item?;
        verdicts.push(classify_clip(model, &featurizer, &clip, label, cfg)?);
    }
    EvalReport::from_verdicts(&verdicts)
}

/// Evaluates every record of `split` (optionally restricted to one source)
/// listed in a manifest, resolving paths against `base_dir`.
pub fn evaluate_model(
    model: &CnnModel,
    manifest: &DatasetManifest,
    base_dir: &Path,
    split: Split,
    source: Option<SampleSource>,
    cfg: &NmsConfig,
) -> Result<EvalReport> {
    let records = manifest.select(split, source);
    if records.is_empty() {
        return Err(Error::EmptySplit(split.to_string()));
    }
    evaluate_clips(
        model,
        records.into_iter().map(|r| Ok((r.label, load_canonical(DatasetManifest::resolve(base_dir, r))?))),
        cfg,
    )
}
