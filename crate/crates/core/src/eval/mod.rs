//! Metrics, suppression and the offline experiments built on them.

mod evaluate;
mod experiment;
mod falsealarm;
mod metrics;
mod nms;
mod roc;
mod stream;
mod sweep;

pub use evaluate::{classify_clip, clip_detections, evaluate_clips, evaluate_model, ClipVerdict, EvalReport};
pub use experiment::{
    build_features, clean_copies, evaluate_clean, evaluate_noisy, noisy_copies, synthetic_corpus, train_with_ratio,
    CorpusConfig, ExperimentConfig, ExperimentData, FeatureConfig, LabeledAudio,
};
pub use falsealarm::{false_alarm_profile, median, TriggerProfile, HISTOGRAM_BINS};
pub use metrics::{class_metrics, metrics, ClassCounts, ClassMetrics, ConfusionCounts, ConfusionMatrix, MetricsReport};
pub use nms::{nms, Detection, NmsConfig};
pub use roc::{roc_auc, RocCurve, RocPoint};
pub use stream::{synthetic_stream, GestureMark, NoiseLevel, StreamSpec, SyntheticStream};
pub use sweep::{ratio_sweep, SweepRow, SweepTable, TestCondition};
