//! Measurements behind the property tests and the acceptance report. Each
//! returns numbers; callers decide what passes.

use rand::seq::SliceRandom;
use rand::Rng;
use wristgest_core::augment::{plan_augmentation, synth_sample, AugmentConfig};
use wristgest_core::dataset::{
    augmented_record, leaked_sources, split, validate_records, ManifestSummary, SampleRecord, SampleSource, Split,
};
use wristgest_core::eval::{metrics, nms, ConfusionMatrix, NmsConfig};
use wristgest_core::features::{dct_ortho, idct_ortho, MfccConfig, MfccExtractor};
use wristgest_core::filter::BiquadCascade;
use wristgest_core::gesture::{GestureClass, NUM_CLASSES};
use wristgest_core::rngutil::{derive_seed, rng};

use super::oracles::{analytic_gain, log_spaced, measured_gain, naive_metrics, nms_oracle, random_detections};

pub struct FilterCheck {
    pub worst_rel_err: f64,
    pub gain_10: f64,
    pub gain_100: f64,
    pub gain_2k: f64,
}

pub fn filter_check() -> FilterCheck {
    let f = BiquadCascade::gesture_band(16000).unwrap();
    let worst_rel_err = log_spaced(5.0, 4000.0, 20)
        .into_iter()
        .map(|hz| {
            let a = analytic_gain(&f, hz);
            (measured_gain(&f, hz) - a).abs() / a
        })
        .fold(0.0, f64::max);
    FilterCheck {
        worst_rel_err,
        gain_10: analytic_gain(&f, 10.0),
        gain_100: analytic_gain(&f, 100.0),
        gain_2k: analytic_gain(&f, 2000.0),
    }
}

pub struct MfccCheck {
    pub windows: usize,
    pub bad_shapes: usize,
    /// Largest standardised difference between a window and its rescaled copy.
    pub worst_scale_diff: f64,
    /// Largest raw-cepstrum change outside coefficient 0 under rescaling.
    pub worst_raw_leak: f64,
    pub worst_dct_err: f64,
}

/// Windows cut from synthetic gestures at random offsets, with a little
/// white noise so no mel band sits on the log floor.
pub fn mfcc_windows(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let clip = synth_sample(GestureClass::ALL[i % NUM_CLASSES], derive_seed(seed, i as u64));
            let start = r.random_range(0..=8000);
            clip.samples[start..start + 8000].iter().map(|s| s + 1e-3 * r.random_range(-1.0..1.0)).collect()
        })
        .collect()
}

pub fn mfcc_check(n: usize, seed: u64) -> MfccCheck {
    let ex = MfccExtractor::new(MfccConfig::default(), 16000).unwrap();
    let mut r = rng(seed ^ 0x5CA1E);
    let mut out =
        MfccCheck { windows: n, bad_shapes: 0, worst_scale_diff: 0.0, worst_raw_leak: 0.0, worst_dct_err: 0.0 };
    for w in mfcc_windows(n, seed) {
        let m = ex.mfcc(&w).unwrap();
        if m.shape() != (40, 44) || m.values.len() != 40 * 44 || !m.values.iter().all(|v| v.is_finite()) {
            out.bad_shapes += 1;
        }
        let alpha = r.random_range(0.5..=2.0);
        let scaled: Vec<f64> = w.iter().map(|s| alpha * s).collect();
        let ms = ex.mfcc(&scaled).unwrap();
        for (a, b) in m.values.iter().zip(&ms.values) {
            out.worst_scale_diff = out.worst_scale_diff.max((a - b).abs());
        }
        let (ra, rb) = (ex.raw_cepstra(&w).unwrap(), ex.raw_cepstra(&scaled).unwrap());
        // Row-major coefficients: row 0 is the first 44 values.
        for (a, b) in ra.iter().zip(&rb).skip(44) {
            out.worst_raw_leak = out.worst_raw_leak.max((a - b).abs());
        }
        for frame in ex.log_mel_frames(&w).unwrap() {
            let back = idct_ortho(&dct_ortho(&frame));
            for (a, b) in frame.iter().zip(&back) {
                out.worst_dct_err = out.worst_dct_err.max((a - b).abs());
            }
        }
    }
    out
}

/// NMS against the brute-force oracle, also after shuffling the input.
/// Returns the number of mismatching instances.
pub fn nms_oracle_mismatches(instances: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut bad = 0;
    for _ in 0..instances {
        let n = r.random_range(0..=200);
        let mut dets = random_detections(&mut r, n);
        let eps = [0.5, 0.6, 0.7, 0.9][r.random_range(0..4)];
        let window = [0.0, 0.25, 0.5][r.random_range(0..3)];
        let cfg = NmsConfig { epsilon: eps, secondary_epsilon: eps.min(0.6), suppression_window_s: window };
        let expected = nms_oracle(&dets, eps, window);
        let got = nms(&dets, &cfg);
        dets.shuffle(&mut r);
        let shuffled = nms(&dets, &cfg);
        if got != expected || shuffled != expected {
            bad += 1;
        }
    }
    bad
}

/// Library metrics against the naive evaluator on random label pairs,
/// including empty classes and misses. Returns mismatching instances.
pub fn metrics_oracle_mismatches(instances: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut bad = 0;
    for _ in 0..instances {
        let n = r.random_range(1..=300);
        let n_live = r.random_range(1..=NUM_CLASSES);
        let truth: Vec<usize> = (0..n).map(|_| r.random_range(0..n_live)).collect();
        let pred: Vec<Option<usize>> = truth
            .iter()
            .map(|&t| match r.random_range(0..10) {
                0 => None,
                1..=5 => Some(t),
                _ => Some(r.random_range(0..NUM_CLASSES)),
            })
            .collect();
        let mut cm = ConfusionMatrix::default();
        for (t, p) in truth.iter().zip(&pred) {
            cm.record(GestureClass::ALL[*t], p.map(|c| GestureClass::ALL[c]));
        }
        let report = metrics(&cm.to_counts()).unwrap();
        let naive = naive_metrics(&truth, &pred);
        let same = report.per_class.iter().zip(&naive).all(|(m, o)| [m.precision, m.recall, m.f1, m.accuracy] == *o);
        let macro_f1 = naive.iter().map(|o| o[2]).sum::<f64>() / NUM_CLASSES as f64;
        if !same || report.macro_avg.f1 != macro_f1 {
            bad += 1;
        }
    }
    bad
}

pub const BOOKKEEPING_CLASS_COUNTS: [usize; NUM_CLASSES] = [537, 537, 537, 536, 536];

pub struct BookkeepingCheck {
    pub summary: ManifestSummary,
    pub leaks: usize,
    pub validated: bool,
}

impl BookkeepingCheck {
    pub fn counts(&self, source: SampleSource) -> [usize; 3] {
        Split::ALL.map(|s| self.summary.count(s, source))
    }
}

/// 2683 clean records split 70/10/20, each given ten augmented children.
pub fn bookkeeping_check(seed: u64) -> BookkeepingCheck {
    let mut records = Vec::new();
    for (c, &n) in BOOKKEEPING_CLASS_COUNTS.iter().enumerate() {
        let class = GestureClass::ALL[c];
        for i in 0..n {
            records.push(SampleRecord {
                id: format!("{class}_{i:04}"),
                path: format!("clean/{class}_{i:04}.wav").into(),
                label: class,
                split: Split::Train,
                source: SampleSource::Clean,
                parent_id: None,
                snr_db: None,
                noise_id: None,
                recorder: "replica".into(),
            });
        }
    }
    split(&mut records, seed).unwrap();
    let noise_ids: Vec<String> = (0..6).map(|i| format!("noise_{i}")).collect();
    let plans =
        plan_augmentation(records.len(), noise_ids.len(), &AugmentConfig { seed, ..Default::default() }).unwrap();
    let children: Vec<SampleRecord> = plans
        .iter()
        .map(|p| {
            let parent = &records[p.source];
            augmented_record(parent, p, &noise_ids[p.noise], format!("aug/{}_{:03}.wav", parent.id, p.copy).into())
        })
        .collect();
    records.extend(children);
    let validated = validate_records(&records, None, true).is_ok();
    let leaks = leaked_sources(&records).len();
    BookkeepingCheck { summary: wristgest_core::dataset::DatasetManifest::new(records).summary(), leaks, validated }
}

pub struct DetectorCheck {
    pub gestures: usize,
    pub detected: usize,
    pub subfloor_triggers: usize,
    pub silent_triggers: u64,
    pub silent_inferences: u64,
}

impl DetectorCheck {
    pub fn recall(&self) -> f64 {
        self.detected as f64 / self.gestures as f64
    }
}

/// Stage-one recall on 100 gestures in pink noise at 10 dB, triggers on a
/// minute of noise below the absolute floor, and the full pipeline's work
/// on a minute of silence.
pub fn detector_check(seed: u64) -> DetectorCheck {
    use std::sync::Arc;
    use wristgest_core::augment::NoiseKind;
    use wristgest_core::detector::{detect_offline, DetectorConfig};
    use wristgest_core::eval::{synthetic_stream, NoiseLevel, StreamSpec};
    use wristgest_core::filter::apply;
    use wristgest_core::model::CnnModel;
    use wristgest_core::pipeline::{run_source, GesturePipeline, Pacing, PipelineConfig, ReplaySource};
    use wristgest_core::AudioClip;

    let filter = BiquadCascade::gesture_band(16000).unwrap();
    let cfg = DetectorConfig::default();
    let gestures: Vec<GestureClass> = (0..100).map(|i| GestureClass::ALL[i % NUM_CLASSES]).collect();
    let spec = StreamSpec::new(gestures, seed).with_noise(NoiseKind::Pink, NoiseLevel::Snr { db: 10.0 });
    let stream = synthetic_stream(&spec).unwrap();
    let segs = detect_offline(&apply(&filter, &stream.clip).unwrap(), &cfg).unwrap();
    let detected =
        stream.marks.iter().filter(|m| segs.iter().any(|s| s.t_start <= m.t && m.t <= s.t_start + cfg.crop_s)).count();

    let quiet = StreamSpec { lead_s: 60.0, ..StreamSpec::new(vec![], seed) }
        .with_noise(NoiseKind::Pink, NoiseLevel::Rms { rms: 1e-3 });
    let quiet = synthetic_stream(&quiet).unwrap();
    let subfloor_triggers = detect_offline(&apply(&filter, &quiet.clip).unwrap(), &cfg).unwrap().len();

    let model = Arc::new(CnnModel::new(seed));
    let mut p = GesturePipeline::new(model, PipelineConfig::default(), 16000).unwrap();
    let silence = AudioClip::silence(60 * 16000, 16000);
    let run = run_source(&mut p, &mut ReplaySource::new(silence), Pacing::Fast, 0.1, |_| {}).unwrap();
    DetectorCheck {
        gestures: stream.marks.len(),
        detected,
        subfloor_triggers,
        silent_triggers: run.stats.triggers,
        silent_inferences: run.stats.inferences,
    }
}

pub const E2E_PER_CLASS: usize = 200;
pub const E2E_CLEAN_EPOCHS: usize = 40;
pub const E2E_AUG_EPOCHS: usize = 15;

pub struct EndToEnd {
    pub clean_clean: f64,
    pub clean_noisy: f64,
    pub aug_noisy: f64,
}

impl EndToEnd {
    pub fn passes(&self) -> bool {
        self.clean_clean >= 0.90 && self.aug_noisy - self.clean_noisy >= 0.15 && self.aug_noisy >= 0.80
    }
}

/// Clean-only versus ratio-10 training on a pink-noise synthetic corpus,
/// scored by clip accuracy on clean and noisy test clips.
pub fn end_to_end(seed: u64) -> EndToEnd {
    use wristgest_core::augment::NoiseKind;
    use wristgest_core::eval::{
        evaluate_clean, evaluate_noisy, synthetic_corpus, train_with_ratio, CorpusConfig, ExperimentConfig,
    };

    let corpus =
        CorpusConfig { per_class: E2E_PER_CLASS, noise_kinds: vec![NoiseKind::Pink], seed, ..Default::default() };
    let data = synthetic_corpus(&corpus).unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.train.seed = seed;
    cfg.train.max_epochs = E2E_CLEAN_EPOCHS;
    let (clean, _) = train_with_ratio(&data, 0, &cfg, |_| {}).unwrap();
    cfg.train.max_epochs = E2E_AUG_EPOCHS;
    let (aug, _) = train_with_ratio(&data, 10, &cfg, |_| {}).unwrap();
    EndToEnd {
        clean_clean: evaluate_clean(&clean, &data, &cfg).unwrap().overall_accuracy,
        clean_noisy: evaluate_noisy(&clean, &data, &cfg).unwrap().overall_accuracy,
        aug_noisy: evaluate_noisy(&aug, &data, &cfg).unwrap().overall_accuracy,
    }
}

pub const SWEEP_PER_CLASS: usize = 60;
pub const SWEEP_EPOCHS: usize = 30;
pub const SWEEP_RATIOS: [usize; 3] = [1, 10, 100];

/// Noisy-test macro F1 per ratio on a corpus mixing every noise kind.
pub fn sweep_f1(seed: u64) -> Vec<(usize, f64)> {
    use wristgest_core::eval::{ratio_sweep, synthetic_corpus, CorpusConfig, ExperimentConfig, TestCondition};

    let data = synthetic_corpus(&CorpusConfig { per_class: SWEEP_PER_CLASS, seed, ..Default::default() }).unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.train.seed = seed;
    cfg.train.max_epochs = SWEEP_EPOCHS;
    let table = ratio_sweep(&data, &SWEEP_RATIOS, &cfg, |_| {}).unwrap();
    SWEEP_RATIOS.iter().map(|&r| (r, table.get(r, TestCondition::Noisy).unwrap().macro_avg.f1)).collect()
}
