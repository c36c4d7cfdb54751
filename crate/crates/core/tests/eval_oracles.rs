//! Suppression, metrics and ROC against brute-force references.

mod common;

use common::checks::{metrics_oracle_mismatches, nms_oracle_mismatches};
use common::oracles::pairwise_auc;
use proptest::prelude::*;
use rand::Rng;
use wristgest_core::eval::{metrics, nms, roc_auc, ConfusionMatrix, Detection, NmsConfig};
use wristgest_core::gesture::{GestureClass, NUM_CLASSES};
use wristgest_core::rngutil::rng;

#[test]
fn nms_matches_brute_force_on_1000_instances() {
    assert_eq!(nms_oracle_mismatches(1000, 21), 0);
}

#[test]
fn metrics_match_naive_evaluator_on_1000_instances() {
    assert_eq!(metrics_oracle_mismatches(1000, 22), 0);
}

#[test]
fn nms_output_is_time_ordered_and_spaced() {
    let mut r = rng(5);
    for _ in 0..200 {
        let dets: Vec<Detection> = (0..50)
            .map(|_| {
                let class = GestureClass::ALL[r.random_range(0..NUM_CLASSES)];
                Detection { t: r.random_range(0.0..10.0), class, p: r.random_range(0.0..1.0), probs: [0.0; 5] }
            })
            .collect();
        let out = nms(&dets, &NmsConfig::default());
        for w in out.windows(2) {
            assert!(w[1].t - w[0].t > 0.5);
        }
        assert!(out.iter().all(|d| d.p >= 0.7));
    }
}

#[test]
fn roc_auc_matches_pairwise_count() {
    let mut r = rng(9);
    for _ in 0..200 {
        let n = r.random_range(2..60);
        let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..8) as f64 / 8.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let auc = roc_auc(&scores, &labels).unwrap().auc;
        assert!((auc - pairwise_auc(&scores, &labels)).abs() < 1e-12);
    }
}

#[test]
fn roc_auc_of_uninformative_scores_is_near_half() {
    let mut r = rng(10);
    let scores: Vec<f64> = (0..4000).map(|_| r.random()).collect();
    let labels: Vec<bool> = (0..4000).map(|_| r.random_bool(0.5)).collect();
    let auc = roc_auc(&scores, &labels).unwrap().auc;
    assert!((auc - 0.5).abs() <= 0.05, "{auc}");
}

proptest! {
    #[test]
    fn roc_auc_invariant_under_monotone_transform(
        raw in prop::collection::vec((0u8..20, any::<bool>()), 2..80),
        a in 0.1f64..5.0,
        b in -3.0f64..3.0,
    ) {
        let scores: Vec<f64> = raw.iter().map(|(s, _)| *s as f64 / 20.0).collect();
        let mut labels: Vec<bool> = raw.iter().map(|(_, l)| *l).collect();
        labels[0] = true;
        labels[1] = false;
        let base = roc_auc(&scores, &labels).unwrap().auc;
        let moved: Vec<f64> = scores.iter().map(|s| (a * s + b).exp()).collect();
        prop_assert!((roc_auc(&moved, &labels).unwrap().auc - base).abs() < 1e-12);
    }

    #[test]
    fn relabelling_classes_permutes_metrics(
        pairs in prop::collection::vec((0usize..5, prop::option::of(0usize..5)), 1..120),
        shift in 1usize..5,
    ) {
        let perm = |c: usize| (c + shift) % NUM_CLASSES;
        let (mut a, mut b) = (ConfusionMatrix::default(), ConfusionMatrix::default());
        for &(t, p) in &pairs {
            a.record(GestureClass::ALL[t], p.map(|c| GestureClass::ALL[c]));
            b.record(GestureClass::ALL[perm(t)], p.map(|c| GestureClass::ALL[perm(c)]));
        }
        let (ma, mb) = (metrics(&a.to_counts()).unwrap(), metrics(&b.to_counts()).unwrap());
        for c in 0..NUM_CLASSES {
            prop_assert_eq!(ma.per_class[c], mb.per_class[perm(c)]);
        }
        prop_assert!((ma.macro_avg.f1 - mb.macro_avg.f1).abs() < 1e-12);
        prop_assert!((ma.macro_avg.accuracy - mb.macro_avg.accuracy).abs() < 1e-12);
    }
}
