//! Stage-one detector properties on constructed streams.

mod common;

use common::checks::detector_check;
use proptest::prelude::*;
use wristgest_core::audio::AudioClip;
use wristgest_core::detector::{detect_offline, DetectorConfig, Threshold};

const FS: f64 = 16000.0;

/// Short decaying 150 Hz bursts over a faint noise bed.
fn stream(len_s: f64, bursts: &[(f64, f64)], seed: u64) -> AudioClip {
    let mut x: Vec<f64> = (0..(len_s * FS) as usize)
        .map(|i| {
            1e-3 * (((i as u64).wrapping_mul(6364136223846793005).wrapping_add(seed) >> 33) as f64 / 2f64.powi(31)
                - 0.5)
        })
        .collect();
    for &(t, amp) in bursts {
        let c = (t * FS) as usize;
        for i in 0..400 {
            if let Some(s) = x.get_mut(c + i) {
                *s += amp * (-(i as f64) / 80.0).exp() * (2.0 * std::f64::consts::PI * 150.0 * i as f64 / FS).sin();
            }
        }
    }
    AudioClip::new(x, 16000).unwrap()
}

fn burst_peak(t: f64) -> f64 {
    // The envelope-weighted sine peaks in the first quarter period.
    t + 0.25 / 150.0
}

#[test]
fn recall_subfloor_and_silence() {
    let c = detector_check(3);
    assert!(c.recall() >= 0.95, "recall {}", c.recall());
    assert_eq!(c.subfloor_triggers, 0);
    assert_eq!(c.silent_triggers, 0);
    assert_eq!(c.silent_inferences, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn each_isolated_burst_yields_one_centred_segment(
        gaps in prop::collection::vec(1.6f64..3.0, 1..6),
        amp in 0.05f64..0.9,
    ) {
        let mut times = Vec::new();
        let mut t = 2.0;
        for g in &gaps {
            times.push(t);
            t += g;
        }
        let x = stream(t + 2.0, &times.iter().map(|&t| (t, amp)).collect::<Vec<_>>(), 1);
        let cfg = DetectorConfig { threshold: Threshold::Absolute { level: 0.02 }, ..Default::default() };
        let segs = detect_offline(&x, &cfg).unwrap();
        prop_assert_eq!(segs.len(), times.len());
        for (s, &bt) in segs.iter().zip(&times) {
            let rel = burst_peak(bt) - s.t_start;
            prop_assert!((0.25..=0.75).contains(&rel), "peak at {} within crop", rel);
            prop_assert!(s.peak_amplitude >= s.trigger_level);
            prop_assert_eq!(s.samples.len(), 16000);
        }
        for w in segs.windows(2) {
            prop_assert!(w[1].t_start - w[0].t_start >= cfg.refractory_s);
        }
    }

    #[test]
    fn lowering_k_never_loses_a_burst(
        gaps in prop::collection::vec(1.6f64..3.0, 1..6),
        amps in prop::collection::vec(0.002f64..0.05, 6),
        seed in any::<u64>(),
    ) {
        let mut bursts = Vec::new();
        let mut t = 2.0;
        for (g, a) in gaps.iter().zip(&amps) {
            bursts.push((t, *a));
            t += g;
        }
        let x = stream(t + 2.0, &bursts, seed);
        let found = |k: f64| {
            let cfg = DetectorConfig { threshold: Threshold::Adaptive { k }, ..Default::default() };
            let segs = detect_offline(&x, &cfg).unwrap();
            bursts
                .iter()
                .map(|&(bt, _)| segs.iter().any(|s| s.t_start <= bt && bt <= s.t_start + 1.0))
                .collect::<Vec<bool>>()
        };
        let (strict, loose) = (found(12.0), found(4.0));
        for (s, l) in strict.iter().zip(&loose) {
            prop_assert!(!s || *l);
        }
    }
}
