//! Independent reference implementations used to cross-check the library.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wristgest_core::eval::Detection;
use wristgest_core::filter::BiquadCascade;
use wristgest_core::gesture::{GestureClass, NUM_CLASSES};

/// Gain of the cascade measured by driving it with a sine, letting the
/// transient die out and projecting the tail onto sin/cos (lock-in).
pub fn measured_gain(filter: &BiquadCascade, freq: f64) -> f64 {
    let fs = filter.meta.sample_rate_hz as f64;
    let settle_s = (40.0 / freq).max(3.0);
    let periods = (2.0 * freq).ceil().max(8.0);
    let measure_n = (periods / freq * fs).round() as usize;
    let n = (settle_s * fs) as usize + measure_n;
    let mut x: Vec<f64> = (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect();
    let mut st = filter.new_state();
    filter.process_in_place(&mut st, &mut x);
    let (mut si, mut co) = (0.0, 0.0);
    for (i, y) in x.iter().enumerate().skip(n - measure_n) {
        let ph = 2.0 * PI * freq * i as f64 / fs;
        si += y * ph.sin();
        co += y * ph.cos();
    }
    2.0 * (si * si + co * co).sqrt() / measure_n as f64
}

/// |H(e^{jw})| evaluated directly from the section coefficients with real
/// arithmetic.
pub fn analytic_gain(filter: &BiquadCascade, freq: f64) -> f64 {
    let w = 2.0 * PI * freq / filter.meta.sample_rate_hz as f64;
    let poly = |c0: f64, c1: f64, c2: f64| {
        let re = c0 + c1 * w.cos() + c2 * (2.0 * w).cos();
        let im = -c1 * w.sin() - c2 * (2.0 * w).sin();
        (re * re + im * im).sqrt()
    };
    filter.sections.iter().map(|s| poly(s.b0, s.b1, s.b2) / poly(1.0, s.a1, s.a2)).product()
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Random detections on a coarse time grid so ties in time and probability
/// actually happen.
pub fn random_detections(r: &mut ChaCha8Rng, n: usize) -> Vec<Detection> {
    (0..n)
        .map(|_| {
            let class = GestureClass::ALL[r.random_range(0..NUM_CLASSES)];
            let mut probs = [0.0; NUM_CLASSES];
            let p = r.random_range(0..=20) as f64 / 20.0;
            probs[class.index()] = p;
            Detection { t: r.random_range(0..=60) as f64 * 0.05, class, p, probs }
        })
        .collect()
}

/// Repeatedly scans everything left for the strongest detection (higher p,
/// then earlier t, then lower class), keeps it and deletes its neighbours.
pub fn nms_oracle(dets: &[Detection], epsilon: f64, window: f64) -> Vec<Detection> {
    let mut alive: Vec<bool> = dets.iter().map(|d| d.p >= epsilon).collect();
    let mut kept = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for i in 0..dets.len() {
            if !alive[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let (x, y) = (&dets[i], &dets[b]);
                    let better = x.p > y.p
                        || (x.p == y.p && x.t < y.t)
                        || (x.p == y.p && x.t == y.t && x.class.index() < y.class.index());
                    Some(if better { i } else { b })
                }
            };
        }
        let Some(b) = best else { break };
        kept.push(dets[b]);
        for i in 0..dets.len() {
            if (dets[i].t - dets[b].t).abs() <= window {
                alive[i] = false;
            }
        }
    }
    kept.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap().then(a.class.index().cmp(&b.class.index())));
    kept
}

/// Per-class (precision, recall, f1, accuracy) straight from paired labels,
/// `None` meaning no event.
pub fn naive_metrics(truth: &[usize], pred: &[Option<usize>]) -> Vec<[f64; 4]> {
    let n = truth.len() as u64;
    (0..NUM_CLASSES)
        .map(|c| {
            let mut tp = 0u64;
            let mut fp = 0u64;
            let mut fn_ = 0u64;
            for (t, p) in truth.iter().zip(pred) {
                let is_t = *t == c;
                let is_p = *p == Some(c);
                if is_t && is_p {
                    tp += 1;
                } else if is_p {
                    fp += 1;
                } else if is_t {
                    fn_ += 1;
                }
            }
            let tn = n - tp - fp - fn_;
            let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            let p = div(tp, tp + fp);
            let r = div(tp, tp + fn_);
            let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            [p, r, f1, div(tp + tn, n)]
        })
        .collect()
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}
