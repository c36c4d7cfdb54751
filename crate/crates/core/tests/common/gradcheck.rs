//! Central-difference gradient checker.
//!
//! A central difference is only a derivative estimate when both probes stay
//! on the same smooth piece of the loss. Probes whose perturbation changes a
//! pool argmax or a ReLU branch feeding the output are counted and excluded;
//! everything else must agree within the tolerance.

use rand::Rng;
use wristgest_core::model::{cross_entropy, CnnModel};
use wristgest_core::rngutil::rng;

pub const TOLERANCE: f64 = 1e-4;
/// Gradients smaller than this are compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-3;

pub fn random(seed: u64, n: usize, scale: f64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-scale..scale)).collect()
}

pub struct Report {
    pub worst: f64,
    pub checked: Vec<usize>,
    pub skipped: Vec<usize>,
}

impl Report {
    pub fn coverage(&self) -> f64 {
        let c: usize = self.checked.iter().sum();
        c as f64 / (c + self.skipped.iter().sum::<usize>()) as f64
    }
}

/// Compares analytic gradients with central differences for tensors at
/// index `first_tensor..`, running only the network suffix each tensor feeds.
pub fn check(model: &CnnModel, x: &[f64], labels: &[usize], step: f64, first_tensor: usize) -> Report {
    let (_, analytic) = model.loss_and_gradients(x, labels, None).unwrap();
    let base = model.forward(x, None).unwrap();
    let n_conv = model.params.conv.len();
    let mut probe = model.clone();
    let n_tensors = model.params.tensors().len();
    let mut report = Report { worst: 0.0, checked: vec![0; n_tensors], skipped: vec![0; n_tensors] };
    for t in first_tensor..n_tensors {
        let stage = (t / 2).min(n_conv);
        let input = base.stage_input(stage).to_vec();
        for i in 0..model.params.tensors()[t].len() {
            let orig = model.params.tensors()[t][i];
            let mut smooth = true;
            let mut loss_at = |v: f64| {
                probe.params.tensors_mut()[t][i] = v;
                let pass = probe.forward_from(stage, &input, labels.len(), None);
                smooth &= pass.same_activation_pattern(&base);
                cross_entropy(&pass, labels).unwrap()
            };
            let numeric = (loss_at(orig + step) - loss_at(orig - step)) / (2.0 * step);
            probe.params.tensors_mut()[t][i] = orig;
            if !smooth {
                report.skipped[t] += 1;
                continue;
            }
            report.checked[t] += 1;
            let a = analytic.tensors()[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            report.worst = report.worst.max(rel);
        }
    }
    report
}
