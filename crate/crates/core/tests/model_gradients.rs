//! Backprop checked against central finite differences.

mod common;

use common::gradcheck::{check, random, REL_FLOOR, TOLERANCE};
use wristgest_core::model::{cross_entropy, ArchMeta, CnnModel, Params};

#[test]
fn full_network_step_1e3() {
    let model = CnnModel::new(7);
    let x = random(8, 2 * 1760, 1.5);
    let r = check(&model, &x, &[2, 0], 1e-3, 0);
    eprintln!("worst relative error {:.3e}, coverage {:.4}, skipped per tensor {:?}", r.worst, r.coverage(), r.skipped);
    assert!(r.worst <= TOLERANCE, "worst relative error {}", r.worst);
    assert!(r.coverage() >= 0.95);
    assert!(r.checked.iter().all(|&c| c > 0), "a tensor had no smooth probe: {:?}", r.checked);
}

#[test]
fn full_network_step_1e6() {
    let model = CnnModel::new(11);
    let x = random(12, 2 * 1760, 1.5);
    let r = check(&model, &x, &[4, 1], 1e-6, 0);
    eprintln!("worst relative error {:.3e}, coverage {:.5}", r.worst, r.coverage());
    assert!(r.worst <= TOLERANCE, "worst relative error {}", r.worst);
    assert!(r.coverage() >= 0.999);
}

/// One conv block with a small input, so the 1e-3 step rarely crosses a kink
/// and the convolution, ReLU and pooling gradients are covered at that step.
#[test]
fn isolated_conv_block() {
    let arch = ArchMeta { input_shape: [6, 8, 1], conv_channels: vec![3], dense_units: 7, ..ArchMeta::default() };
    let model = CnnModel::with_arch(arch, 5).unwrap();
    let x = random(6, 2 * 48, 1.0);
    let r = check(&model, &x, &[3, 1], 1e-3, 0);
    eprintln!("worst relative error {:.3e}, coverage {:.4}", r.worst, r.coverage());
    assert!(r.worst <= TOLERANCE);
    assert!(r.coverage() >= 0.95);
    assert!(r.checked.iter().all(|&c| c > 0));
}

/// Two stacked conv blocks, covering the gradient routed back through col2im.
#[test]
fn isolated_conv_pair() {
    let arch = ArchMeta { input_shape: [8, 9, 1], conv_channels: vec![2, 3], dense_units: 6, ..ArchMeta::default() };
    let model = CnnModel::with_arch(arch, 15).unwrap();
    let x = random(16, 2 * 72, 1.0);
    let r = check(&model, &x, &[0, 4], 1e-3, 0);
    eprintln!("worst relative error {:.3e}, coverage {:.4}", r.worst, r.coverage());
    assert!(r.worst <= TOLERANCE);
    assert!(r.coverage() >= 0.9);
    assert!(r.checked.iter().all(|&c| c > 0));
}

/// Dense layers plus softmax cross-entropy on their own.
#[test]
fn isolated_dense_head() {
    let model = CnnModel::new(3);
    let n_conv = model.params.conv.len();
    let flat = random(4, 2 * 128, 2.0);
    let labels = [1, 3];
    let pass = model.forward_from(n_conv, &flat, 2, None);
    let loss = cross_entropy(&pass, &labels).unwrap();

    // Reference gradient for the output bias: mean of (p - onehot).
    let mut expected = [0.0; 5];
    for (b, &y) in labels.iter().enumerate() {
        for (c, e) in expected.iter_mut().enumerate() {
            *e += (pass.probs[b * 5 + c] - if c == y { 1.0 } else { 0.0 }) / 2.0;
        }
    }
    let mut probe = model.clone();
    for (c, e) in expected.iter().enumerate() {
        let orig = probe.params.dense2.bias[c];
        probe.params.dense2.bias[c] = orig + 1e-3;
        let up = cross_entropy(&probe.forward_from(n_conv, &flat, 2, None), &labels).unwrap();
        probe.params.dense2.bias[c] = orig - 1e-3;
        let down = cross_entropy(&probe.forward_from(n_conv, &flat, 2, None), &labels).unwrap();
        probe.params.dense2.bias[c] = orig;
        let numeric = (up - down) / 2e-3;
        assert!((numeric - e).abs() / e.abs().max(REL_FLOOR) <= TOLERANCE);
    }
    assert!(loss.is_finite());
}

#[test]
fn zero_gradients_leave_adam_parameters_unchanged() {
    use wristgest_core::model::{adam_step, AdamConfig, AdamState};
    let mut model = CnnModel::new(1);
    let before = model.params.clone();
    let mut st = AdamState::new(&model.arch);
    for _ in 0..5 {
        adam_step(&mut model.params, &Params::zeros(&model.arch), &mut st, &AdamConfig::default()).unwrap();
    }
    assert_eq!(model.params, before);
}
