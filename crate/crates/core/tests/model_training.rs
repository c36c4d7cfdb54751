use rand::Rng;
use wristgest_core::model::{
    adam_step, adam_update, load_model, save_model, train, AdamConfig, AdamState, CnnModel, FeatureSet, Params,
    TrainConfig,
};
use wristgest_core::rngutil::rng;
use wristgest_core::Error;

const INPUT: usize = 40 * 44;

/// Class `c` lights up its own band of eight MFCC rows on top of small noise.
fn separable_set(per_class: usize, seed: u64) -> FeatureSet {
    let mut r = rng(seed);
    let mut set = FeatureSet::new(INPUT);
    for i in 0..per_class * 5 {
        let c = i % 5;
        let x: Vec<f64> = (0..INPUT)
            .map(|k| {
                let row = k / 44;
                let base = if row / 8 == c { 2.0 } else { -0.5 };
                base + 0.1 * r.random_range(-1.0..1.0)
            })
            .collect();
        set.push(&x, c);
    }
    set
}

fn small_cfg(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig { max_epochs: epochs, batch_size: 8, seed, ..Default::default() }
}

#[test]
fn adam_scalar_toy_first_step() {
    // f(θ) = θ², g = 2θ = 2 at θ = 1. At t = 1, m̂ = g and v̂ = g².
    let cfg = AdamConfig::default();
    let (mut th, mut m, mut v) = ([1.0], [0.0], [0.0]);
    let g = [2.0 * th[0]];
    adam_update(&mut th, &g, &mut m, &mut v, 1, &cfg);
    let expected = 1.0 - 0.001 * (2.0 / (2.0 + 1e-8));
    assert!((th[0] - expected).abs() < 1e-15);
    assert!((th[0] - 0.999).abs() < 1e-9);
}

#[test]
fn adam_zero_gradient_leaves_parameters() {
    let model = CnnModel::new(4);
    let mut p = model.params.clone();
    let mut st = AdamState::new(&model.arch);
    for _ in 0..3 {
        adam_step(&mut p, &Params::zeros(&model.arch), &mut st, &AdamConfig::default()).unwrap();
    }
    assert_eq!(p, model.params);
    assert_eq!(st.t, 3);
}

#[test]
fn adam_converges_on_separable_toy() {
    let set = separable_set(4, 11);
    assert_eq!(set.len(), 20);
    let idx: Vec<usize> = (0..20).collect();
    let (x, y) = set.gather(&idx);
    let mut model = CnnModel::new(11);
    let mut st = AdamState::new(&model.arch);
    let cfg = AdamConfig::default();
    let start = model.loss(&x, &y).unwrap();
    for _ in 0..200 {
        let (_, g) = model.loss_and_gradients(&x, &y, None).unwrap();
        adam_step(&mut model.params, &g, &mut st, &cfg).unwrap();
        assert!(model.params.all_finite());
    }
    let end = model.loss(&x, &y).unwrap();
    assert!(end < 0.05, "loss {start} -> {end}");
}

#[test]
fn zero_epochs_returns_initial_model() {
    let set = separable_set(2, 1);
    let model = CnnModel::new(5);
    let (out, history) = train(model.clone(), &set, &set, &small_cfg(0, 5)).unwrap();
    assert_eq!(out, model);
    assert!(history.epochs.is_empty());
    assert_eq!(history.best_epoch, None);
}

#[test]
fn sanity_fit_reaches_full_validation_accuracy() {
    let set = separable_set(4, 2);
    let (_, history) = train(CnnModel::new(2), &set, &set, &small_cfg(30, 2)).unwrap();
    let best = history.best_epoch.unwrap();
    let kept = history.epochs[best - 1];
    assert_eq!(kept.val_acc, 1.0, "{history:?}");
    assert!(history.epochs.iter().all(|e| e.train_loss.is_finite() && e.val_loss.is_finite()));
}

#[test]
fn training_is_bit_reproducible() {
    let set = separable_set(3, 3);
    let val = separable_set(1, 4);
    let run = || train(CnnModel::new(9), &set, &val, &small_cfg(3, 9)).unwrap();
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a.params, b.params);
    assert_eq!(ha, hb);
    let (c, _) = train(CnnModel::new(9), &set, &val, &small_cfg(3, 10)).unwrap();
    assert_ne!(a.params, c.params);
}

#[test]
fn early_stop_keeps_best_epoch() {
    let set = separable_set(3, 6);
    // A validation set with flipped labels gets worse as training fits.
    let mut val = separable_set(1, 7);
    val.labels.iter_mut().for_each(|l| *l = (*l + 1) % 5);
    let cfg = TrainConfig { early_stop_patience: 2, ..small_cfg(20, 6) };
    let (model, history) = train(CnnModel::new(6), &set, &val, &cfg).unwrap();
    let best = history.best_epoch.unwrap();
    assert!(history.stopped_early);
    assert_eq!(history.epochs.len(), best + 2);
    let min = history.epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(history.epochs[best - 1].val_loss, min);
    let (loss, _) = wristgest_core::model::evaluate_set(&model, &val).unwrap();
    assert_eq!(loss, min);
}

#[test]
fn history_csv_layout() {
    let set = separable_set(1, 8);
    let (_, history) = train(CnnModel::new(8), &set, &set, &small_cfg(2, 8)).unwrap();
    let csv = history.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,val_loss,train_acc,val_acc");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,"));
}

#[test]
fn invalid_configs_are_rejected() {
    let set = separable_set(1, 1);
    let bad_lr = TrainConfig { learning_rate: 0.0, ..small_cfg(1, 1) };
    assert!(matches!(train(CnnModel::new(1), &set, &set, &bad_lr), Err(Error::InvalidConfig(_))));
    let bad_batch = TrainConfig { batch_size: 0, ..small_cfg(1, 1) };
    assert!(matches!(train(CnnModel::new(1), &set, &set, &bad_batch), Err(Error::InvalidConfig(_))));
    let empty = FeatureSet::new(INPUT);
    assert!(matches!(train(CnnModel::new(1), &empty, &set, &small_cfg(1, 1)), Err(Error::EmptyBatch)));
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let model = CnnModel::new(21);
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    let mut r = rng(21);
    for _ in 0..10 {
        let x: Vec<f64> = (0..INPUT).map(|_| r.random_range(-3.0..3.0)).collect();
        let (a, b) = (model.predict(&x).unwrap(), back.predict(&x).unwrap());
        for (pa, pb) in a.probs.iter().zip(&b.probs) {
            assert!((pa - pb).abs() <= 1e-6);
        }
    }
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["format_version"], 1);
    assert_eq!(doc["arch_meta"]["conv_channels"], serde_json::json!([8, 16, 32, 32]));
}

fn tampered(edit: impl FnOnce(&mut serde_json::Value)) -> Error {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&CnnModel::new(3), &path).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    edit(&mut doc);
    std::fs::write(&path, doc.to_string()).unwrap();
    load_model(&path).unwrap_err()
}

#[test]
fn narrow_output_layer_is_a_shape_mismatch() {
    let err = tampered(|d| {
        let w = d["parameters"]["dense2"]["weights"].as_array_mut().unwrap();
        w.pop();
        d["parameters"]["dense2"]["bias"].as_array_mut().unwrap().pop();
    });
    assert!(matches!(err, Error::ShapeMismatch(_)), "{err}");
}

#[test]
fn future_format_is_a_version_mismatch() {
    let err = tampered(|d| d["format_version"] = serde_json::json!(2));
    assert!(matches!(err, Error::VersionMismatch(2)), "{err}");
}

#[test]
fn missing_model_file() {
    let err = load_model("/nonexistent/model.json").unwrap_err();
    assert!(matches!(err, Error::MissingFile(_)));
}
