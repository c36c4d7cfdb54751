//! A small gesture model trained once and shared by the streaming tests.
//!
//! Training takes about half a minute, so the result is cached in memory
//! per test binary and on disk under the cargo target tmp dir across them.

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use wristgest_core::eval::{synthetic_corpus, train_with_ratio, CorpusConfig, ExperimentConfig};
use wristgest_core::model::{load_model, save_model, CnnModel, FORMAT_VERSION};

pub const FIXTURE_PER_CLASS: usize = 40;
pub const FIXTURE_RATIO: usize = 10;
pub const FIXTURE_EPOCHS: usize = 20;
pub const FIXTURE_SEED: u64 = 1;

fn cache_path() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!(
        "fixture_model_v{FORMAT_VERSION}_{FIXTURE_PER_CLASS}_{FIXTURE_RATIO}_{FIXTURE_EPOCHS}_{FIXTURE_SEED}.json"
    ))
}

pub fn train_fixture() -> CnnModel {
    let data =
        synthetic_corpus(&CorpusConfig { per_class: FIXTURE_PER_CLASS, seed: FIXTURE_SEED, ..Default::default() })
            .expect("corpus");
    let mut cfg = ExperimentConfig::default();
    cfg.train.seed = FIXTURE_SEED;
    cfg.train.max_epochs = FIXTURE_EPOCHS;
    train_with_ratio(&data, FIXTURE_RATIO, &cfg, |_| {}).expect("training").0
}

pub fn fixture_model() -> Arc<CnnModel> {
    static MODEL: OnceLock<Arc<CnnModel>> = OnceLock::new();
    MODEL
        .get_or_init(|| {
            let path = cache_path();
            if let Ok(m) = load_model(&path) {
                return Arc::new(m);
            }
            let m = train_fixture();
            // Write then rename so a concurrent binary never reads half a file.
            let tmp = path.with_extension(format!("{}.tmp", std::process::id()));
            if save_model(&m, &tmp).is_ok() {
                let _ = std::fs::rename(&tmp, &path);
            }
            Arc::new(m)
        })
        .clone()
}
