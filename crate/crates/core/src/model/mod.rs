//! Gesture classifier: network, optimiser, training loop and model files.

mod adam;
mod cnn;
mod io;
mod train;

pub use adam::{adam_step, adam_update, AdamConfig, AdamState};
pub use cnn::{
    cross_entropy, softmax, ArchMeta, CnnModel, ConvLayer, DenseLayer, ForwardPass, GesturePrediction, Params,
};
pub use io::{load_model, model_from_json, model_to_json, save_model, FORMAT_VERSION};
pub use train::{evaluate_set, train, train_with_progress, EpochStats, FeatureSet, History, TrainConfig};
