//! Gesture recognition from bone-conducted wrist audio.
//!
//! The crate is organised along the processing chain:
//!
//! ```text
//! audio -> filter -> detector -> features -> model -> eval::nms -> pipeline
//! ```
//!
//! `augment` and `dataset` build training corpora; `eval` holds metrics and
//! the offline experiments; `pipeline` runs the two-stage detector over a
//! live or replayed stream.

pub mod audio;
pub mod augment;
pub mod corpus;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod eval;
pub mod features;
pub mod filter;
pub mod gesture;
pub mod model;
pub mod pipeline;
pub mod ring;
pub mod rngutil;
pub mod wire;

pub use audio::{AudioClip, CANONICAL_RATE};
pub use error::{Error, Result};
pub use gesture::GestureClass;
