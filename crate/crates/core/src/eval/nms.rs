//! Greedy non-maximum suppression over window-level detections.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::gesture::{GestureClass, NUM_CLASSES};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmsConfig {
    pub epsilon: f64,
    pub secondary_epsilon: f64,
    pub suppression_window_s: f64,
}

impl Default for NmsConfig {
    fn default() -> Self {
        Self { epsilon: 0.7, secondary_epsilon: 0.6, suppression_window_s: 0.5 }
    }
}

impl NmsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        if !(self.secondary_epsilon > 0.0 && self.secondary_epsilon <= self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "secondary epsilon must lie in (0, epsilon], got {}",
                self.secondary_epsilon
            )));
        }
        if self.suppression_window_s.is_nan() || self.suppression_window_s < 0.0 {
            return Err(Error::InvalidConfig("suppression window must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, secondary_epsilon: self.secondary_epsilon.min(epsilon), ..self }
    }
}

/// A window-level classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub t: f64,
    pub class: GestureClass,
    pub p: f64,
    pub probs: [f64; NUM_CLASSES],
}

/// Higher probability first; ties go to the earlier time, then the lower
/// class index, so the result never depends on input order.
fn priority(a: &Detection, b: &Detection) -> Ordering {
    b.p.total_cmp(&a.p).then(a.t.total_cmp(&b.t)).then(a.class.cmp(&b.class))
}

/// Drops detections below `epsilon`, then repeatedly keeps the strongest
/// remaining one and discards every detection of any class within
/// `±suppression_window_s` of it. Survivors are returned in time order.
pub fn nms(detections: &[Detection], cfg: &NmsConfig) -> Vec<Detection> {
    let mut pending: Vec<Detection> = detections.iter().copied().filter(|d| d.p >= cfg.epsilon).collect();
    pending.sort_by(priority);
    let mut kept: Vec<Detection> = Vec::new();
    for d in pending {
        if kept.iter().all(|k| (k.t - d.t).abs() > cfg.suppression_window_s) {
            kept.push(d);
        }
    }
    kept.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.class.cmp(&b.class)));
    kept
}
