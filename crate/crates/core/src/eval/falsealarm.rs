//! What the second stage thinks of first-stage triggers on a stream.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::model::CnnModel;
use crate::pipeline::{run_source, GesturePipeline, Pacing, PipelineConfig, ReplaySource, TriggerRecord};
use crate::Result;

/// Probability histogram bins: `[i/n, (i+1)/n)`, the last bin closed.
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerProfile {
    pub duration_s: f64,
    pub triggers: Vec<TriggerRecord>,
    pub inferences: u64,
    pub epsilon: f64,
    pub secondary_epsilon: f64,
}

impl TriggerProfile {
    pub fn max_probs(&self) -> Vec<f64> {
        self.triggers.iter().map(|t| t.max_prob).collect()
    }

    /// Triggers whose best window reaches `epsilon`, i.e. that would be
    /// reported as gestures at that threshold.
    pub fn alarms_at(&self, epsilon: f64) -> usize {
        self.triggers.iter().filter(|t| t.max_prob >= epsilon).count()
    }

    pub fn per_hour(&self, count: usize) -> f64 {
        if self.duration_s > 0.0 {
            count as f64 * 3600.0 / self.duration_s
        } else {
            0.0
        }
    }

    pub fn median_max_prob(&self) -> Option<f64> {
        median(&self.max_probs())
    }

    pub fn histogram(&self) -> [u64; HISTOGRAM_BINS] {
        let mut h = [0; HISTOGRAM_BINS];
        for p in self.max_probs() {
            h[((p * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)] += 1;
        }
        h
    }

    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.histogram().iter().enumerate() {
            let n = HISTOGRAM_BINS as f64;
            let _ = writeln!(s, "{},{},{}", i as f64 / n, (i + 1) as f64 / n, c);
        }
        s
    }
}

impl fmt::Display for TriggerProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "stream {:.1} s, {} triggers, {} inferences",
            self.duration_s,
            self.triggers.len(),
            self.inferences
        )?;
        match self.median_max_prob() {
            Some(m) => writeln!(f, "median max probability {m:.4}")?,
            None => writeln!(f, "median max probability -")?,
        }
        for eps in [self.epsilon, self.secondary_epsilon] {
            let n = self.alarms_at(eps);
            writeln!(f, "events at epsilon {eps:.2}: {n} ({:.1} per hour)", self.per_hour(n))?;
        }
        Ok(())
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Replays `stream` through the full two-stage pipeline and records every
/// trigger with its best window probability.
pub fn false_alarm_profile(model: Arc<CnnModel>, stream: &AudioClip, cfg: &PipelineConfig) -> Result<TriggerProfile> {
    let mut pipeline = GesturePipeline::new(model, cfg.clone(), stream.sample_rate_hz)?;
    let summary = run_source(&mut pipeline, &mut ReplaySource::new(stream.clone()), Pacing::Fast, 0.1, |_| {})?;
    Ok(TriggerProfile {
        duration_s: summary.stream_s,
        triggers: pipeline.take_triggers(),
        inferences: summary.stats.inferences,
        epsilon: cfg.nms.epsilon,
        secondary_epsilon: cfg.nms.secondary_epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gesture::GestureClass;

    fn profile(probs: &[f64]) -> TriggerProfile {
        TriggerProfile {
            duration_s: 1800.0,
            triggers: probs
                .iter()
                .map(|&p| TriggerRecord {
                    t_start: 0.0,
                    peak_amplitude: 0.1,
                    trigger_level: 0.01,
                    max_prob: p,
                    class: GestureClass::Pinch,
                    event_seq: None,
                })
                .collect(),
            inferences: 11 * probs.len() as u64,
            epsilon: 0.7,
            secondary_epsilon: 0.6,
        }
    }

    #[test]
    fn counts_histogram_and_median() {
        let p = profile(&[0.3, 0.65, 0.7, 0.95, 1.0]);
        assert_eq!(p.alarms_at(0.7), 3);
        assert_eq!(p.alarms_at(0.6), 4);
        assert_eq!(p.per_hour(3), 6.0);
        assert_eq!(p.median_max_prob(), Some(0.7));
        let h = p.histogram();
        assert_eq!(h.iter().sum::<u64>(), 5);
        assert_eq!(h[HISTOGRAM_BINS - 1], 2);
        assert_eq!(h[6], 1);
        assert_eq!(median(&[1.0, 3.0]), Some(2.0));
        assert_eq!(median(&[]), None);
    }
}
