//! Stage one: a cheap amplitude gate over the filtered stream.
//!
//! Every `step_s` the detector looks at the last `window_s` of audio. When a
//! sample in the central region `[center_lo_s, center_hi_s]` exceeds the
//! trigger level, the middle `crop_s` of the window is emitted as a
//! candidate. Samples that already belong to an emitted crop cannot trigger
//! again, and triggers are at least `refractory_s` apart.

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::ring::RingBuffer;
use crate::{Error, Result};

/// Trigger levels never drop below this amplitude.
pub const MIN_TRIGGER_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Threshold {
    /// `k` times the rolling median absolute amplitude.
    Adaptive {
        k: f64,
    },
    Absolute {
        level: f64,
    },
}

impl Threshold {
    pub fn mode_name(&self) -> &'static str {
        match self {
            Threshold::Adaptive { .. } => "adaptive",
            Threshold::Absolute { .. } => "absolute",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub window_s: f64,
    pub step_s: f64,
    pub center_lo_s: f64,
    pub center_hi_s: f64,
    pub crop_s: f64,
    pub threshold: Threshold,
    pub refractory_s: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window_s: 2.0,
            step_s: 0.1,
            center_lo_s: 0.5,
            center_hi_s: 1.0,
            crop_s: 1.0,
            threshold: Threshold::Adaptive { k: 6.0 },
            refractory_s: 0.5,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.window_s > 0.0 && self.step_s > 0.0) {
            return bad("window and step must be positive");
        }
        if !(0.0 <= self.center_lo_s && self.center_lo_s < self.center_hi_s && self.center_hi_s <= self.window_s) {
            return bad("need 0 <= center_lo < center_hi <= window");
        }
        if !(self.crop_s > 0.0 && self.crop_s <= self.window_s) {
            return bad("crop must lie in (0, window]");
        }
        if self.refractory_s < 0.0 {
            return bad("refractory must be non-negative");
        }
        match self.threshold {
            Threshold::Adaptive { k } if k > 0.0 => Ok(()),
            Threshold::Absolute { level } if level > 0.0 && level <= 1.0 => Ok(()),
            Threshold::Adaptive { .. } => bad("adaptive multiplier must be positive"),
            Threshold::Absolute { .. } => bad("absolute threshold must lie in (0, 1]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSegment {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    /// Stream time of the first cropped sample.
    pub t_start: f64,
    pub peak_amplitude: f64,
    pub trigger_level: f64,
}

impl CandidateSegment {
    pub fn to_clip(&self) -> AudioClip {
        AudioClip { samples: self.samples.clone(), sample_rate_hz: self.sample_rate_hz }
    }
}

/// Median absolute amplitude of the most recent two seconds.
pub fn noise_floor(samples: &[f64], sample_rate_hz: u32) -> Result<f64> {
    let rate = sample_rate_hz as usize;
    if samples.len() < rate / 2 {
        return Err(Error::InsufficientData(format!("noise floor needs >= 0.5 s, got {} samples", samples.len())));
    }
    let recent = &samples[samples.len().saturating_sub(2 * rate)..];
    Ok(median_abs(recent))
}

pub(crate) fn median_abs(samples: &[f64]) -> f64 {
    let mut mags: Vec<f64> = samples.iter().map(|s| s.abs()).collect();
    let n = mags.len();
    if n == 0 {
        return 0.0;
    }
    let cmp = |a: &f64, b: &f64| a.total_cmp(b);
    let mid = n / 2;
    let (lower, upper_mid, _) = mags.select_nth_unstable_by(mid, cmp);
    let upper_mid = *upper_mid;
    if n % 2 == 1 {
        upper_mid
    } else {
        let lower_mid = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_mid + upper_mid)
    }
}

#[derive(Debug, Clone)]
pub struct EventDetector {
    cfg: DetectorConfig,
    sample_rate_hz: u32,
    last_trigger: Option<f64>,
    /// Absolute sample index before which samples are already cropped.
    locked_until: u64,
}

impl EventDetector {
    pub fn new(cfg: DetectorConfig, sample_rate_hz: u32) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, sample_rate_hz, last_trigger: None, locked_until: 0 })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    fn samples(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate_hz as f64).round() as usize
    }

    pub fn trigger_level(&self, window: &[f64]) -> f64 {
        match self.cfg.threshold {
            Threshold::Adaptive { k } => (k * median_abs(window)).max(MIN_TRIGGER_LEVEL),
            Threshold::Absolute { level } => level.max(MIN_TRIGGER_LEVEL),
        }
    }

    /// Inspects the current window; the ring's write head defines stream time.
    pub fn scan(&mut self, ring: &RingBuffer) -> Option<CandidateSegment> {
        let win_len = self.samples(self.cfg.window_s);
        if ring.len() < win_len {
            return None;
        }
        let stream_time = ring.stream_time();
        if let Some(last) = self.last_trigger {
            if stream_time + 1e-9 < last + self.cfg.refractory_s {
                return None;
            }
        }
        let window = ring.snapshot(win_len);
        let window_start = ring.write_head() - win_len as u64;

        let lo = self.samples(self.cfg.center_lo_s);
        let hi = self.samples(self.cfg.center_hi_s).min(win_len);
        let eligible_from = (self.locked_until.saturating_sub(window_start) as usize).max(lo);
        if eligible_from >= hi {
            return None;
        }
        let level = self.trigger_level(&window);
        let peak = window[eligible_from..hi].iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if peak <= level {
            return None;
        }

        let crop_len = self.samples(self.cfg.crop_s);
        let crop_start = (win_len - crop_len) / 2;
        self.last_trigger = Some(stream_time);
        self.locked_until = window_start + (crop_start + crop_len) as u64;
        Some(CandidateSegment {
            samples: window[crop_start..crop_start + crop_len].to_vec(),
            sample_rate_hz: self.sample_rate_hz,
            t_start: (window_start + crop_start as u64) as f64 / self.sample_rate_hz as f64,
            peak_amplitude: peak,
            trigger_level: level,
        })
    }

    pub fn reset(&mut self) {
        self.last_trigger = None;
        self.locked_until = 0;
    }
}

/// Runs the detector over an already filtered clip, one scan per step.
pub fn detect_offline(filtered: &AudioClip, cfg: &DetectorConfig) -> Result<Vec<CandidateSegment>> {
    let mut det = EventDetector::new(*cfg, filtered.sample_rate_hz)?;
    let mut ring = RingBuffer::new(cfg.window_s, filtered.sample_rate_hz);
    let step = det.samples(cfg.step_s).max(1);
    let mut out = Vec::new();
    for chunk in filtered.samples.chunks(step) {
        ring.push(chunk)?;
        if let Some(seg) = det.scan(&ring) {
            out.push(seg);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    const FS: u32 = 16000;

    fn burst_stream(len_s: f64, bursts: &[(f64, f64)]) -> AudioClip {
        let mut x = vec![0.0; (len_s * FS as f64) as usize];
        for &(t, amp) in bursts {
            let c = (t * FS as f64) as usize;
            for i in 0..80 {
                if let Some(s) = x.get_mut(c + i) {
                    *s = amp * (1.0 - i as f64 / 80.0) * if i % 2 == 0 { 1.0 } else { -1.0 };
                }
            }
        }
        AudioClip::new(x, FS).unwrap()
    }

    #[test]
    fn noise_floor_cases() {
        assert_eq!(noise_floor(&vec![0.0; 16000], FS).unwrap(), 0.0);
        assert!((noise_floor(&vec![0.2; 16000], FS).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(noise_floor(&[0.0; 100], FS), Err(Error::InsufficientData(_))));

        let mut rng = crate::rngutil::rng(7);
        let x: Vec<f64> = (0..32000).map(|_| rng.random_range(-0.1..0.1)).collect();
        let nf = noise_floor(&x, FS).unwrap();
        assert!((nf - 0.05).abs() <= 0.005, "{nf}");
    }

    #[test]
    fn noise_floor_uses_last_two_seconds() {
        let mut x = vec![0.9; 16000];
        x.extend(vec![0.1; 32000]);
        assert!((noise_floor(&x, FS).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn silence_never_triggers() {
        let segs = detect_offline(&AudioClip::silence(FS as usize * 10, FS), &DetectorConfig::default()).unwrap();
        assert!(segs.is_empty());
    }

    #[test]
    fn burst_in_center_yields_crop_containing_peak() {
        // Step-by-step: first scan at which the burst sits at window-relative 0.7 s.
        let mut ring = RingBuffer::new(2.0, FS);
        let mut det = EventDetector::new(DetectorConfig::default(), FS).unwrap();
        let stream = burst_stream(3.0, &[(0.7, 0.5)]);
        // push exactly 2.0 s so the window spans [0, 2] and the burst is at 0.7
        for chunk in stream.samples[..32000].chunks(1600) {
            ring.push(chunk).unwrap();
        }
        let seg = det.scan(&ring).expect("trigger");
        assert_eq!(seg.samples.len(), 16000);
        assert!((seg.t_start - 0.5).abs() < 1e-12);
        let peak_idx = (0.7 * FS as f64) as usize - 8000;
        assert_eq!(seg.samples[peak_idx], 0.5);
        assert!(seg.peak_amplitude >= seg.trigger_level);
    }

    #[test]
    fn burst_outside_center_triggers_later() {
        // Burst at window-relative 1.8 s when the window first fills (t = 2.0 s).
        let stream = burst_stream(5.0, &[(1.8, 0.5)]);
        let mut ring = RingBuffer::new(2.0, FS);
        let mut det = EventDetector::new(DetectorConfig::default(), FS).unwrap();
        let mut fired_at = None;
        for (i, chunk) in stream.samples.chunks(1600).enumerate() {
            ring.push(chunk).unwrap();
            let t = (i + 1) as f64 * 0.1;
            if (t - 2.0).abs() < 1e-9 {
                assert!(det.scan(&ring).is_none());
                continue;
            }
            if det.scan(&ring).is_some() {
                fired_at.get_or_insert(t);
            }
        }
        let delay = fired_at.expect("eventually triggers") - 2.0;
        assert!((0.79..=1.31).contains(&delay), "delay {delay}");
    }

    #[test]
    fn long_burst_fires_once() {
        let mut x = vec![0.0; FS as usize * 6];
        for i in 0..4800 {
            x[40000 + i] = 0.4 * (2.0 * std::f64::consts::PI * 100.0 * i as f64 / FS as f64).sin();
        }
        let segs = detect_offline(&AudioClip::new(x, FS).unwrap(), &DetectorConfig::default()).unwrap();
        assert_eq!(segs.len(), 1);
    }

    #[test]
    fn invalid_configs() {
        let c = DetectorConfig { center_lo_s: 1.5, ..DetectorConfig::default() };
        assert!(c.validate().is_err());
        let c = DetectorConfig { threshold: Threshold::Absolute { level: 1.5 }, ..DetectorConfig::default() };
        assert!(c.validate().is_err());
        let c = DetectorConfig { threshold: Threshold::Adaptive { k: 0.0 }, ..DetectorConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn deterministic() {
        let s = burst_stream(8.0, &[(2.3, 0.3), (4.1, 0.6), (6.6, 0.2)]);
        let a = detect_offline(&s, &DetectorConfig::default()).unwrap();
        let b = detect_offline(&s, &DetectorConfig::default()).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a, b);
    }
}
