//! Butterworth band-pass design as a cascade of biquads.
//!
//! The analog low-pass prototype is mapped to a band-pass, discretised with
//! the bilinear transform after pre-warping both band edges, and split into
//! second-order sections. Each section carries one zero at DC and one at
//! Nyquist and is scaled to unit gain at the digital centre frequency, so
//! the cascade has unit gain there too.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::{Error, Result};

pub const GESTURE_LOW_HZ: f64 = 10.0;
pub const GESTURE_HIGH_HZ: f64 = 500.0;
pub const DEFAULT_PROTOTYPE_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    /// Complex response at normalised angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b0 + z1 * self.b1 + z2 * self.b2) / (1.0 + z1 * self.a1 + z2 * self.a2)
    }

    fn as_array(&self) -> [f64; 5] {
        [self.b0, self.b1, self.b2, self.a1, self.a2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignMeta {
    pub low_hz: f64,
    pub high_hz: f64,
    pub prototype_order: usize,
    pub sample_rate_hz: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiquadCascade {
    pub sections: Vec<Biquad>,
    pub meta: DesignMeta,
}

#[derive(Serialize, Deserialize)]
struct CascadeJson {
    sections: Vec<[f64; 5]>,
    meta: DesignMeta,
}

impl Serialize for BiquadCascade {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CascadeJson { sections: self.sections.iter().map(Biquad::as_array).collect(), meta: self.meta }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BiquadCascade {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = CascadeJson::deserialize(d)?;
        Ok(BiquadCascade {
            sections: raw.sections.into_iter().map(|[b0, b1, b2, a1, a2]| Biquad { b0, b1, b2, a1, a2 }).collect(),
            meta: raw.meta,
        })
    }
}

impl BiquadCascade {
    /// The 10-500 Hz gesture band at the given rate.
    pub fn gesture_band(sample_rate_hz: u32) -> Result<Self> {
        design_bandpass(GESTURE_LOW_HZ, GESTURE_HIGH_HZ, DEFAULT_PROTOTYPE_ORDER, sample_rate_hz)
    }

    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.meta.sample_rate_hz as f64;
        self.sections.iter().map(|s| s.response(w)).product()
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    pub fn new_state(&self) -> FilterState {
        FilterState { z: vec![[0.0; 2]; self.sections.len()] }
    }

    /// Filters `samples` in place, carrying `state` across calls.
    pub fn process_in_place(&self, state: &mut FilterState, samples: &mut [f64]) {
        assert_eq!(state.z.len(), self.sections.len(), "filter state from a different cascade");
        for (sec, z) in self.sections.iter().zip(state.z.iter_mut()) {
            let (mut z0, mut z1) = (z[0], z[1]);
            for x in samples.iter_mut() {
                // direct form II transposed
                let y = sec.b0 * *x + z0;
                z0 = sec.b1 * *x - sec.a1 * y + z1;
                z1 = sec.b2 * *x - sec.a2 * y;
                *x = y;
            }
            *z = [z0, z1];
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cascade serialises")
    }
}

/// Per-stream delay line. Not shared between streams.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    z: Vec<[f64; 2]>,
}

impl FilterState {
    pub fn reset(&mut self) {
        self.z.iter_mut().for_each(|z| *z = [0.0; 2]);
    }
}

pub fn design_bandpass(
    low_hz: f64,
    high_hz: f64,
    prototype_order: usize,
    sample_rate_hz: u32,
) -> Result<BiquadCascade> {
    let fs = sample_rate_hz as f64;
    if !(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0) {
        return Err(Error::InvalidBand(format!("need 0 < low ({low_hz}) < high ({high_hz}) < fs/2 ({})", fs / 2.0)));
    }
    if prototype_order < 2 || !prototype_order.is_multiple_of(2) {
        return Err(Error::InvalidBand(format!("prototype order {prototype_order} must be even and >= 2")));
    }

    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let (w_lo, w_hi) = (warp(low_hz), warp(high_hz));
    let bw = w_hi - w_lo;
    let w0_sq = w_lo * w_hi;
    let n = prototype_order as f64;

    let mut z_poles = Vec::with_capacity(prototype_order);
    for k in 0..prototype_order {
        let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
        let p = Complex64::from_polar(1.0, theta);
        // s^2 - p*bw*s + w0^2 = 0
        let pb = p * bw;
        let disc = (pb * pb - 4.0 * w0_sq).sqrt();
        for s in [(pb + disc) * 0.5, (pb - disc) * 0.5] {
            let z = (2.0 * fs + s) / (2.0 * fs - s);
            if z.im > 0.0 {
                z_poles.push(z);
            }
        }
    }
    if z_poles.len() != prototype_order {
        return Err(Error::UnstableDesign(format!(
            "expected {prototype_order} upper-half-plane poles, found {}",
            z_poles.len()
        )));
    }
    z_poles.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap_or(std::cmp::Ordering::Equal));

    let w_center = 2.0 * (w0_sq.sqrt() / (2.0 * fs)).atan();
    let mut sections = Vec::with_capacity(prototype_order);
    for z in z_poles {
        let mut sec = Biquad { b0: 1.0, b1: 0.0, b2: -1.0, a1: -2.0 * z.re, a2: z.norm_sqr() };
        if !sec.is_stable() || !sec.a1.is_finite() {
            return Err(Error::UnstableDesign(format!("pole {z} outside unit circle")));
        }
        let g = 1.0 / sec.response(w_center).norm();
        sec.b0 *= g;
        sec.b2 *= g;
        sections.push(sec);
    }
    Ok(BiquadCascade { sections, meta: DesignMeta { low_hz, high_hz, prototype_order, sample_rate_hz } })
}

/// Causal filtering from zero initial state.
pub fn apply(filter: &BiquadCascade, clip: &AudioClip) -> Result<AudioClip> {
    if clip.sample_rate_hz != filter.meta.sample_rate_hz {
        return Err(Error::RateMismatch { expected: filter.meta.sample_rate_hz, actual: clip.sample_rate_hz });
    }
    let mut out = clip.samples.clone();
    let mut state = filter.new_state();
    filter.process_in_place(&mut state, &mut out);
    Ok(AudioClip { samples: out, sample_rate_hz: clip.sample_rate_hz })
}
