//! Synthetic gesture and background-noise generators.
//!
//! Stand-ins for recorded data: each gesture class gets a distinct
//! time/frequency signature inside 10–500 Hz, and three coloured-noise
//! families play the part of everyday background recordings.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, CANONICAL_RATE};
use crate::gesture::GestureClass;
use crate::rngutil::rng;
use crate::{Error, Result};

/// Clip length of every synthetic gesture sample.
pub const SYNTH_CLIP_S: f64 = 1.0;
/// Peak amplitude of an unjittered template.
pub const TEMPLATE_PEAK: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    /// Gain spread in dB (uniform in ±).
    pub amplitude_db: f64,
    /// Relative spread of durations and gaps.
    pub duration_frac: f64,
    /// Relative spread of every frequency.
    pub frequency_frac: f64,
    /// Spread of the gesture centre around mid-clip, seconds.
    pub onset_s: f64,
}

impl Jitter {
    pub const NONE: Jitter = Jitter { amplitude_db: 0.0, duration_frac: 0.0, frequency_frac: 0.0, onset_s: 0.0 };
}

impl Default for Jitter {
    fn default() -> Self {
        Self { amplitude_db: 3.0, duration_frac: 0.2, frequency_frac: 0.1, onset_s: 0.04 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthGestureSpec {
    pub class: GestureClass,
    pub jitter: Jitter,
    /// RMS of the white floor standing in for a quiet room.
    pub noise_floor_rms: f64,
}

impl SynthGestureSpec {
    pub fn new(class: GestureClass) -> Self {
        Self { class, jitter: Jitter::default(), noise_floor_rms: 1e-4 }
    }

    /// Template exactly as specified: no jitter, no floor.
    pub fn exact(class: GestureClass) -> Self {
        Self { class, jitter: Jitter::NONE, noise_floor_rms: 0.0 }
    }

    pub fn parse(class: &str) -> Result<Self> {
        Ok(Self::new(class.parse()?))
    }
}

struct Draw {
    gain: f64,
    dur: f64,
    freq: f64,
    centre_s: f64,
}

fn spread(rng: &mut ChaCha8Rng, width: f64) -> f64 {
    if width > 0.0 {
        rng.random_range(-width..=width)
    } else {
        0.0
    }
}

/// Hann window value at position `u` in [0, 1].
fn hann(u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        0.5 - 0.5 * (2.0 * PI * u).cos()
    } else {
        0.0
    }
}

/// Envelope with raised-cosine edges of `taper` seconds on both ends.
fn tukey(t: f64, len: f64, taper: f64) -> f64 {
    if t < 0.0 || t > len {
        0.0
    } else if t < taper {
        0.5 - 0.5 * (PI * t / taper).cos()
    } else if t > len - taper {
        0.5 - 0.5 * (PI * (len - t) / taper).cos()
    } else {
        1.0
    }
}

/// Adds `f(t)` for t in [0, len) seconds at sample `start`.
fn add_event(out: &mut [f64], start: f64, len: f64, rate: f64, mut f: impl FnMut(f64) -> f64) {
    let first = (start * rate).ceil().max(0.0) as usize;
    let last = (((start + len) * rate).floor() as usize).min(out.len().saturating_sub(1));
    for (i, slot) in out.iter_mut().enumerate().take(last + 1).skip(first) {
        *slot += f(i as f64 / rate - start);
    }
}

/// Cosines at `freqs`, all in phase at the burst centre, under a Hann
/// envelope of `len` seconds: a band-limited click.
fn click(out: &mut [f64], start: f64, len: f64, rate: f64, freqs: &[f64]) {
    add_event(out, start, len, rate, |t| {
        let s: f64 = freqs.iter().map(|&f| (2.0 * PI * f * (t - len / 2.0)).cos()).sum();
        hann(t / len) * s
    });
}

/// `n` frequencies stratified over [lo, hi] so the click covers the band.
fn spread_freqs(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64, freq_scale: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let u = (i as f64 + rng.random_range(0.0..1.0)) / n as f64;
            freq_scale * (lo + u * (hi - lo))
        })
        .collect()
}

fn normalise_peak(samples: &mut [f64], peak: f64) {
    let m = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if m > 0.0 {
        samples.iter_mut().for_each(|s| *s *= peak / m);
    }
}

/// One 1 s clip of the given gesture class at 16 kHz.
pub fn synth_gesture(spec: &SynthGestureSpec, seed: u64) -> AudioClip {
    let mut r = rng(seed);
    let j = spec.jitter;
    let d = Draw {
        gain: 10f64.powf(spread(&mut r, j.amplitude_db) / 20.0),
        dur: 1.0 + spread(&mut r, j.duration_frac),
        freq: 1.0 + spread(&mut r, j.frequency_frac),
        centre_s: SYNTH_CLIP_S / 2.0 + spread(&mut r, j.onset_s),
    };
    let rate = CANONICAL_RATE as f64;
    let n = (SYNTH_CLIP_S * rate).round() as usize;
    let mut g = vec![0.0; n];

    match spec.class {
        GestureClass::Pinch => {
            let len = 0.060 * d.dur;
            let f = 80.0 * d.freq;
            let attack = 0.006 * d.dur;
            let tau = len / 4.0;
            add_event(&mut g, d.centre_s - len / 2.0, len, rate, |t| {
                let env = if t < attack { 0.5 - 0.5 * (PI * t / attack).cos() } else { (-(t - attack) / tau).exp() };
                env * tukey(t, len, 0.01 * d.dur) * (2.0 * PI * f * t).sin()
            });
        }
        GestureClass::RubUp | GestureClass::RubDown => {
            let len = 0.300 * d.dur;
            let (f0, f1) = if spec.class == GestureClass::RubUp { (50.0, 250.0) } else { (250.0, 50.0) };
            let (f0, f1) = (f0 * d.freq, f1 * d.freq);
            let rate_hz = (f1 - f0) / len;
            add_event(&mut g, d.centre_s - len / 2.0, len, rate, |t| {
                tukey(t, len, 0.05 * d.dur) * (2.0 * PI * (f0 * t + 0.5 * rate_hz * t * t)).sin()
            });
        }
        GestureClass::Flick => {
            let len = 0.015 * d.dur;
            let gap = 0.040 * d.dur;
            for k in 0..2 {
                let freqs = spread_freqs(&mut r, 12, 150.0, 370.0, d.freq);
                let centre = d.centre_s + (k as f64 - 0.5) * gap;
                click(&mut g, centre - len / 2.0, len, rate, &freqs);
            }
        }
        GestureClass::OpenPalm => {
            let len = 0.080 * d.dur;
            let gap = 0.150 * d.dur;
            for k in 0..2 {
                let f = d.freq * r.random_range(45.0..95.0);
                let phase = r.random_range(0.0..2.0 * PI);
                let centre = d.centre_s + (k as f64 - 0.5) * gap;
                add_event(&mut g, centre - len / 2.0, len, rate, |t| hann(t / len) * (2.0 * PI * f * t + phase).sin());
            }
        }
    }
    normalise_peak(&mut g, TEMPLATE_PEAK * d.gain);
    if spec.noise_floor_rms > 0.0 {
        for s in &mut g {
            *s += spec.noise_floor_rms * r.sample::<f64, _>(StandardNormal);
        }
    }
    AudioClip { samples: g, sample_rate_hz: CANONICAL_RATE }
}

/// Jittered sample of `class` with the default quiet-room floor.
pub fn synth_sample(class: GestureClass, seed: u64) -> AudioClip {
    synth_gesture(&SynthGestureSpec::new(class), seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Pink,
    Brown,
    Babble,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::Pink, NoiseKind::Brown, NoiseKind::Babble];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Pink => "pink",
            NoiseKind::Brown => "brown",
            NoiseKind::Babble => "babble",
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pink" => Ok(NoiseKind::Pink),
            "brown" => Ok(NoiseKind::Brown),
            "babble" | "babble-like" | "babble_like" => Ok(NoiseKind::Babble),
            other => Err(Error::InvalidConfig(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// RMS every generated noise clip is scaled to.
pub const NOISE_RMS: f64 = 0.1;

/// Seeded coloured noise at 16 kHz, scaled to `NOISE_RMS`.
pub fn synth_noise(kind: NoiseKind, duration_s: f64, seed: u64) -> AudioClip {
    let n = (duration_s.max(0.0) * CANONICAL_RATE as f64).round() as usize;
    let mut r = rng(seed);
    let mut s = match kind {
        NoiseKind::Pink => pink(&mut r, n),
        NoiseKind::Brown => brown(&mut r, n),
        NoiseKind::Babble => babble(&mut r, n),
    };
    let rms = crate::audio::mean_square(&s).sqrt();
    if rms > 0.0 {
        s.iter_mut().for_each(|v| *v *= NOISE_RMS / rms);
    }
    AudioClip { samples: s, sample_rate_hz: CANONICAL_RATE }
}

/// Kellett's refined 1/f filter over Gaussian white noise.
fn pink(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    (0..n)
        .map(|_| {
            let w: f64 = r.sample(StandardNormal);
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let out = b[0] + b[1] + b[2] + b[3] + b[4] + b[5] + b[6] + w * 0.5362;
            b[6] = w * 0.115926;
            out
        })
        .collect()
}

/// Leaky integral of white noise (1/f² above a few hertz).
fn brown(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            acc = 0.997 * acc + r.sample::<f64, _>(StandardNormal);
            acc
        })
        .collect()
}

/// Several overlapping synthetic voices: harmonic buzz with a wandering
/// pitch, shaped by syllable-rate envelopes and two formant-like peaks.
fn babble(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let rate = CANONICAL_RATE as f64;
    let mut out = vec![0.0; n];
    for _ in 0..6 {
        let f0 = r.random_range(90.0..230.0);
        let vib_rate = r.random_range(0.2..0.8);
        let vib_phase = r.random_range(0.0..2.0 * PI);
        let syl_rate = r.random_range(3.0..6.0);
        let syl_phase = r.random_range(0.0..2.0 * PI);
        let formants = [r.random_range(400.0..900.0), r.random_range(1000.0..2400.0)];
        let gain = r.random_range(0.5..1.0);
        let n_harm = (3500.0 / f0) as usize;
        let amps: Vec<f64> = (1..=n_harm)
            .map(|k| {
                let f = k as f64 * f0;
                let shape: f64 = formants.iter().map(|fc| 1.0 / (1.0 + ((f - fc) / 150.0).powi(2))).sum();
                gain * (0.3 / k as f64 + shape)
            })
            .collect();
        let mut phase = r.random_range(0.0..2.0 * PI);
        for (i, o) in out.iter_mut().enumerate() {
            let t = i as f64 / rate;
            let f = f0 * (1.0 + 0.08 * (2.0 * PI * vib_rate * t + vib_phase).sin());
            phase = (phase + 2.0 * PI * f / rate) % (2.0 * PI);
            let env = (0.5 + 0.5 * (2.0 * PI * syl_rate * t + syl_phase).sin()).powi(2);
            if env < 1e-3 {
                continue;
            }
            let s: f64 = amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * phase).sin()).sum();
            *o += env * s;
        }
    }
    for o in &mut out {
        *o += 0.05 * r.sample::<f64, _>(StandardNormal);
    }
    out
}
