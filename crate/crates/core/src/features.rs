//! MFCC front end producing the 40x44 matrices the classifier consumes.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::filter::{apply, BiquadCascade};
use crate::{Error, Result};

pub const N_COEFFS: usize = 40;
pub const N_FRAMES: usize = 44;
pub const WINDOW_S: f64 = 0.5;
pub const WINDOW_STEP_S: f64 = 0.05;
pub const SEGMENT_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub n_mels: usize,
    pub mel_lo_hz: f64,
    pub mel_hi_hz: f64,
    pub n_coeffs: usize,
    pub log_floor: f64,
    pub var_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            frame_len: 400,
            hop: 176,
            fft_size: 2048,
            n_mels: 40,
            mel_lo_hz: 10.0,
            mel_hi_hz: 1000.0,
            n_coeffs: 40,
            log_floor: 1e-10,
            var_floor: 1e-8,
        }
    }
}

/// One standardised coefficient-by-frame matrix, stored row-major
/// (`values[coef * n_frames + frame]`).
#[derive(Debug, Clone, PartialEq)]
pub struct MfccFrame {
    pub values: Vec<f64>,
    pub n_coeffs: usize,
    pub n_frames: usize,
    pub t_start: f64,
}

impl MfccFrame {
    pub fn get(&self, coef: usize, frame: usize) -> f64 {
        self.values[coef * self.n_frames + frame]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_coeffs, self.n_frames)
    }

    /// Rows are coefficients, columns are frames.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.n_frames) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.9e}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Mel filter edge frequencies: `n_mels + 2` points evenly spaced in mel.
pub fn mel_edges(cfg: &MfccConfig) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(cfg.mel_lo_hz), hz_to_mel(cfg.mel_hi_hz));
    (0..cfg.n_mels + 2).map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64)).collect()
}

/// Orthonormal DCT-II.
pub fn dct_ortho(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            s * x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                .sum::<f64>()
        })
        .collect()
}

/// Inverse of [`dct_ortho`] (orthonormal DCT-III).
pub fn idct_ortho(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    (0..n)
        .map(|i| {
            c.iter()
                .enumerate()
                .map(|(k, v)| {
                    let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                    s * v * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos()
                })
                .sum()
        })
        .collect()
}

/// Precomputed window, filter bank, DCT basis and FFT plan. Cheap to share.
#[derive(Clone)]
pub struct MfccExtractor {
    cfg: MfccConfig,
    sample_rate_hz: u32,
    window_len: usize,
    hamming: Vec<f64>,
    /// Sparse filter bank: per mel band, (bin, weight) pairs.
    bank: Vec<Vec<(usize, f64)>>,
    /// `n_coeffs x n_mels`, row-major.
    dct: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor").field("cfg", &self.cfg).field("sample_rate_hz", &self.sample_rate_hz).finish()
    }
}

impl MfccExtractor {
    pub fn new(cfg: MfccConfig, sample_rate_hz: u32) -> Result<Self> {
        let nyquist = sample_rate_hz as f64 / 2.0;
        if cfg.n_coeffs > cfg.n_mels || cfg.n_mels == 0 {
            return Err(Error::InvalidConfig("need 0 < n_coeffs <= n_mels".into()));
        }
        if !(cfg.mel_lo_hz >= 0.0 && cfg.mel_lo_hz < cfg.mel_hi_hz && cfg.mel_hi_hz <= nyquist) {
            return Err(Error::InvalidConfig("need mel_lo < mel_hi <= nyquist".into()));
        }
        if cfg.fft_size < cfg.frame_len || cfg.hop == 0 || cfg.frame_len == 0 {
            return Err(Error::InvalidConfig("need fft_size >= frame_len > 0 and hop > 0".into()));
        }
        let window_len = (WINDOW_S * sample_rate_hz as f64).round() as usize;
        if window_len < cfg.frame_len {
            return Err(Error::InvalidConfig("frame longer than analysis window".into()));
        }

        let n = cfg.frame_len;
        let hamming = (0..n).map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()).collect();

        let edges = mel_edges(&cfg);
        let bin_hz = sample_rate_hz as f64 / cfg.fft_size as f64;
        let bank = (0..cfg.n_mels)
            .map(|m| {
                let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..=cfg.fft_size / 2)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if f >= l && f <= c {
                            (f - l) / (c - l)
                        } else if f > c && f <= r {
                            (r - f) / (r - c)
                        } else {
                            0.0
                        };
                        (w > 0.0).then_some((k, w))
                    })
                    .collect()
            })
            .collect();

        let nm = cfg.n_mels;
        let mut dct = vec![0.0; cfg.n_coeffs * nm];
        for k in 0..cfg.n_coeffs {
            let s = if k == 0 { (1.0 / nm as f64).sqrt() } else { (2.0 / nm as f64).sqrt() };
            for i in 0..nm {
                dct[k * nm + i] = s * (PI * k as f64 * (2 * i + 1) as f64 / (2 * nm) as f64).cos();
            }
        }

        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        Ok(Self { cfg, sample_rate_hz, window_len, hamming, bank, dct, fft })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn n_frames(&self) -> usize {
        (self.window_len - self.cfg.frame_len) / self.cfg.hop + 1
    }

    /// Length of one flattened coefficient-by-frame matrix.
    pub fn feature_len(&self) -> usize {
        self.cfg.n_coeffs * self.n_frames()
    }

    pub fn filter_bank(&self) -> &[Vec<(usize, f64)>] {
        &self.bank
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / self.cfg.fft_size as f64
    }

    fn check_len(&self, window: &[f64]) -> Result<()> {
        if window.len() != self.window_len {
            return Err(Error::WrongWindowLength { expected: self.window_len, actual: window.len() });
        }
        Ok(())
    }

    /// Natural-log mel energies, one vector of `n_mels` per frame.
    pub fn log_mel_frames(&self, window: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_len(window)?;
        let n_fft = self.cfg.fft_size;
        let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0.0; n_fft / 2 + 1];
        let mut frames = Vec::with_capacity(self.n_frames());
        for f in 0..self.n_frames() {
            let start = f * self.cfg.hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = if i < self.cfg.frame_len {
                    Complex64::new(window[start + i] * self.hamming[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, b) in power.iter_mut().zip(&buf) {
                *p = b.norm_sqr();
            }
            frames.push(
                self.bank
                    .iter()
                    .map(|band| {
                        let e: f64 = band.iter().map(|&(k, w)| w * power[k]).sum();
                        e.max(self.cfg.log_floor).ln()
                    })
                    .collect(),
            );
        }
        Ok(frames)
    }

    /// Cepstra before normalisation, row-major `n_coeffs x n_frames`.
    pub fn raw_cepstra(&self, window: &[f64]) -> Result<Vec<f64>> {
        let frames = self.log_mel_frames(window)?;
        let (nc, nm, nf) = (self.cfg.n_coeffs, self.cfg.n_mels, frames.len());
        let mut out = vec![0.0; nc * nf];
        for (f, energies) in frames.iter().enumerate() {
            for k in 0..nc {
                let row = &self.dct[k * nm..(k + 1) * nm];
                out[k * nf + f] = row.iter().zip(energies).map(|(a, b)| a * b).sum();
            }
        }
        Ok(out)
    }

    /// Full transform of one 0.5 s window.
    ///
    /// Each coefficient row is centred over time, then the whole matrix is
    /// scaled to unit variance. Centring the rows removes the constant that
    /// a gain change adds to coefficient 0, so the output does not depend
    /// on recording level.
    pub fn mfcc(&self, window: &[f64]) -> Result<MfccFrame> {
        let mut values = self.raw_cepstra(window)?;
        let nf = self.n_frames();
        for row in values.chunks_mut(nf) {
            if row.iter().all(|&v| v == row[0]) {
                row.fill(0.0);
                continue;
            }
            let mean = row.iter().sum::<f64>() / nf as f64;
            row.iter_mut().for_each(|v| *v -= mean);
        }
        let var = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
        let scale = 1.0 / var.max(self.cfg.var_floor).sqrt();
        values.iter_mut().for_each(|v| *v *= scale);
        Ok(MfccFrame { values, n_coeffs: self.cfg.n_coeffs, n_frames: nf, t_start: 0.0 })
    }

    /// Eleven 0.5 s windows stepped by 0.05 s over a 1.0 s segment.
    pub fn segment_windows(&self, segment: &[f64]) -> Result<Vec<(f64, MfccFrame)>> {
        let rate = self.sample_rate_hz as f64;
        let seg_len = (SEGMENT_S * rate).round() as usize;
        if segment.len() != seg_len {
            return Err(Error::WrongSegmentLength { expected: seg_len, actual: segment.len() });
        }
        window_offsets(self.sample_rate_hz)
            .into_iter()
            .map(|(t, start)| {
                let mut frame = self.mfcc(&segment[start..start + self.window_len])?;
                frame.t_start = t;
                Ok((t, frame))
            })
            .collect()
    }
}

/// `(offset_seconds, start_sample)` of every analysis window in a segment.
pub fn window_offsets(sample_rate_hz: u32) -> Vec<(f64, usize)> {
    let n = ((SEGMENT_S - WINDOW_S) / WINDOW_STEP_S).round() as usize + 1;
    (0..n)
        .map(|i| {
            let t = i as f64 * WINDOW_STEP_S;
            (t, (t * sample_rate_hz as f64).round() as usize)
        })
        .collect()
}

/// Band-pass filter plus MFCC windows for whole 1 s clips.
#[derive(Debug, Clone)]
pub struct ClipFeaturizer {
    filter: BiquadCascade,
    mfcc: MfccExtractor,
}

impl ClipFeaturizer {
    pub fn new(sample_rate_hz: u32) -> Result<Self> {
        Ok(Self {
            filter: BiquadCascade::gesture_band(sample_rate_hz)?,
            mfcc: MfccExtractor::new(MfccConfig::default(), sample_rate_hz)?,
        })
    }

    pub fn extractor(&self) -> &MfccExtractor {
        &self.mfcc
    }

    pub fn filter(&self) -> &BiquadCascade {
        &self.filter
    }

    /// Filters a clip from rest.
    pub fn filtered(&self, clip: &AudioClip) -> Result<Vec<f64>> {
        Ok(apply(&self.filter, clip)?.samples)
    }

    /// All eleven windows of a raw 1 s clip.
    pub fn windows(&self, clip: &AudioClip) -> Result<Vec<MfccFrame>> {
        let filtered = self.filtered(clip)?;
        Ok(self.mfcc.segment_windows(&filtered)?.into_iter().map(|(_, f)| f).collect())
    }

    /// Windows of a raw 1 s clip at the given window indices.
    pub fn windows_at(&self, clip: &AudioClip, indices: &[usize]) -> Result<Vec<MfccFrame>> {
        let filtered = self.filtered(clip)?;
        let seg_len = (SEGMENT_S * self.mfcc.sample_rate_hz as f64).round() as usize;
        if filtered.len() != seg_len {
            return Err(Error::WrongSegmentLength { expected: seg_len, actual: filtered.len() });
        }
        let offsets = window_offsets(self.mfcc.sample_rate_hz);
        indices
            .iter()
            .map(|&i| {
                let (t, start) =
                    *offsets.get(i).ok_or_else(|| Error::InvalidConfig(format!("window index {i} out of range")))?;
                let mut frame = self.mfcc.mfcc(&filtered[start..start + self.mfcc.window_len])?;
                frame.t_start = t;
                Ok(frame)
            })
            .collect()
    }
}
