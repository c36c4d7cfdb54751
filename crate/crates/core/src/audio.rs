//! Mono audio clips, WAV I/O and linear resampling.

use std::path::Path;

use crate::{Error, Result};

/// Canonical internal rate; all ingestion resamples to it.
pub const CANONICAL_RATE: u32 = 16_000;

const I16_SCALE: f64 = 32768.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Self { samples: vec![0.0; len], sample_rate_hz }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Mean squared amplitude.
    pub fn power(&self) -> f64 {
        mean_square(&self.samples)
    }

    pub fn rms(&self) -> f64 {
        self.power().sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    /// Clamp every sample into [-1, 1]; returns the number of clipped samples.
    pub fn hard_clip(&mut self) -> usize {
        let mut clipped = 0;
        for s in &mut self.samples {
            if s.abs() > 1.0 {
                *s = s.clamp(-1.0, 1.0);
                clipped += 1;
            }
        }
        clipped
    }

    pub fn slice(&self, start: usize, len: usize) -> AudioClip {
        AudioClip { samples: self.samples[start..start + len].to_vec(), sample_rate_hz: self.sample_rate_hz }
    }

    pub fn seconds_to_samples(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate_hz as f64).round() as usize
    }
}

pub fn mean_square(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64
}

/// Reads a RIFF/WAVE file (integer PCM or 32-bit float, one or two channels).
/// Stereo frames are averaged to mono.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let bytes = std::fs::read(path.as_ref())?;
    if let Some(tag) = format_tag(&bytes) {
        if !matches!(tag, WAVE_FORMAT_PCM | WAVE_FORMAT_IEEE_FLOAT | WAVE_FORMAT_EXTENSIBLE) {
            return Err(Error::UnsupportedFormat(format!("WAVE format tag {tag:#06x}")));
        }
    }
    let reader = hound::WavReader::new(std::io::Cursor::new(bytes)).map_err(|e| match e {
        hound::Error::IoError(io) => Error::CorruptHeader(io.to_string()),
        other => Error::from(other),
    })?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(Error::UnsupportedFormat(format!("{} channels", spec.channels)));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => {
            reader.into_samples::<i16>().map(|s| s.map(|v| v as f64 / I16_SCALE)).collect::<Result<_, _>>()?
        }
        (hound::SampleFormat::Int, bits @ (8 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader.into_samples::<i32>().map(|s| s.map(|v| v as f64 / scale)).collect::<Result<_, _>>()?
        }
        (hound::SampleFormat::Float, 32) => {
            reader.into_samples::<f32>().map(|s| s.map(|v| v as f64)).collect::<Result<_, _>>()?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!("{fmt:?} {bits}-bit")));
        }
    };
    let samples = if spec.channels == 2 {
        interleaved.chunks_exact(2).map(|f| 0.5 * (f[0] + f[1])).collect()
    } else {
        interleaved
    };
    AudioClip::new(samples, spec.sample_rate)
}

const WAVE_FORMAT_PCM: u16 = 0x0001;
const WAVE_FORMAT_IEEE_FLOAT: u16 = 0x0003;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Format tag of the first `fmt ` chunk, if the RIFF structure gets that far.
fn format_tag(bytes: &[u8]) -> Option<u16> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return None;
    }
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().ok()?) as usize;
        if id == b"fmt " {
            return bytes.get(pos + 8..pos + 10).map(|b| u16::from_le_bytes([b[0], b[1]]));
        }
        pos = pos.checked_add(8 + size + (size & 1))?;
    }
    None
}

/// Writes 16-bit mono PCM. Samples outside [-1, 1] are saturated.
pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path.as_ref(), spec)?;
    for &s in &clip.samples {
        writer.write_sample(to_i16(s))?;
    }
    writer.finalize()?;
    Ok(())
}

pub fn to_i16(s: f64) -> i16 {
    (s * I16_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Linear interpolation onto a uniform grid at `target_hz`. The last segment
/// is extended linearly, so affine signals are reproduced exactly.
pub fn resample_linear(clip: &AudioClip, target_hz: u32) -> Result<AudioClip> {
    if target_hz == 0 {
        return Err(Error::InvalidConfig("target rate must be positive".into()));
    }
    if target_hz == clip.sample_rate_hz {
        return Ok(clip.clone());
    }
    let n = clip.samples.len();
    let ratio = target_hz as f64 / clip.sample_rate_hz as f64;
    let out_len = (n as f64 * ratio).round() as usize;
    if n < 2 {
        let v = clip.samples.first().copied().unwrap_or(0.0);
        return AudioClip::new(vec![v; out_len], target_hz);
    }
    let step = clip.sample_rate_hz as f64 / target_hz as f64;
    let x = &clip.samples;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let idx = (pos.floor() as usize).min(n - 2);
            let frac = pos - idx as f64;
            x[idx] + (x[idx + 1] - x[idx]) * frac
        })
        .collect();
    AudioClip::new(samples, target_hz)
}

/// Loads a WAV and brings it to the canonical rate.
pub fn load_canonical(path: impl AsRef<Path>) -> Result<AudioClip> {
    let clip = load_wav(path)?;
    resample_linear(&clip, CANONICAL_RATE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn write_raw(path: &Path, spec: hound::WavSpec, frames: &[i16]) {
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for &f in frames {
            w.write_sample(f).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn reads_mono_16bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut frames = vec![0i16; 16000];
        frames[0] = 32767;
        write_raw(&path, spec, &frames);
        let clip = load_wav(&path).unwrap();
        assert_eq!(clip.len(), 16000);
        assert_eq!(clip.sample_rate_hz, 16000);
        assert_eq!(clip.samples[0], 32767.0 / 32768.0);
        assert!((clip.samples[0] - 0.99997).abs() < 1e-5);
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        write_raw(&path, spec, &[16384, -16384, 16384, -16384]);
        let clip = load_wav(&path).unwrap();
        assert_eq!(clip.samples, vec![0.0, 0.0]);
    }

    #[test]
    fn float_wav_is_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        w.write_sample(0.25f32).unwrap();
        w.write_sample(-0.5f32).unwrap();
        w.finalize().unwrap();
        let clip = load_wav(&path).unwrap();
        assert_eq!(clip.samples, vec![0.25, -0.5]);
        assert_eq!(clip.sample_rate_hz, 8000);
    }

    #[test]
    fn garbage_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.wav");
        std::fs::write(&path, b"RIFF\x10\x00\x00\x00WAVEjunkjunkjunk").unwrap();
        let err = load_wav(&path).unwrap_err();
        assert!(matches!(err, Error::CorruptHeader(_) | Error::UnsupportedFormat(_)), "{err:?}");
    }

    #[test]
    fn compressed_format_is_unsupported() {
        // Minimal WAVE with format tag 2 (MS ADPCM).
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&36u32.to_le_bytes());
        bytes.extend_from_slice(b"WAVEfmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&2u16.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&16000u32.to_le_bytes());
        bytes.extend_from_slice(&8000u32.to_le_bytes());
        bytes.extend_from_slice(&256u16.to_le_bytes());
        bytes.extend_from_slice(&4u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&0u32.to_le_bytes());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("adpcm.wav");
        std::fs::write(&path, bytes).unwrap();
        let err = load_wav(&path).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)), "{err:?}");
    }

    #[test]
    fn resample_identity_and_constant() {
        let clip = AudioClip::new(vec![0.1, -0.2, 0.3], 16000).unwrap();
        assert_eq!(resample_linear(&clip, 16000).unwrap(), clip);

        let c = AudioClip::new(vec![0.7; 44100], 44100).unwrap();
        let r = resample_linear(&c, 16000).unwrap();
        assert_eq!(r.len(), 16000);
        assert!(r.samples.iter().all(|&s| (s - 0.7).abs() < 1e-12));
    }

    #[test]
    fn resampled_sine_matches_analytic() {
        let src: Vec<f64> = (0..48000).map(|i| (2.0 * PI * 100.0 * i as f64 / 48000.0).sin()).collect();
        let r = resample_linear(&AudioClip::new(src, 48000).unwrap(), 16000).unwrap();
        let want: Vec<f64> = (0..r.len()).map(|i| (2.0 * PI * 100.0 * i as f64 / 16000.0).sin()).collect();
        let dot: f64 = r.samples.iter().zip(&want).map(|(a, b)| a * b).sum();
        let corr = dot / (r.power().sqrt() * mean_square(&want).sqrt() * r.len() as f64);
        assert!(corr >= 0.999, "correlation {corr}");
    }

    #[test]
    fn resample_is_exact_on_affine_signals() {
        for (src, dst) in [(44100u32, 16000u32), (8000, 16000), (16000, 22050)] {
            let x: Vec<f64> = (0..1000).map(|i| 0.3 - 0.0004 * i as f64).collect();
            let r = resample_linear(&AudioClip::new(x, src).unwrap(), dst).unwrap();
            for (i, s) in r.samples.iter().enumerate() {
                let pos = i as f64 * src as f64 / dst as f64;
                assert!((s - (0.3 - 0.0004 * pos)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.wav");
        let samples: Vec<f64> = (-300..300).map(|i| (i * 97) as f64 / 32768.0).collect();
        let clip = AudioClip::new(samples, 16000).unwrap();
        save_wav(&clip, &path).unwrap();
        assert_eq!(load_wav(&path).unwrap(), clip);
    }
}
