use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mel::{mel_filterbank, MelFilterbank};
use super::{fft, Waveform};
use crate::error::{Error, Result};

/// Floor added to mel energies before the log so silence maps to `ln(1e-10)`.
pub const LOG_FLOOR: f64 = 1e-10;

const CACHE_MAGIC: &[u8; 4] = b"MRFE";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    LogMel,
    Mfcc,
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log-mel" => Ok(FeatureKind::LogMel),
            "mfcc" => Ok(FeatureKind::Mfcc),
            _ => Err(Error::Config(format!("unknown feature kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DspConfig {
    pub target_rate_hz: u32,
    pub frame_len_s: f64,
    pub frame_shift_s: f64,
    pub fft_size: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub kind: FeatureKind,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            target_rate_hz: 16_000,
            frame_len_s: 0.025,
            frame_shift_s: 0.010,
            fft_size: 512,
            n_mels: 40,
            n_mfcc: 13,
            kind: FeatureKind::LogMel,
        }
    }
}

impl DspConfig {
    pub fn frame_len_samples(&self) -> usize {
        (self.frame_len_s * self.target_rate_hz as f64).round() as usize
    }

    pub fn frame_shift_samples(&self) -> usize {
        (self.frame_shift_s * self.target_rate_hz as f64).round() as usize
    }

    pub fn feature_dim(&self) -> usize {
        match self.kind {
            FeatureKind::LogMel => self.n_mels,
            FeatureKind::Mfcc => self.n_mfcc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.target_rate_hz == 0 {
            return bad("target rate must be positive");
        }
        if self.frame_len_samples() == 0 || self.frame_shift_samples() == 0 {
            return bad("frame length and shift must cover at least one sample");
        }
        if !self.fft_size.is_power_of_two() {
            return Err(Error::FftSize(self.fft_size));
        }
        if self.fft_size < self.frame_len_samples() {
            return bad("fft size must be at least the frame length");
        }
        if self.n_mels == 0 || self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return bad("need 0 < n_mfcc <= n_mels");
        }
        Ok(())
    }
}

/// Time-major feature frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    /// `n_frames * dim` values, row-major.
    pub frames: Vec<f64>,
    pub n_frames: usize,
    pub dim: usize,
    pub frame_shift_s: f64,
    pub kind: FeatureKind,
}

impl FeatureSequence {
    pub fn row(&self, t: usize) -> &[f64] {
        &self.frames[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.frames.chunks_exact(self.dim.max(1))
    }

    /// Mean over frames of each feature dimension.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= self.n_frames.max(1) as f64;
        }
        mean
    }

    /// Subtracts the per-utterance mean of each dimension.
    pub fn subtract_mean(&mut self) {
        let mean = self.column_means();
        for row in self.frames.chunks_exact_mut(self.dim.max(1)) {
            for (v, m) in row.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
    }
}

/// Number of full frames in `n_samples`, or 0 when shorter than one frame.
pub fn frame_count(n_samples: usize, frame_len: usize, frame_shift: usize) -> usize {
    if n_samples < frame_len {
        0
    } else {
        1 + (n_samples - frame_len) / frame_shift
    }
}

/// Reusable extractor holding the window, filterbank and DCT basis.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    cfg: DspConfig,
    window: Vec<f64>,
    filterbank: MelFilterbank,
    dct: Vec<Vec<f64>>,
}

impl FeatureExtractor {
    pub fn new(cfg: &DspConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.frame_len_samples();
        let window = (0..n)
            .map(|i| {
                if n == 1 {
                    1.0
                } else {
                    0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()
                }
            })
            .collect();
        // Orthonormal DCT-II basis.
        let m = cfg.n_mels as f64;
        let dct = (0..cfg.n_mfcc)
            .map(|k| {
                let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
                (0..cfg.n_mels)
                    .map(|j| scale * (PI * k as f64 * (j as f64 + 0.5) / m).cos())
                    .collect()
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            window,
            filterbank: mel_filterbank(cfg),
            dct,
        })
    }

    pub fn config(&self) -> &DspConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn extract(&self, w: &Waveform) -> Result<FeatureSequence> {
        let cfg = &self.cfg;
        if w.sample_rate_hz != cfg.target_rate_hz {
            return Err(Error::Audio(format!(
                "expected {} Hz audio, got {} Hz; resample first",
                cfg.target_rate_hz, w.sample_rate_hz
            )));
        }
        let len = cfg.frame_len_samples();
        let shift = cfg.frame_shift_samples();
        let n_frames = frame_count(w.samples.len(), len, shift);
        if n_frames == 0 {
            return Err(Error::AudioTooShort {
                samples: w.samples.len(),
                needed: len,
            });
        }
        let dim = cfg.feature_dim();
        let mut frames = Vec::with_capacity(n_frames * dim);
        let mut windowed = vec![0.0; len];
        let mut mel = vec![0.0; cfg.n_mels];
        for t in 0..n_frames {
            let chunk = &w.samples[t * shift..t * shift + len];
            for ((o, s), h) in windowed.iter_mut().zip(chunk).zip(&self.window) {
                *o = s * h;
            }
            let power = fft::power_spectrum(&windowed, cfg.fft_size)?;
            self.filterbank.apply(&power, &mut mel);
            for m in &mut mel {
                *m = (*m + LOG_FLOOR).ln();
            }
            match cfg.kind {
                FeatureKind::LogMel => frames.extend_from_slice(&mel),
                FeatureKind::Mfcc => frames.extend(
                    self.dct
                        .iter()
                        .map(|basis| basis.iter().zip(&mel).map(|(b, v)| b * v).sum::<f64>()),
                ),
            }
        }
        Ok(FeatureSequence {
            frames,
            n_frames,
            dim,
            frame_shift_s: cfg.frame_shift_s,
            kind: cfg.kind,
        })
    }
}

/// Log-mel or MFCC frames of a waveform already at `cfg.target_rate_hz`.
pub fn extract_features(w: &Waveform, cfg: &DspConfig) -> Result<FeatureSequence> {
    FeatureExtractor::new(cfg)?.extract(w)
}

/// Writes the `MRFE` cache format: magic, then little-endian u32 version,
/// frame count, dimension and frame shift in microseconds, then float32
/// values row-major.
pub fn write_feature_cache(path: impl AsRef<Path>, f: &FeatureSequence) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(20 + f.frames.len() * 4);
    buf.extend_from_slice(CACHE_MAGIC);
    for v in [
        CACHE_VERSION,
        f.n_frames as u32,
        f.dim as u32,
        (f.frame_shift_s * 1e6).round() as u32,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &v in &f.frames {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_feature_cache(path: impl AsRef<Path>, kind: FeatureKind) -> Result<FeatureSequence> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 20 || &bytes[..4] != CACHE_MAGIC {
        return Err(Error::Corrupt("not a feature cache".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    if word(0) != CACHE_VERSION {
        return Err(Error::Corrupt(format!("feature cache version {}", word(0))));
    }
    let (n_frames, dim) = (word(1) as usize, word(2) as usize);
    let payload = &bytes[20..];
    if payload.len() != n_frames * dim * 4 {
        return Err(Error::Corrupt("truncated feature cache".into()));
    }
    Ok(FeatureSequence {
        frames: payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        n_frames,
        dim,
        frame_shift_s: word(3) as f64 / 1e6,
        kind,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;

    fn tone(hz: f64, seconds: f64) -> Waveform {
        let n = (16000.0 * seconds) as usize;
        Waveform::new((0..n).map(|i| 0.5 * (TAU * hz * i as f64 / 16000.0).sin()).collect(), 16000)
    }

    #[test]
    fn frame_arithmetic() {
        let f = extract_features(&tone(440.0, 1.0), &DspConfig::default()).unwrap();
        assert_eq!(f.n_frames, 98);
        assert_eq!(f.dim, 40);
        assert_eq!(f.frames.len(), 98 * 40);
        assert_eq!(frame_count(399, 400, 160), 0);
        assert_eq!(frame_count(400, 400, 160), 1);
    }

    #[test]
    fn silence_hits_log_floor() {
        let w = Waveform::new(vec![0.0; 1600], 16000);
        let f = extract_features(&w, &DspConfig::default()).unwrap();
        assert!(f.frames.iter().all(|&v| v == LOG_FLOOR.ln()));
    }

    #[test]
    fn too_short_and_wrong_rate() {
        let cfg = DspConfig::default();
        let short = Waveform::new(vec![0.0; 399], 16000);
        assert!(extract_features(&short, &cfg).unwrap_err().to_string().contains("audio too short"));
        let wrong = Waveform::new(vec![0.0; 1000], 8000);
        assert!(extract_features(&wrong, &cfg).is_err());
    }

    #[test]
    fn tone_lands_in_nearest_filter() {
        let cfg = DspConfig::default();
        let ex = FeatureExtractor::new(&cfg).unwrap();
        for hz in [300.0, 1000.0, 2500.0, 6000.0] {
            let f = ex.extract(&tone(hz, 0.5)).unwrap();
            let mean = f.column_means();
            let argmax = mean
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, ex.filterbank().nearest_filter(hz), "tone {hz}");
        }
    }

    #[test]
    fn mfcc_is_dct_of_log_mel() {
        let w = tone(700.0, 0.2);
        let mel = extract_features(&w, &DspConfig::default()).unwrap();
        let cfg = DspConfig {
            kind: FeatureKind::Mfcc,
            ..DspConfig::default()
        };
        let mfcc = extract_features(&w, &cfg).unwrap();
        assert_eq!(mfcc.dim, 13);
        assert_eq!(mfcc.n_frames, mel.n_frames);
        let row = mel.row(3);
        let m = row.len() as f64;
        for k in 0..13 {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            let direct: f64 = row
                .iter()
                .enumerate()
                .map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / m).cos())
                .sum::<f64>()
                * scale;
            assert!((direct - mfcc.row(3)[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = DspConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.fft_size = 256;
        assert!(cfg.validate().is_err());
        cfg = DspConfig {
            n_mfcc: 41,
            ..DspConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.mrfe");
        let f = extract_features(&tone(1000.0, 0.1), &DspConfig::default()).unwrap();
        write_feature_cache(&path, &f).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"MRFE");
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 10_000);
        let back = read_feature_cache(&path, FeatureKind::LogMel).unwrap();
        assert_eq!(back.n_frames, f.n_frames);
        assert_eq!(back.dim, f.dim);
        assert_eq!(back.frame_shift_s, 0.01);
        for (a, b) in back.frames.iter().zip(&f.frames) {
            assert_eq!(*a, *b as f32 as f64);
        }
        std::fs::write(&path, &bytes[..30]).unwrap();
        assert!(read_feature_cache(&path, FeatureKind::LogMel).is_err());
    }
}
