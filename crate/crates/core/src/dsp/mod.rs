//! Audio decoding, resampling and framed spectral features.

mod features;
mod fft;
mod mel;
mod resample;
mod wav;

pub use features::{
    extract_features, frame_count, FeatureExtractor, read_feature_cache, write_feature_cache, DspConfig, FeatureKind,
    FeatureSequence, LOG_FLOOR,
};
pub use fft::{fft_in_place, fft_magnitude, power_spectrum};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelFilterbank};
pub use resample::resample;
pub use wav::{decode_wav, decode_wav_bytes, encode_wav_pcm16, write_wav_pcm16};

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}
