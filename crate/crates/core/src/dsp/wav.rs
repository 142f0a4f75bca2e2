use std::io::{Cursor, Read};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::Waveform;
use crate::error::{Error, Result};

/// Decodes PCM16 or float32 RIFF/WAVE audio, averaging channels to mono.
pub fn decode_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav_bytes(&bytes)
}

pub fn decode_wav_bytes(bytes: &[u8]) -> Result<Waveform> {
    decode(WavReader::new(Cursor::new(bytes)).map_err(audio_err)?)
}

fn audio_err(e: hound::Error) -> Error {
    Error::Audio(e.to_string())
}

fn decode<R: Read>(mut reader: WavReader<R>) -> Result<Waveform> {
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || spec.sample_rate == 0 {
        return Err(Error::Audio("invalid format header".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(audio_err)?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(audio_err)?,
        (fmt, bits) => {
            return Err(Error::Audio(format!("unsupported codec: {fmt:?} {bits}-bit")));
        }
    };
    if interleaved.iter().any(|s| !s.is_finite()) {
        return Err(Error::Audio("non-finite sample".into()));
    }
    if !interleaved.len().is_multiple_of(channels) {
        return Err(Error::Audio("truncated file: partial frame".into()));
    }
    if interleaved.is_empty() {
        return Err(Error::ZeroLengthAudio);
    }
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| (frame.iter().sum::<f64>() / channels as f64).clamp(-1.0, 1.0))
        .collect();
    Ok(Waveform::new(samples, spec.sample_rate))
}

fn pcm16_spec(sample_rate_hz: u32) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate: sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

/// Inverse of the decoder's `v / 32768` scaling, so PCM16-representable
/// samples survive an encode/decode cycle exactly.
fn to_pcm16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Encodes mono audio as 16-bit PCM WAV bytes.
pub fn encode_wav_pcm16(w: &Waveform) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    {
        let mut writer = WavWriter::new(&mut buf, pcm16_spec(w.sample_rate_hz)).map_err(audio_err)?;
        for &s in &w.samples {
            writer.write_sample(to_pcm16(s)).map_err(audio_err)?;
        }
        writer.finalize().map_err(audio_err)?;
    }
    Ok(buf.into_inner())
}

pub fn write_wav_pcm16(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_wav_pcm16(w)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
