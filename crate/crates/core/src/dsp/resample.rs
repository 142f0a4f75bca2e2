use super::Waveform;

/// Linear-interpolation resampler. Output length is
/// `round(len * target / source)`; equal rates return the input unchanged.
pub fn resample(w: &Waveform, target_hz: u32) -> Waveform {
    assert!(target_hz > 0, "target rate must be positive");
    if w.sample_rate_hz == target_hz || w.samples.is_empty() {
        return Waveform::new(w.samples.clone(), target_hz);
    }
    let src = &w.samples;
    let ratio = w.sample_rate_hz as f64 / target_hz as f64;
    let out_len = (src.len() as f64 * target_hz as f64 / w.sample_rate_hz as f64).round() as usize;
    let last = src.len() - 1;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let j = pos.floor() as usize;
            if j >= last {
                return src[last];
            }
            let frac = pos - j as f64;
            src[j] * (1.0 - frac) + src[j + 1] * frac
        })
        .collect();
    Waveform::new(samples, target_hz)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;

    #[test]
    fn length_arithmetic() {
        let w = Waveform::new(vec![0.0; 44100], 44100);
        let r = resample(&w, 16000);
        assert_eq!(r.samples.len(), 16000);
        assert_eq!(r.sample_rate_hz, 16000);
        let r = resample(&Waveform::new(vec![0.0; 3], 8000), 16000);
        assert_eq!(r.samples.len(), 6);
    }

    #[test]
    fn same_rate_is_identity() {
        let w = Waveform::new(vec![0.1, -0.2, 0.3], 16000);
        assert_eq!(resample(&w, 16000), w);
    }

    #[test]
    fn upsampling_interpolates_linearly() {
        let w = Waveform::new(vec![0.0, 1.0, 0.0], 1);
        let r = resample(&w, 2);
        assert_eq!(r.samples, vec![0.0, 0.5, 1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn preserves_tone_amplitude_roughly() {
        let w = Waveform::new(
            (0..44100).map(|i| (TAU * 1000.0 * i as f64 / 44100.0).sin()).collect(),
            44100,
        );
        let r = resample(&w, 16000);
        let peak = r.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        assert!(peak > 0.95 && peak <= 1.0);
    }
}
