//! Synthetic dialect corpora with known, controllable class signal.
//!
//! Class `k` may carry the text token `murre_k` and/or a sine tone at
//! frequency `f_k` mixed with white noise. Filler words come from one shared
//! pseudo-word list, so transcripts without a marker say nothing about the
//! class.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{write_manifest, DialectLabel, Utterance, MAX_DURATION_S, NUM_DIALECTS};
use crate::dsp::{mel_filterbank, write_wav_pcm16, DspConfig, Waveform};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const SYNTH_SAMPLE_RATE: u32 = 16_000;
pub const MANIFEST_NAME: &str = "manifest.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Text,
    Audio,
    Both,
    /// The lower half of the classes carry text markers, the rest audio tones.
    Split,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::Text => "text",
            Placement::Audio => "audio",
            Placement::Both => "both",
            Placement::Split => "split",
        })
    }
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Placement::Text),
            "audio" => Ok(Placement::Audio),
            "both" => Ok(Placement::Both),
            "split" => Ok(Placement::Split),
            _ => Err(Error::Config(format!("unknown marker placement {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub per_class: usize,
    pub placement: Placement,
    /// Probability that a text-marked class's transcript contains its marker.
    pub p_text: f64,
    /// Tone frequency per class; empty selects [`default_frequencies`].
    pub frequencies: Vec<f64>,
    pub tone_amplitude: f64,
    pub noise_amplitude: f64,
    /// Inclusive range of transcript lengths in words.
    pub sentence_len: (usize, usize),
    pub duration_s: (f64, f64),
    pub speakers_per_class: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_classes: 8,
            per_class: 200,
            placement: Placement::Split,
            p_text: 0.8,
            frequencies: Vec::new(),
            tone_amplitude: 0.3,
            noise_amplitude: 0.05,
            sentence_len: (4, 10),
            duration_s: (0.3, 1.0),
            speakers_per_class: 10,
            seed: 42,
        }
    }
}

/// Tone frequencies at the centers of well-separated mel filters of the
/// default front end, starting above the lowest filter.
pub fn default_frequencies(n_classes: usize) -> Vec<f64> {
    let centers = mel_filterbank(&DspConfig::default()).centers_hz;
    let usable = centers.len() - 2;
    let step = if n_classes > 1 { (usable / (n_classes - 1)).max(1) } else { 1 };
    (0..n_classes).map(|k| centers[(1 + k * step).min(centers.len() - 1)]).collect()
}

impl SynthConfig {
    pub fn tone_frequencies(&self) -> Vec<f64> {
        if self.frequencies.is_empty() {
            default_frequencies(self.n_classes)
        } else {
            self.frequencies.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_classes == 0 || self.n_classes > NUM_DIALECTS {
            return bad(format!("n_classes must be in 1..={NUM_DIALECTS}"));
        }
        if self.per_class == 0 || self.speakers_per_class == 0 {
            return bad("per_class and speakers_per_class must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p_text) {
            return bad(format!("p_text must lie in [0, 1], got {}", self.p_text));
        }
        let freqs = self.tone_frequencies();
        if freqs.len() != self.n_classes {
            return bad(format!("{} tone frequencies for {} classes", freqs.len(), self.n_classes));
        }
        let nyquist = SYNTH_SAMPLE_RATE as f64 / 2.0;
        for (i, &f) in freqs.iter().enumerate() {
            if !(f > 0.0 && f < nyquist) {
                return bad(format!("tone frequency {f} outside (0, {nyquist})"));
            }
            if freqs[..i].contains(&f) {
                return bad(format!("tone frequency {f} repeated"));
            }
        }
        let (lo, hi) = self.sentence_len;
        if lo == 0 || lo > hi {
            return bad("sentence length range must satisfy 1 <= lo <= hi".into());
        }
        let (dlo, dhi) = self.duration_s;
        let min_dur = DspConfig::default().frame_len_s;
        if !(dlo >= min_dur && dlo <= dhi && dhi < MAX_DURATION_S) {
            return bad(format!("duration range must satisfy {min_dur} <= lo <= hi < {MAX_DURATION_S}"));
        }
        let amps = [self.tone_amplitude, self.noise_amplitude];
        if amps.iter().any(|a| !(0.0..=1.0).contains(a)) || self.tone_amplitude + 3.0 * self.noise_amplitude > 1.0 {
            return bad("tone and noise amplitudes must keep the signal within [-1, 1]".into());
        }
        Ok(())
    }

    pub fn text_marked(&self, class: usize) -> bool {
        match self.placement {
            Placement::Text | Placement::Both => true,
            Placement::Audio => false,
            Placement::Split => class < self.n_classes / 2,
        }
    }

    pub fn audio_marked(&self, class: usize) -> bool {
        match self.placement {
            Placement::Audio | Placement::Both => true,
            Placement::Text => false,
            Placement::Split => class >= self.n_classes / 2,
        }
    }
}

pub fn marker_token(class: usize) -> String {
    format!("murre_{class}")
}

/// The shared filler vocabulary: two- and three-syllable pseudo-words.
pub fn filler_words() -> Vec<String> {
    const SYLLABLES: [&str; 12] = ["ka", "lo", "mi", "su", "te", "va", "ni", "ro", "hä", "py", "jo", "ke"];
    let mut words = Vec::new();
    for a in SYLLABLES {
        for b in SYLLABLES {
            words.push(format!("{a}{b}"));
        }
    }
    for (i, a) in SYLLABLES.iter().enumerate() {
        words.push(format!("{a}{}{}", SYLLABLES[(i + 5) % 12], SYLLABLES[(i + 7) % 12]));
    }
    words
}

/// Generates the corpus in memory. Audio paths are `wav/<id>.wav`.
pub fn synthesize(cfg: &SynthConfig) -> Result<Vec<(Utterance, Waveform)>> {
    cfg.validate()?;
    let freqs = cfg.tone_frequencies();
    let filler = filler_words();
    let mut rng = SplitMix64::new(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_classes * cfg.per_class);
    for class in 0..cfg.n_classes {
        let label = DialectLabel::from_index(class).expect("validated class count");
        for i in 0..cfg.per_class {
            let id = format!("syn{class:02}_{i:05}");
            let n_words = cfg.sentence_len.0 + rng.below(cfg.sentence_len.1 - cfg.sentence_len.0 + 1);
            let mut words: Vec<String> = (0..n_words).map(|_| filler[rng.below(filler.len())].clone()).collect();
            if cfg.text_marked(class) && rng.bernoulli(cfg.p_text) {
                let at = rng.below(n_words);
                words[at] = marker_token(class);
            }
            let duration = rng.uniform(cfg.duration_s.0, cfg.duration_s.1);
            let n = ((duration * SYNTH_SAMPLE_RATE as f64).round() as usize).max(1);
            let tone = cfg.audio_marked(class).then(|| (freqs[class], rng.uniform(0.0, std::f64::consts::TAU)));
            let samples = (0..n)
                .map(|t| {
                    let mut x = cfg.noise_amplitude * rng.normal();
                    if let Some((f, phase)) = tone {
                        x += cfg.tone_amplitude * (std::f64::consts::TAU * f * t as f64 / SYNTH_SAMPLE_RATE as f64 + phase).sin();
                    }
                    quantize(x)
                })
                .collect();
            let utt = Utterance {
                id: id.clone(),
                speaker_id: format!("spk{class:02}_{:02}", i % cfg.speakers_per_class),
                dialect: label,
                transcript_dialectal: words.join(" "),
                transcript_normalized: None,
                audio_path: format!("wav/{id}.wav"),
                duration_s: n as f64 / SYNTH_SAMPLE_RATE as f64,
                sample_rate_hz: SYNTH_SAMPLE_RATE,
            };
            out.push((utt, Waveform::new(samples, SYNTH_SAMPLE_RATE)));
        }
    }
    Ok(out)
}

/// Rounds to the PCM16 grid so WAV storage is lossless.
fn quantize(x: f64) -> f64 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) / 32768.0
}

/// Writes `manifest.tsv` and `wav/*.wav` under `dir` and returns the
/// utterances.
pub fn generate(cfg: &SynthConfig, dir: impl AsRef<Path>) -> Result<Vec<Utterance>> {
    let dir = dir.as_ref();
    let corpus = synthesize(cfg)?;
    let wav_dir = dir.join("wav");
    std::fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;
    for (utt, w) in &corpus {
        write_wav_pcm16(dir.join(&utt.audio_path), w)?;
    }
    let utts: Vec<Utterance> = corpus.into_iter().map(|(u, _)| u).collect();
    write_manifest(dir.join(MANIFEST_NAME), &utts)?;
    Ok(utts)
}

/// Which modalities carry signal for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassSignal {
    pub class: usize,
    pub code: &'static str,
    pub text: bool,
    pub audio: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthDescription {
    pub placement: Placement,
    pub p_text: f64,
    pub classes: Vec<ClassSignal>,
}

impl SynthDescription {
    pub fn text_separable(&self) -> Vec<usize> {
        self.classes.iter().filter(|c| c.text).map(|c| c.class).collect()
    }

    pub fn audio_separable(&self) -> Vec<usize> {
        self.classes.iter().filter(|c| c.audio).map(|c| c.class).collect()
    }

    pub fn chance(&self) -> f64 {
        1.0 / self.classes.len() as f64
    }
}

impl fmt::Display for SynthDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# placement={} p_text={}", self.placement, self.p_text)?;
        writeln!(f, "class\tcode\ttext\taudio")?;
        for c in &self.classes {
            writeln!(f, "{}\t{}\t{}\t{}", c.class, c.code, c.text, c.audio)?;
        }
        Ok(())
    }
}

pub fn describe(cfg: &SynthConfig) -> SynthDescription {
    let classes = (0..cfg.n_classes.min(NUM_DIALECTS))
        .map(|k| ClassSignal {
            class: k,
            code: DialectLabel::from_index(k).expect("k < 23").code(),
            text: cfg.text_marked(k) && cfg.p_text > 0.0,
            audio: cfg.audio_marked(k),
        })
        .collect();
    SynthDescription {
        placement: cfg.placement,
        p_text: cfg.p_text,
        classes,
    }
}
