//! The text-only and text+audio classifiers, their training loop, prediction
//! and on-disk bundles.

mod bundle;
mod fusion;
mod text_only;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bundle::{load_bundle, save_bundle, Model, ModelBundle, Prediction, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use fusion::{FusionCache, FusionModel};
pub use text_only::{TextOnlyCache, TextOnlyModel};
pub use train::{train_fusion, train_model, train_text_only, ModelOptions, TrainReport};

use crate::corpus::{resolve_audio_path, DialectLabel, Utterance};
use crate::dsp::{decode_wav, resample, DspConfig, FeatureExtractor, Waveform};
use crate::error::{Error, Result};
use crate::nn::{Parameters, Tensor2};
use crate::rng::SplitMix64;
use crate::text::{encode_fixed, tokenize, EncodedText, TextConfig, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Text,
    Fusion,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Text => "text",
            ModelKind::Fusion => "fusion",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ModelKind::Text),
            "fusion" => Ok(ModelKind::Fusion),
            _ => Err(Error::Config(format!("unknown model kind {s:?} (expected text or fusion)"))),
        }
    }
}

/// Layer widths shared by both architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub embed_dim: usize,
    pub hidden: usize,
    pub audio_proj: usize,
    pub audio_segments: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            hidden: 64,
            audio_proj: 64,
            audio_segments: 8,
        }
    }
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden == 0 || self.audio_proj == 0 || self.audio_segments == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// One featurized training or inference example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub text: EncodedText,
    /// Mean-normalized audio features, one row per frame.
    pub audio: Option<Tensor2>,
    pub label: usize,
}

/// A classifier trained by per-example backpropagation.
pub trait Classifier: Parameters + Clone {
    type Cache;

    /// Returns the logits. Dropout is applied only when an RNG is supplied.
    fn forward(&self, sample: &Sample, dropout_rng: Option<&mut SplitMix64>) -> Result<(Vec<f64>, Self::Cache)>;

    /// Accumulates parameter gradients for `dlogits` into `grads`.
    fn backward(&self, sample: &Sample, cache: &Self::Cache, dlogits: &[f64], grads: &mut Self);

    /// A model of identical shape with every parameter zero.
    fn zeros_like(&self) -> Self;
}

/// Turns raw transcripts and waveforms into model inputs.
#[derive(Debug, Clone)]
pub struct Featurizer {
    pub text: TextConfig,
    pub vocab: Vocabulary,
    extractor: FeatureExtractor,
}

impl Featurizer {
    pub fn new(text: TextConfig, vocab: Vocabulary, dsp: &DspConfig) -> Result<Self> {
        Ok(Self {
            text,
            vocab,
            extractor: FeatureExtractor::new(dsp)?,
        })
    }

    pub fn dsp(&self) -> &DspConfig {
        self.extractor.config()
    }

    pub fn encode_text(&self, transcript: &str) -> EncodedText {
        let tokens = tokenize(transcript, self.text.granularity);
        encode_fixed(&tokens, &self.vocab, self.text.max_len)
    }

    /// Resamples, extracts frame features and subtracts the utterance's
    /// overall feature mean (a single scalar).
    pub fn audio_features(&self, w: &Waveform) -> Result<Tensor2> {
        let target = self.dsp().target_rate_hz;
        let feats = if w.sample_rate_hz == target {
            self.extractor.extract(w)?
        } else {
            self.extractor.extract(&resample(w, target))?
        };
        let mut t = Tensor2::from_vec(feats.n_frames, feats.dim, feats.frames)?;
        let mean = t.data.iter().sum::<f64>() / t.data.len() as f64;
        t.data.iter_mut().for_each(|v| *v -= mean);
        Ok(t)
    }

    pub fn sample(&self, transcript: &str, audio: Option<&Waveform>, label: usize) -> Result<Sample> {
        Ok(Sample {
            text: self.encode_text(transcript),
            audio: audio.map(|w| self.audio_features(w)).transpose()?,
            label,
        })
    }

    /// Featurizes an utterance, loading its audio relative to `audio_root`
    /// when `with_audio` is set. Audio failures name the utterance.
    pub fn utterance_sample(&self, utt: &Utterance, audio_root: &Path, with_audio: bool) -> Result<Sample> {
        let audio = if with_audio {
            Some(load_utterance_audio(utt, audio_root).and_then(|w| {
                self.audio_features(&w).map_err(|e| Error::Utterance {
                    id: utt.id.clone(),
                    message: e.to_string(),
                })
            })?)
        } else {
            None
        };
        Ok(Sample {
            text: self.encode_text(&utt.transcript_dialectal),
            audio,
            label: utt.dialect.index(),
        })
    }
}

/// Decodes an utterance's WAV file; errors carry the utterance id.
pub fn load_utterance_audio(utt: &Utterance, audio_root: &Path) -> Result<Waveform> {
    if !utt.has_audio() {
        return Err(Error::Utterance {
            id: utt.id.clone(),
            message: "no audio path".into(),
        });
    }
    decode_wav(resolve_audio_path(audio_root, utt)).map_err(|e| Error::Utterance {
        id: utt.id.clone(),
        message: e.to_string(),
    })
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn label_of(index: usize) -> DialectLabel {
    DialectLabel::from_index(index).expect("head width equals registry size")
}

pub(crate) fn gather_embeddings(table: &Tensor2, ids: &[usize]) -> Tensor2 {
    let mut x = Tensor2::zeros(ids.len(), table.cols);
    for (r, &id) in ids.iter().enumerate() {
        x.row_mut(r).copy_from_slice(table.row(id));
    }
    x
}

pub(crate) fn scatter_embedding_grads(grad: &mut Tensor2, ids: &[usize], dx: &Tensor2) {
    for (r, &id) in ids.iter().enumerate() {
        for (g, d) in grad.row_mut(id).iter_mut().zip(dx.row(r)) {
            *g += d;
        }
    }
}
