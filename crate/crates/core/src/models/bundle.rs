//! `MRID` bundle files: magic, u32 format version, u32 header length, a JSON
//! header and little-endian f32 tensor payloads in directory order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{argmax, label_of, Classifier, Featurizer, FusionModel, ModelKind, ModelOptions, Sample, TextOnlyModel};
use crate::corpus::{DialectLabel, NUM_DIALECTS};
use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::nn::{softmax, Parameters, Tensor2};
use crate::text::Vocabulary;

pub const BUNDLE_MAGIC: &[u8; 4] = b"MRID";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Text(TextOnlyModel),
    Fusion(FusionModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Text(_) => ModelKind::Text,
            Model::Fusion(_) => ModelKind::Fusion,
        }
    }

    fn params(&self) -> &dyn Parameters {
        match self {
            Model::Text(m) => m,
            Model::Fusion(m) => m,
        }
    }

    fn params_mut(&mut self) -> &mut dyn Parameters {
        match self {
            Model::Text(m) => m,
            Model::Fusion(m) => m,
        }
    }
}

/// Classifier output: the argmax label and the full probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: DialectLabel,
    pub scores: Vec<f64>,
}

impl Prediction {
    /// The `k` most probable labels, best first, ties by class index.
    pub fn top_k(&self, k: usize) -> Vec<(DialectLabel, f64)> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        idx.into_iter().take(k).map(|i| (label_of(i), self.scores[i])).collect()
    }
}

/// A trained model together with everything needed to featurize its inputs.
/// Weights are held at f32 precision so a saved bundle reloads bit-identically.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub options: ModelOptions,
    pub model: Model,
    featurizer: Featurizer,
}

impl PartialEq for ModelBundle {
    fn eq(&self, other: &Self) -> bool {
        self.options == other.options && self.model == other.model && self.featurizer.vocab == other.featurizer.vocab
    }
}

#[derive(Serialize, Deserialize)]
struct LabelEntry {
    index: usize,
    name: String,
    code: String,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: ModelKind,
    options: ModelOptions,
    vocab_granularity: crate::text::Granularity,
    vocab_min_count: usize,
    vocab_max_size: usize,
    vocab: Vec<String>,
    labels: Vec<LabelEntry>,
    tensors: Vec<TensorEntry>,
}

impl ModelBundle {
    pub fn new(options: ModelOptions, vocab: Vocabulary, mut model: Model) -> Self {
        model.params_mut().quantize_f32();
        let featurizer = Featurizer::new(options.text.clone(), vocab, &options.dsp)
            .expect("options were validated before training");
        Self {
            options,
            model,
            featurizer,
        }
    }

    /// A randomly initialized bundle over `vocab`, for baselines and tests.
    pub fn untrained(kind: ModelKind, options: ModelOptions, vocab: Vocabulary, seed: u64) -> Result<Self> {
        options.dims.validate()?;
        options.dsp.validate()?;
        let mut rng = crate::rng::SplitMix64::derive(seed, 0);
        let model = match kind {
            ModelKind::Text => Model::Text(TextOnlyModel::new(vocab.len(), &options.dims, &mut rng)),
            ModelKind::Fusion => Model::Fusion(FusionModel::new(
                vocab.len(),
                options.dsp.feature_dim(),
                &options.dims,
                options.dropout,
                &mut rng,
            )),
        };
        Ok(Self::new(options, vocab, model))
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.featurizer.vocab
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    /// Classifies a transcript, with audio for fusion bundles. Text-only
    /// bundles ignore any audio passed in.
    pub fn predict(&self, transcript: &str, audio: Option<&Waveform>) -> Result<Prediction> {
        let audio = match self.kind() {
            ModelKind::Text => None,
            ModelKind::Fusion => Some(audio.ok_or(Error::AudioRequired)?),
        };
        let sample = self.featurizer.sample(transcript, audio, 0)?;
        self.predict_sample(&sample)
    }

    pub fn predict_sample(&self, sample: &Sample) -> Result<Prediction> {
        let logits = match &self.model {
            Model::Text(m) => m.forward(sample, None)?.0,
            Model::Fusion(m) => m.forward(sample, None)?.0,
        };
        let scores = softmax(&logits);
        Ok(Prediction {
            label: label_of(argmax(&scores)),
            scores,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let named = self.model.params().tensors();
        let mut offset = 0;
        let tensors = named
            .iter()
            .map(|(name, t)| {
                let e = TensorEntry {
                    name: name.clone(),
                    rows: t.rows,
                    cols: t.cols,
                    offset,
                };
                offset += t.data.len() * 4;
                e
            })
            .collect();
        let vocab = self.vocab();
        let header = Header {
            kind: self.kind(),
            options: self.options.clone(),
            vocab_granularity: vocab.granularity,
            vocab_min_count: vocab.min_count,
            vocab_max_size: vocab.max_size,
            vocab: vocab.tokens().to_vec(),
            labels: DialectLabel::all()
                .map(|l| LabelEntry {
                    index: l.index(),
                    name: l.name().to_string(),
                    code: l.code().to_string(),
                })
                .collect(),
            tensors,
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(12 + json.len() + offset);
        out.extend_from_slice(BUNDLE_MAGIC);
        out.extend_from_slice(&BUNDLE_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, t) in &named {
            for &v in &t.data {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != BUNDLE_MAGIC {
            return Err(Error::NotABundle);
        }
        let read_u32 = |at: usize| -> Result<u32> {
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
                .ok_or_else(|| Error::Corrupt("truncated bundle header".into()))
        };
        let version = read_u32(4)?;
        if version != BUNDLE_VERSION {
            return Err(Error::BundleVersion {
                found: version,
                supported: vec![BUNDLE_VERSION],
            });
        }
        let header_len = read_u32(8)? as usize;
        let header_bytes = bytes
            .get(12..12 + header_len)
            .ok_or_else(|| Error::Corrupt("truncated bundle header".into()))?;
        let header: Header =
            serde_json::from_slice(header_bytes).map_err(|e| Error::Corrupt(format!("bundle header: {e}")))?;
        check_labels(&header.labels)?;
        header.options.dims.validate()?;
        header.options.dsp.validate()?;

        let vocab = Vocabulary::from_token_list(
            header.vocab,
            header.vocab_granularity,
            header.vocab_min_count,
            header.vocab_max_size,
        )?;
        let opts = &header.options;
        let mut model = match header.kind {
            ModelKind::Text => Model::Text(TextOnlyModel::zeros(vocab.len(), &opts.dims)),
            ModelKind::Fusion => Model::Fusion(FusionModel::zeros(
                vocab.len(),
                opts.dsp.feature_dim(),
                &opts.dims,
                opts.dropout,
            )),
        };
        let expected: Vec<(String, usize, usize)> = model
            .params()
            .tensors()
            .into_iter()
            .map(|(n, t)| (n, t.rows, t.cols))
            .collect();
        if expected.len() != header.tensors.len() {
            return Err(Error::Corrupt(format!(
                "bundle lists {} tensors, architecture has {}",
                header.tensors.len(),
                expected.len()
            )));
        }
        let payload = &bytes[12 + header_len..];
        let mut offset = 0;
        for ((entry, (name, rows, cols)), t) in header
            .tensors
            .iter()
            .zip(&expected)
            .zip(model.params_mut().tensors_mut())
        {
            if &entry.name != name || entry.rows != *rows || entry.cols != *cols || entry.offset != offset {
                return Err(Error::Corrupt(format!(
                    "tensor {} ({}x{} at {}) does not match expected {name} ({rows}x{cols} at {offset})",
                    entry.name, entry.rows, entry.cols, entry.offset
                )));
            }
            let n = rows * cols * 4;
            let chunk = payload
                .get(offset..offset + n)
                .ok_or_else(|| Error::Corrupt(format!("truncated payload in tensor {name}")))?;
            fill_tensor(t, chunk);
            offset += n;
        }
        if offset != payload.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes after tensor payload",
                payload.len() - offset
            )));
        }
        Ok(Self::new(header.options, vocab, model))
    }
}

fn check_labels(labels: &[LabelEntry]) -> Result<()> {
    let matches = labels.len() == NUM_DIALECTS
        && labels.iter().zip(DialectLabel::all()).all(|(e, l)| {
            e.index == l.index() && e.name == l.name() && e.code == l.code()
        });
    if matches {
        Ok(())
    } else {
        Err(Error::Corrupt("bundle label registry does not match the 23 dialect classes".into()))
    }
}

fn fill_tensor(t: &mut Tensor2, bytes: &[u8]) {
    for (v, b) in t.data.iter_mut().zip(bytes.chunks_exact(4)) {
        *v = f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64;
    }
}

pub fn save_bundle(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, bundle.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelBundle::from_bytes(&bytes)
}
