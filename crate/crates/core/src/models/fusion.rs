//! Two-branch text+audio classifier.
//!
//! The text branch embeds the fixed-length token sequence, runs a BiLSTM and
//! averages over the valid steps. The audio branch projects each feature
//! frame, runs a BiLSTM and adaptively average-pools the sequence to a fixed
//! number of segments. Both pooled vectors are concatenated, passed through
//! dropout and classified by one dense layer.

use super::{gather_embeddings, scatter_embedding_grads, Classifier, ModelDims, Sample};
use crate::corpus::NUM_DIALECTS;
use crate::error::{Error, Result};
use crate::nn::{
    adaptive_avg_pool, adaptive_avg_pool_backward, dropout, global_avg_pool, global_avg_pool_backward, prefixed,
    BiLstm, BiLstmCache, Dense, Mode, Parameters, Tensor2,
};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub embedding: Tensor2,
    pub text_lstm: BiLstm,
    pub audio_proj: Dense,
    pub audio_lstm: BiLstm,
    pub head: Dense,
    /// Number of segments the audio sequence is pooled to.
    pub audio_segments: usize,
    pub dropout: f64,
}

pub struct FusionCache {
    text_len: usize,
    x_text: Tensor2,
    out_text: Tensor2,
    cache_text: BiLstmCache,
    proj: Tensor2,
    out_audio: Tensor2,
    cache_audio: BiLstmCache,
    fused: Vec<f64>,
    mask: Vec<f64>,
}

impl FusionModel {
    pub fn new(vocab_size: usize, feature_dim: usize, dims: &ModelDims, dropout: f64, rng: &mut SplitMix64) -> Self {
        let (e, h, p) = (dims.embed_dim, dims.hidden, dims.audio_proj);
        Self {
            embedding: Tensor2::uniform(vocab_size, e, 1.0 / (e as f64).sqrt(), rng),
            text_lstm: BiLstm::new(e, h, rng),
            audio_proj: Dense::new(feature_dim, p, rng),
            audio_lstm: BiLstm::new(p, h, rng),
            head: Dense::new(Self::fused_width(dims), NUM_DIALECTS, rng),
            audio_segments: dims.audio_segments,
            dropout,
        }
    }

    pub fn zeros(vocab_size: usize, feature_dim: usize, dims: &ModelDims, dropout: f64) -> Self {
        let (e, h, p) = (dims.embed_dim, dims.hidden, dims.audio_proj);
        Self {
            embedding: Tensor2::zeros(vocab_size, e),
            text_lstm: BiLstm::zeros(e, h),
            audio_proj: Dense::zeros(feature_dim, p),
            audio_lstm: BiLstm::zeros(p, h),
            head: Dense::zeros(Self::fused_width(dims), NUM_DIALECTS),
            audio_segments: dims.audio_segments,
            dropout,
        }
    }

    /// Width of the concatenated text and audio representations.
    pub fn fused_width(dims: &ModelDims) -> usize {
        2 * dims.hidden + dims.audio_segments * 2 * dims.hidden
    }

    pub fn text_width(&self) -> usize {
        self.text_lstm.output_dim()
    }

    pub fn feature_dim(&self) -> usize {
        self.audio_proj.input_dim()
    }

    fn dims(&self) -> ModelDims {
        ModelDims {
            embed_dim: self.embedding.cols,
            hidden: self.text_lstm.fwd.hidden_dim(),
            audio_proj: self.audio_proj.output_dim(),
            audio_segments: self.audio_segments,
        }
    }

    /// The text-branch and audio-branch tensors, for inspecting gradient flow.
    pub fn branch_tensors(&self) -> (Vec<(String, &Tensor2)>, Vec<(String, &Tensor2)>) {
        let mut text = vec![("embedding".to_string(), &self.embedding)];
        text.extend(prefixed("text_lstm", self.text_lstm.tensors()));
        let mut audio = prefixed("audio_proj", self.audio_proj.tensors());
        audio.extend(prefixed("audio_lstm", self.audio_lstm.tensors()));
        (text, audio)
    }
}

impl Classifier for FusionModel {
    type Cache = FusionCache;

    fn forward(&self, s: &Sample, dropout_rng: Option<&mut SplitMix64>) -> Result<(Vec<f64>, FusionCache)> {
        let feats = s.audio.as_ref().ok_or(Error::AudioRequired)?;
        if feats.cols != self.feature_dim() {
            return Err(Error::Shape(format!(
                "audio features have width {}, model expects {}",
                feats.cols,
                self.feature_dim()
            )));
        }
        let text_len = s.text.true_length.max(1);
        let x_text = gather_embeddings(&self.embedding, &s.text.ids[..text_len]);
        let (out_text, cache_text) = self.text_lstm.forward(&x_text, text_len)?;
        let pooled_text = global_avg_pool(&out_text, text_len)?;

        let proj = self.audio_proj.forward(feats)?;
        let (out_audio, cache_audio) = self.audio_lstm.forward(&proj, proj.rows)?;
        let pooled_audio = adaptive_avg_pool(&out_audio, self.audio_segments)?;

        let mut fused = pooled_text;
        fused.extend_from_slice(&pooled_audio.data);
        let (dropped, mask) = match dropout_rng {
            Some(rng) => dropout(&fused, self.dropout, Mode::Train, rng),
            None => dropout(&fused, self.dropout, Mode::Eval, &mut SplitMix64::new(0)),
        };
        let logits = self.head.forward_vec(&dropped);
        Ok((
            logits,
            FusionCache {
                text_len,
                x_text,
                out_text,
                cache_text,
                proj,
                out_audio,
                cache_audio,
                fused: dropped,
                mask,
            },
        ))
    }

    fn backward(&self, s: &Sample, c: &FusionCache, dlogits: &[f64], g: &mut Self) {
        let mut dfused = vec![0.0; c.fused.len()];
        self.head.backward_vec(&c.fused, dlogits, &mut g.head, Some(&mut dfused));
        for (d, m) in dfused.iter_mut().zip(&c.mask) {
            *d *= m;
        }
        let tw = self.text_width();

        let dout_text = global_avg_pool_backward(&dfused[..tw], c.text_len, c.out_text.rows);
        let dx_text = self.text_lstm.backward(&c.x_text, &c.cache_text, &dout_text, &mut g.text_lstm);
        scatter_embedding_grads(&mut g.embedding, &s.text.ids[..c.text_len], &dx_text);

        let dpooled = Tensor2::from_vec(self.audio_segments, tw, dfused[tw..].to_vec())
            .expect("fused width matches segment layout");
        let dout_audio = adaptive_avg_pool_backward(&dpooled, c.out_audio.rows);
        let dproj = self.audio_lstm.backward(&c.proj, &c.cache_audio, &dout_audio, &mut g.audio_lstm);
        let feats = s.audio.as_ref().expect("forward checked audio");
        self.audio_proj.backward(feats, &dproj, &mut g.audio_proj);
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.embedding.rows, self.feature_dim(), &self.dims(), self.dropout)
    }
}

impl Parameters for FusionModel {
    fn tensors(&self) -> Vec<(String, &Tensor2)> {
        let (mut v, audio) = self.branch_tensors();
        v.extend(audio);
        v.extend(prefixed("head", self.head.tensors()));
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut v = vec![&mut self.embedding];
        v.extend(self.text_lstm.tensors_mut());
        v.extend(self.audio_proj.tensors_mut());
        v.extend(self.audio_lstm.tensors_mut());
        v.extend(self.head.tensors_mut());
        v
    }
}
