//! Bidirectional two-layer LSTM encoder with bilinear attention pooling and a
//! softmax head over the dialect classes.

use super::{gather_embeddings, scatter_embedding_grads, Classifier, ModelDims, Sample};
use crate::corpus::NUM_DIALECTS;
use crate::error::Result;
use crate::nn::{prefixed, AttentionCache, AttentionPool, BiLstm, BiLstmCache, Dense, Parameters, Tensor2};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct TextOnlyModel {
    pub embedding: Tensor2,
    pub layer1: BiLstm,
    pub layer2: BiLstm,
    pub attention: AttentionPool,
    pub head: Dense,
}

pub struct TextOnlyCache {
    len: usize,
    x: Tensor2,
    out1: Tensor2,
    cache1: BiLstmCache,
    out2: Tensor2,
    cache2: BiLstmCache,
    att: AttentionCache,
    context: Vec<f64>,
}

impl TextOnlyModel {
    pub const LAYERS: usize = 2;

    pub fn new(vocab_size: usize, dims: &ModelDims, rng: &mut SplitMix64) -> Self {
        let (e, h) = (dims.embed_dim, dims.hidden);
        Self {
            embedding: Tensor2::uniform(vocab_size, e, 1.0 / (e as f64).sqrt(), rng),
            layer1: BiLstm::new(e, h, rng),
            layer2: BiLstm::new(2 * h, h, rng),
            attention: AttentionPool::new(2 * h, rng),
            head: Dense::new(2 * h, NUM_DIALECTS, rng),
        }
    }

    pub fn zeros(vocab_size: usize, dims: &ModelDims) -> Self {
        let (e, h) = (dims.embed_dim, dims.hidden);
        Self {
            embedding: Tensor2::zeros(vocab_size, e),
            layer1: BiLstm::zeros(e, h),
            layer2: BiLstm::zeros(2 * h, h),
            attention: AttentionPool::zeros(2 * h),
            head: Dense::zeros(2 * h, NUM_DIALECTS),
        }
    }
}

impl Classifier for TextOnlyModel {
    type Cache = TextOnlyCache;

    fn forward(&self, s: &Sample, _dropout: Option<&mut SplitMix64>) -> Result<(Vec<f64>, TextOnlyCache)> {
        let len = s.text.true_length.max(1);
        let x = gather_embeddings(&self.embedding, &s.text.ids[..len]);
        let (out1, cache1) = self.layer1.forward(&x, len)?;
        let (out2, cache2) = self.layer2.forward(&out1, len)?;
        let (context, att) = self.attention.forward(&out2, len)?;
        let logits = self.head.forward_vec(&context);
        Ok((
            logits,
            TextOnlyCache {
                len,
                x,
                out1,
                cache1,
                out2,
                cache2,
                att,
                context,
            },
        ))
    }

    fn backward(&self, s: &Sample, c: &TextOnlyCache, dlogits: &[f64], g: &mut Self) {
        let mut dctx = vec![0.0; c.context.len()];
        self.head.backward_vec(&c.context, dlogits, &mut g.head, Some(&mut dctx));
        let dout2 = self.attention.backward(&c.out2, &c.att, &dctx, &mut g.attention);
        let dout1 = self.layer2.backward(&c.out1, &c.cache2, &dout2, &mut g.layer2);
        let dx = self.layer1.backward(&c.x, &c.cache1, &dout1, &mut g.layer1);
        scatter_embedding_grads(&mut g.embedding, &s.text.ids[..c.len], &dx);
    }

    fn zeros_like(&self) -> Self {
        let dims = ModelDims {
            embed_dim: self.embedding.cols,
            hidden: self.layer1.fwd.hidden_dim(),
            ..ModelDims::default()
        };
        Self::zeros(self.embedding.rows, &dims)
    }
}

impl Parameters for TextOnlyModel {
    fn tensors(&self) -> Vec<(String, &Tensor2)> {
        let mut v = vec![("embedding".to_string(), &self.embedding)];
        v.extend(prefixed("layer1", self.layer1.tensors()));
        v.extend(prefixed("layer2", self.layer2.tensors()));
        v.extend(prefixed("attention", self.attention.tensors()));
        v.extend(prefixed("head", self.head.tensors()));
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut v = vec![&mut self.embedding];
        v.extend(self.layer1.tensors_mut());
        v.extend(self.layer2.tensors_mut());
        v.extend(self.attention.tensors_mut());
        v.extend(self.head.tensors_mut());
        v
    }
}
