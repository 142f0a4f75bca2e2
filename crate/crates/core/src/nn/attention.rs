use super::loss::softmax;
use super::tensor::{dot, gemv_acc, gemv_t_acc, outer_acc, Parameters, Tensor2};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Bilinear ("general") attention pooling with a learned query:
/// `score_t = queryᵀ W state_t`, softmax over the valid steps, and the
/// context is the weighted sum of states.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionPool {
    /// `1 x D`.
    pub query: Tensor2,
    /// `D x D`.
    pub w: Tensor2,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    pub weights: Vec<f64>,
    key: Vec<f64>,
}

impl AttentionPool {
    pub fn new(dim: usize, rng: &mut SplitMix64) -> Self {
        let bound = 1.0 / (dim.max(1) as f64).sqrt();
        Self {
            query: Tensor2::uniform(1, dim, bound, rng),
            w: Tensor2::uniform(dim, dim, bound, rng),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            query: Tensor2::zeros(1, dim),
            w: Tensor2::zeros(dim, dim),
        }
    }

    pub fn forward(&self, states: &Tensor2, len: usize) -> Result<(Vec<f64>, AttentionCache)> {
        let dim = self.w.rows;
        if states.cols != dim {
            return Err(Error::Shape(format!("attention expects width {dim}, got {}", states.cols)));
        }
        if len == 0 || len > states.rows {
            return Err(Error::Shape(format!(
                "attention over {len} of {} steps: all steps masked",
                states.rows
            )));
        }
        // key = Wᵀ query, so score_t = key · state_t
        let mut key = vec![0.0; dim];
        gemv_t_acc(&self.w, &self.query.data, &mut key);
        let scores: Vec<f64> = (0..len).map(|t| dot(&key, states.row(t))).collect();
        let weights = softmax(&scores);
        let mut context = vec![0.0; dim];
        for (t, a) in weights.iter().enumerate() {
            for (c, s) in context.iter_mut().zip(states.row(t)) {
                *c += a * s;
            }
        }
        Ok((context, AttentionCache { weights, key }))
    }

    /// Accumulates parameter gradients and returns the gradient with respect
    /// to `states`.
    pub fn backward(&self, states: &Tensor2, cache: &AttentionCache, dcontext: &[f64], grads: &mut AttentionPool) -> Tensor2 {
        let dim = self.w.rows;
        let len = cache.weights.len();
        let mut dstates = Tensor2::zeros(states.rows, dim);
        let dalpha: Vec<f64> = (0..len).map(|t| dot(dcontext, states.row(t))).collect();
        let mean: f64 = cache.weights.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
        let mut dkey = vec![0.0; dim];
        for t in 0..len {
            let a = cache.weights[t];
            let ds = a * (dalpha[t] - mean);
            let row = dstates.row_mut(t);
            for ((r, c), k) in row.iter_mut().zip(dcontext).zip(&cache.key) {
                *r = a * c + ds * k;
            }
            for (dk, s) in dkey.iter_mut().zip(states.row(t)) {
                *dk += ds * s;
            }
        }
        outer_acc(&mut grads.w, &self.query.data, &dkey);
        gemv_acc(&self.w, &dkey, &mut grads.query.data);
        dstates
    }
}

impl Parameters for AttentionPool {
    fn tensors(&self) -> Vec<(String, &Tensor2)> {
        vec![("query".into(), &self.query), ("w".into(), &self.w)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.query, &mut self.w]
    }
}

/// Context vector and attention weights for an explicit query and bilinear
/// matrix.
pub fn attention_pool(states: &Tensor2, query: &[f64], w_a: &Tensor2, len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let pool = AttentionPool {
        query: Tensor2::from_vec(1, query.len(), query.to_vec())?,
        w: w_a.clone(),
    };
    pool.forward(states, len).map(|(ctx, cache)| (ctx, cache.weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(d: usize) -> Tensor2 {
        let mut t = Tensor2::zeros(d, d);
        for i in 0..d {
            t.data[i * d + i] = 1.0;
        }
        t
    }

    #[test]
    fn single_step_returns_state() {
        let mut rng = SplitMix64::new(4);
        let states = Tensor2::uniform(3, 4, 1.0, &mut rng);
        let w = Tensor2::uniform(4, 4, 1.0, &mut rng);
        let (ctx, weights) = attention_pool(&states, &[0.3, -1.0, 2.0, 0.1], &w, 1).unwrap();
        assert_eq!(ctx, states.row(0));
        assert_eq!(weights, vec![1.0]);
    }

    #[test]
    fn identical_states() {
        let states = Tensor2::from_rows(&[vec![0.5, -0.25], vec![0.5, -0.25]]).unwrap();
        let (ctx, _) = attention_pool(&states, &[1.0, 2.0], &eye(2), 2).unwrap();
        assert!((ctx[0] - 0.5).abs() < 1e-15 && (ctx[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn aligned_state_dominates() {
        let states = Tensor2::from_rows(&[vec![0.1, 0.0], vec![3.0, 0.0]]).unwrap();
        let (_, weights) = attention_pool(&states, &[1.0, 0.0], &eye(2), 2).unwrap();
        // softmax([0.1, 3.0]): weight_2 = 1 / (1 + e^-2.9)
        assert!((weights[1] - 1.0 / (1.0 + (-2.9f64).exp())).abs() < 1e-12);
        assert!(weights[1] > 0.5);
    }

    #[test]
    fn all_masked_is_an_error() {
        let states = Tensor2::zeros(2, 2);
        assert!(attention_pool(&states, &[1.0, 0.0], &eye(2), 0).is_err());
    }
}
