use serde::{Deserialize, Serialize};

use super::tensor::Parameters;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::Config(format!("unknown optimizer {s:?}"))),
        }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Cap on optimizer steps across all epochs.
    pub max_steps: Option<u64>,
    /// Global gradient-norm clip threshold.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            epochs: 3,
            batch_size: 8,
            seed: 42,
            optimizer: OptimizerKind::Adam,
            max_steps: Some(100_000),
            clip_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.max_steps == Some(0) {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Adam moment buffers; empty until the first step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

/// One update of `params` from `grads` (same module type, same layout).
/// Fails without touching anything if a gradient is non-finite.
pub fn optimizer_step<M: Parameters>(params: &mut M, grads: &M, cfg: &TrainConfig, state: &mut OptimizerState) -> Result<()> {
    let named = grads.tensors();
    for (name, g) in &named {
        if !g.all_finite() {
            return Err(Error::NonFiniteGradient(name.clone()));
        }
    }
    let mut targets = params.tensors_mut();
    if targets.len() != named.len() {
        return Err(Error::Shape("parameter and gradient layouts differ".into()));
    }
    for (p, (name, g)) in targets.iter().zip(&named) {
        if p.shape() != g.shape() {
            return Err(Error::Shape(format!("gradient shape mismatch for {name}")));
        }
    }
    state.step += 1;
    let lr = cfg.learning_rate;
    match cfg.optimizer {
        OptimizerKind::Sgd => {
            for (p, (_, g)) in targets.iter_mut().zip(&named) {
                for (w, d) in p.data.iter_mut().zip(&g.data) {
                    *w -= lr * d;
                }
            }
        }
        OptimizerKind::Adam => {
            if state.m.is_empty() {
                state.m = named.iter().map(|(_, g)| vec![0.0; g.data.len()]).collect();
                state.v = state.m.clone();
            }
            let t = state.step as i32;
            let c1 = 1.0 - ADAM_BETA1.powi(t);
            let c2 = 1.0 - ADAM_BETA2.powi(t);
            for (((p, (_, g)), m), v) in targets.iter_mut().zip(&named).zip(&mut state.m).zip(&mut state.v) {
                for (((w, &d), mi), vi) in p.data.iter_mut().zip(&g.data).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * d;
                    *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * d * d;
                    let m_hat = *mi / c1;
                    let v_hat = *vi / c2;
                    *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
    Ok(())
}

/// Scales gradients so their global L2 norm is at most `max_norm`; returns
/// the norm before clipping.
pub fn clip_grad_norm<M: Parameters>(grads: &mut M, max_norm: f64) -> f64 {
    let norm = grads
        .tensors()
        .iter()
        .map(|(_, t)| t.norm_sq())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        for t in grads.tensors_mut() {
            t.scale(s);
        }
    }
    norm
}
