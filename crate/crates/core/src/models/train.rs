use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{argmax, Classifier, Featurizer, FusionModel, Model, ModelBundle, ModelDims, ModelKind, Sample, TextOnlyModel};
use crate::corpus::Utterance;
use crate::dsp::DspConfig;
use crate::error::{Error, Result};
use crate::nn::{clip_grad_norm, optimizer_step, softmax_xent, OptimizerState, Tensor2, TrainConfig};
use crate::rng::SplitMix64;
use crate::text::{build_vocab, tokenize, TextConfig};

/// Featurization and architecture settings fixed at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub text: TextConfig,
    pub dsp: DspConfig,
    pub dims: ModelDims,
    /// Fusion-head dropout probability.
    pub dropout: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            text: TextConfig::default(),
            dsp: DspConfig::default(),
            dims: ModelDims::default(),
            dropout: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model_kind: ModelKind,
    pub config: TrainConfig,
    pub num_parameters: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub epoch_train_loss: Vec<f64>,
    /// `None` when the validation set is empty.
    pub epoch_val_accuracy: Vec<Option<f64>>,
    /// 1-based epoch whose weights were kept.
    pub selected_epoch: usize,
    pub steps: u64,
}

/// Mini-batch training with a seeded per-epoch shuffle. Keeps the weights of
/// the epoch with the best validation accuracy (earliest on ties, last epoch
/// when there is no validation data).
pub fn train_model<M: Classifier>(
    mut model: M,
    kind: ModelKind,
    train: &[Sample],
    val: &[Sample],
    cfg: &TrainConfig,
) -> Result<(M, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let mut shuffle_rng = SplitMix64::derive(cfg.seed, 1);
    let mut dropout_rng = SplitMix64::derive(cfg.seed, 2);
    let mut grads = model.zeros_like();
    let mut state = OptimizerState::default();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let max_steps = cfg.max_steps.unwrap_or(u64::MAX);

    let mut report = TrainReport {
        model_kind: kind,
        config: cfg.clone(),
        num_parameters: model.num_parameters(),
        train_size: train.len(),
        val_size: val.len(),
        epoch_train_loss: Vec::new(),
        epoch_val_accuracy: Vec::new(),
        selected_epoch: 0,
        steps: 0,
    };
    let mut best: Option<(f64, M)> = None;

    for epoch in 1..=cfg.epochs {
        if report.steps >= max_steps {
            break;
        }
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            if report.steps >= max_steps {
                break;
            }
            let mut outputs = Vec::with_capacity(batch.len());
            let mut logits = Tensor2::zeros(batch.len(), crate::corpus::NUM_DIALECTS);
            let mut labels = Vec::with_capacity(batch.len());
            for (r, &i) in batch.iter().enumerate() {
                let (l, cache) = model.forward(&train[i], Some(&mut dropout_rng))?;
                logits.row_mut(r).copy_from_slice(&l);
                labels.push(train[i].label);
                outputs.push(cache);
            }
            let (loss, dlogits) = softmax_xent(&logits, &labels)?;
            grads.zero_grad();
            for (r, (&i, cache)) in batch.iter().zip(&outputs).enumerate() {
                model.backward(&train[i], cache, dlogits.row(r), &mut grads);
            }
            if let Some(max_norm) = cfg.clip_norm {
                clip_grad_norm(&mut grads, max_norm);
            }
            optimizer_step(&mut model, &grads, cfg, &mut state)?;
            report.steps += 1;
            loss_sum += loss;
            batches += 1;
        }
        report.epoch_train_loss.push(loss_sum / batches.max(1) as f64);

        let acc = accuracy(&model, val)?;
        report.epoch_val_accuracy.push(acc);
        let score = acc.unwrap_or(f64::INFINITY);
        let improves = match &best {
            None => true,
            Some((b, _)) => acc.is_none() || score > *b,
        };
        if improves {
            best = Some((score, model.clone()));
            report.selected_epoch = epoch;
        }
    }
    let model = best.map(|(_, m)| m).unwrap_or(model);
    Ok((model, report))
}

/// Fraction of samples whose argmax prediction matches the label.
pub(crate) fn accuracy<M: Classifier>(model: &M, samples: &[Sample]) -> Result<Option<f64>> {
    if samples.is_empty() {
        return Ok(None);
    }
    let mut correct = 0usize;
    for s in samples {
        let (logits, _) = model.forward(s, None)?;
        if argmax(&logits) == s.label {
            correct += 1;
        }
    }
    Ok(Some(correct as f64 / samples.len() as f64))
}

fn featurizer_for(train: &[Utterance], opts: &ModelOptions) -> Result<Featurizer> {
    opts.dims.validate()?;
    if !(0.0..1.0).contains(&opts.dropout) {
        return Err(Error::Config(format!("dropout must lie in [0, 1), got {}", opts.dropout)));
    }
    let docs: Vec<Vec<String>> = train
        .iter()
        .map(|u| tokenize(&u.transcript_dialectal, opts.text.granularity))
        .collect();
    let vocab = build_vocab(&docs, opts.text.granularity, opts.text.min_count, opts.text.max_vocab);
    Featurizer::new(opts.text.clone(), vocab, &opts.dsp)
}

fn samples(f: &Featurizer, utts: &[Utterance], audio_root: &Path, with_audio: bool) -> Result<Vec<Sample>> {
    utts.iter().map(|u| f.utterance_sample(u, audio_root, with_audio)).collect()
}

/// Trains the transcript-only classifier. The vocabulary is built from the
/// training transcripts.
pub fn train_text_only(
    train: &[Utterance],
    val: &[Utterance],
    opts: &ModelOptions,
    cfg: &TrainConfig,
) -> Result<(ModelBundle, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let f = featurizer_for(train, opts)?;
    let train_s = samples(&f, train, Path::new(""), false)?;
    let val_s = samples(&f, val, Path::new(""), false)?;
    let mut rng = SplitMix64::derive(cfg.seed, 0);
    let model = TextOnlyModel::new(f.vocab.len(), &opts.dims, &mut rng);
    let (model, report) = train_model(model, ModelKind::Text, &train_s, &val_s, cfg)?;
    Ok((ModelBundle::new(opts.clone(), f.vocab, Model::Text(model)), report))
}

/// Trains the text+audio classifier. Audio paths are resolved against
/// `audio_root`; every training and validation utterance needs audio.
pub fn train_fusion(
    train: &[Utterance],
    val: &[Utterance],
    audio_root: &Path,
    opts: &ModelOptions,
    cfg: &TrainConfig,
) -> Result<(ModelBundle, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let f = featurizer_for(train, opts)?;
    let train_s = samples(&f, train, audio_root, true)?;
    let val_s = samples(&f, val, audio_root, true)?;
    let mut rng = SplitMix64::derive(cfg.seed, 0);
    let model = FusionModel::new(f.vocab.len(), opts.dsp.feature_dim(), &opts.dims, opts.dropout, &mut rng);
    let (model, report) = train_model(model, ModelKind::Fusion, &train_s, &val_s, cfg)?;
    Ok((ModelBundle::new(opts.clone(), f.vocab, Model::Fusion(model)), report))
}
