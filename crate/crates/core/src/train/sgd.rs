//! Minibatch SGD with optional synthetic-data augmentation, the generative
//! regularizer, and hidden-layer dropout. Training is single-threaded so a
//! (params, data, config, seed) tuple reproduces bit-exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{bernoulli_mask, derive_seed, Rng, RngSeed};
use crate::train::data::Dataset;
use crate::train::mlp::{
    argmax, mlp_backward, mlp_forward, DropoutMasks, Gradients, MlpParams,
};
use crate::train::synth::{regularizer_grad, shadow_synthesize, SourceLayer, SynthOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Weight of the loss on synthetic samples; 0 disables augmentation.
    pub shadow_weight: f64,
    /// Per-layer weights of the generative regularizer term; 0 disables.
    pub reg_lambdas: [f64; 3],
    /// Hidden-layer keep ratio is 1 - dropout_ratio; 0 disables dropout.
    pub dropout_ratio: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub synth: SynthOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            shadow_weight: 0.0,
            reg_lambdas: [0.0; 3],
            dropout_ratio: 0.0,
            batch_size: 20,
            epochs: 10,
            seed: 0,
            synth: SynthOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub train_loss: f64,
    /// Error on held-out real inputs.
    pub val_error: f64,
    /// Error on synthetic inputs generated from the held-out set, scored
    /// against the original labels.
    pub synth_error: f64,
    /// Fraction of held-out samples whose prediction matches the prediction
    /// on their synthetic counterpart.
    pub agreement: f64,
}

fn draw_masks(params: &MlpParams, keep: f64, seed: RngSeed) -> DropoutMasks {
    DropoutMasks {
        h1: bernoulli_mask(params.w1.cols(), keep, derive_seed(seed, 0)),
        h2: bernoulli_mask(params.w2.cols(), keep, derive_seed(seed, 1)),
        keep,
    }
}

fn apply_update(params: &mut MlpParams, grad: &Gradients, lr: f64) {
    let step_m = |dst: &mut crate::linalg::Matrix, src: &crate::linalg::Matrix| {
        for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
            *d -= lr * s;
        }
    };
    let step_v = |dst: &mut Vec<f64>, src: &[f64]| {
        for (d, s) in dst.iter_mut().zip(src) {
            *d -= lr * s;
        }
    };
    step_m(&mut params.w1, &grad.w1);
    step_v(&mut params.b1, &grad.b1);
    step_m(&mut params.w2, &grad.w2);
    step_v(&mut params.b2, &grad.b2);
    step_m(&mut params.w3, &grad.w3);
    step_v(&mut params.b3, &grad.b3);
}

/// One pass over the data. Per batch: mean cross-entropy gradient on the
/// real samples; when shadow_weight > 0 a synthetic sample per real one,
/// labeled with the net's own prediction, joins at that weight; nonzero
/// reg_lambdas ascend the per-layer generative log-likelihood. Metrics are
/// evaluated on `val` after the pass.
pub fn train_epoch(
    params: &mut MlpParams,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<EpochMetrics> {
    if train.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let epoch_seed = derive_seed(RngSeed::new(cfg.seed), epoch as u64);
    let mut order: Vec<usize> = (0..train.len()).collect();
    Rng::new(derive_seed(epoch_seed, 0)).shuffle(&mut order);

    let keep = 1.0 - cfg.dropout_ratio;
    let mut loss_sum = 0.0;
    let mut loss_count = 0usize;

    for (batch_idx, batch) in order.chunks(cfg.batch_size.max(1)).enumerate() {
        let batch_seed = derive_seed(epoch_seed, 1 + batch_idx as u64);
        let mut grad = Gradients::zeros(params);
        let inv = 1.0 / batch.len() as f64;

        for (slot, &sample) in batch.iter().enumerate() {
            let sample_seed = derive_seed(batch_seed, slot as u64);
            let x = &train.inputs[sample];
            let y = train.labels[sample];

            let masks = if cfg.dropout_ratio > 0.0 {
                Some(draw_masks(params, keep, derive_seed(sample_seed, 0)))
            } else {
                None
            };
            let (g, loss) = mlp_backward(params, x, y, masks.as_ref())?;
            grad.accumulate(&g, inv);
            loss_sum += loss;
            loss_count += 1;

            if cfg.shadow_weight > 0.0 {
                // Synthesize from the clean forward pass and label with the
                // net's current prediction.
                let act = mlp_forward(params, x, None)?;
                let z = argmax(&act.logits);
                let source = match cfg.synth.source_layer {
                    SourceLayer::H2 => act.h2.clone(),
                    SourceLayer::H3 => act.logits.clone(),
                };
                let x_syn =
                    shadow_synthesize(params, &source, &cfg.synth, derive_seed(sample_seed, 1))?;
                let (g_syn, _) = mlp_backward(params, &x_syn, z, masks.as_ref())?;
                grad.accumulate(&g_syn, cfg.shadow_weight * inv);
            }

            if cfg.reg_lambdas.iter().any(|&l| l > 0.0) {
                let act = mlp_forward(params, x, None)?;
                // Ascend log p at each layer: subtract the negated gradient.
                if cfg.reg_lambdas[0] > 0.0 {
                    let r = regularizer_grad(&params.w1, &act.h1, x, false, None)?;
                    let mut neg = Gradients::zeros(params);
                    neg.w1 = r;
                    neg.scale(-1.0);
                    grad.accumulate(&neg, cfg.reg_lambdas[0] * inv);
                }
                if cfg.reg_lambdas[1] > 0.0 {
                    let r = regularizer_grad(&params.w2, &act.h2, &act.h1, false, None)?;
                    let mut neg = Gradients::zeros(params);
                    neg.w2 = r;
                    neg.scale(-1.0);
                    grad.accumulate(&neg, cfg.reg_lambdas[1] * inv);
                }
                if cfg.reg_lambdas[2] > 0.0 {
                    let r = regularizer_grad(&params.w3, &act.logits, &act.h2, false, None)?;
                    let mut neg = Gradients::zeros(params);
                    neg.w3 = r;
                    neg.scale(-1.0);
                    grad.accumulate(&neg, cfg.reg_lambdas[2] * inv);
                }
            }
        }
        apply_update(params, &grad, cfg.learning_rate);
    }

    let metrics = evaluate(params, val, &cfg.synth, derive_seed(epoch_seed, u64::MAX / 2))?;
    Ok(EpochMetrics {
        train_loss: loss_sum / loss_count.max(1) as f64,
        ..metrics
    })
}

/// Validation metrics without touching the parameters: real error,
/// synthetic error against original labels, and prediction agreement.
pub fn evaluate(
    params: &MlpParams,
    val: &Dataset,
    synth: &SynthOptions,
    seed: RngSeed,
) -> Result<EpochMetrics> {
    if val.is_empty() {
        return Err(Error::invalid("validation set is empty"));
    }
    let mut wrong_real = 0usize;
    let mut wrong_syn = 0usize;
    let mut agree = 0usize;
    for (i, (x, &y)) in val.inputs.iter().zip(&val.labels).enumerate() {
        let act = mlp_forward(params, x, None)?;
        let pred = argmax(&act.logits);
        wrong_real += (pred != y) as usize;

        let source = match synth.source_layer {
            SourceLayer::H2 => act.h2.clone(),
            SourceLayer::H3 => act.logits.clone(),
        };
        let x_syn = shadow_synthesize(params, &source, synth, derive_seed(seed, i as u64))?;
        let pred_syn = argmax(&mlp_forward(params, &x_syn, None)?.logits);
        wrong_syn += (pred_syn != y) as usize;
        agree += (pred_syn == pred) as usize;
    }
    let n = val.len() as f64;
    Ok(EpochMetrics {
        train_loss: 0.0,
        val_error: wrong_real as f64 / n,
        synth_error: wrong_syn as f64 / n,
        agreement: agree as f64 / n,
    })
}

/// Fraction of index-paired inputs whose predicted classes agree.
pub fn label_agreement(
    params: &MlpParams,
    inputs_a: &[Vec<f64>],
    inputs_b: &[Vec<f64>],
) -> Result<f64> {
    if inputs_a.len() != inputs_b.len() {
        return Err(Error::dim(
            format!("{} paired inputs", inputs_a.len()),
            format!("{}", inputs_b.len()),
        ));
    }
    if inputs_a.is_empty() {
        return Err(Error::invalid("label agreement needs at least one pair"));
    }
    let mut agree = 0usize;
    for (a, b) in inputs_a.iter().zip(inputs_b) {
        let pa = argmax(&mlp_forward(params, a, None)?.logits);
        let pb = argmax(&mlp_forward(params, b, None)?.logits);
        agree += (pa == pb) as usize;
    }
    Ok(agree as f64 / inputs_a.len() as f64)
}
