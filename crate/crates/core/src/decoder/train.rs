use nncore::{bce_value, lr_schedule, AdamState, Graph, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::model::{Decoder, DecoderInput};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub epochs_run: usize,
}

fn check(inputs: &[DecoderInput], targets: &[Vec<f64>], labels: usize, what: &str) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Training(format!("empty {what} split")));
    }
    if inputs.len() != targets.len() {
        return Err(Error::Input(format!(
            "{what}: {} inputs but {} label vectors",
            inputs.len(),
            targets.len()
        )));
    }
    match targets.iter().find(|t| t.len() != labels) {
        Some(t) => Err(Error::DimMismatch {
            expected: labels,
            got: t.len(),
        }),
        None => Ok(()),
    }
}

/// Mean binary cross-entropy over `inputs` in evaluation mode.
pub fn evaluation_loss(model: &Decoder, inputs: &[DecoderInput], targets: &[Vec<f64>]) -> Result<f64> {
    check(inputs, targets, model.config().label_count, "evaluation")?;
    let mut total = 0.0;
    for (xs, ys) in inputs.chunks(256).zip(targets.chunks(256)) {
        let mut g = Graph::new(model.store());
        let z = model.forward(&mut g, xs)?;
        let flat: Vec<f64> = ys.iter().flatten().copied().collect();
        total += bce_value(g.value(z).data(), &flat)? * xs.len() as f64;
    }
    Ok(total / inputs.len() as f64)
}

/// Adam with a linearly decaying learning rate and early stopping on the
/// validation loss. The model ends up holding the best epoch's weights.
pub fn train_decoder(
    model: &mut Decoder,
    train_inputs: &[DecoderInput],
    train_targets: &[Vec<f64>],
    val_inputs: &[DecoderInput],
    val_targets: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    cfg.validate()?;
    let labels = model.config().label_count;
    check(train_inputs, train_targets, labels, "training")?;
    check(val_inputs, val_targets, labels, "validation")?;

    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut adam = AdamState::new(model.store(), cfg.base_lr, cfg.weight_decay);
    let mut order: Vec<usize> = (0..train_inputs.len()).collect();

    let mut history = TrainHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        epochs_run: 0,
    };
    let mut best = model.store().snapshot();
    let mut stale = 0;
    for epoch in 0..cfg.max_epochs {
        let lr = lr_schedule(cfg.base_lr, epoch, cfg.decay_epochs, cfg.floor_fraction);
        order.shuffle(&mut order_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<DecoderInput> = batch.iter().map(|&i| train_inputs[i].clone()).collect();
            let mut ys = Vec::with_capacity(batch.len() * labels);
            for &i in batch {
                ys.extend_from_slice(&train_targets[i]);
            }
            let ys = Tensor::new(vec![batch.len(), labels], ys)?;
            let grads = {
                let mut g = Graph::training(model.store(), &mut dropout_rng);
                let z = model.forward(&mut g, &xs)?;
                let loss = g.bce_with_logits(z, &ys)?;
                let value = g.value(loss).data()[0];
                if !value.is_finite() {
                    return Err(Error::Training(format!("non-finite loss in epoch {}", epoch + 1)));
                }
                epoch_loss += value * batch.len() as f64;
                g.backward(loss)?
            };
            grads.apply_to(model.store_mut())?;
            adam.step(model.store_mut(), lr)?;
        }
        history.train_loss.push(epoch_loss / train_inputs.len() as f64);
        let val = evaluation_loss(model, val_inputs, val_targets)?;
        history.val_loss.push(val);
        history.epochs_run = epoch + 1;
        if val < history.best_val_loss - cfg.min_delta {
            history.best_val_loss = val;
            history.best_epoch = epoch + 1;
            best = model.store().snapshot();
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    model.store_mut().restore(&best)?;
    Ok(history)
}
