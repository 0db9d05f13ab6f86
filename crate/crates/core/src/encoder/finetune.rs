use nncore::{bce_value, AdamState, Graph, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::FineTuneConfig;
use super::model::Encoder;
use crate::error::{Error, Result};
use crate::textprep::Chunk;

/// One chunk paired with its document's full multi-hot label vector.
#[derive(Debug, Clone, Copy)]
pub struct TrainExample<'a> {
    pub chunk: &'a Chunk,
    pub target: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneResult {
    /// Validation loss before training, then after every epoch.
    pub curve: Vec<f64>,
}

impl FineTuneResult {
    pub fn initial(&self) -> f64 {
        self.curve[0]
    }

    pub fn last(&self) -> f64 {
        *self.curve.last().expect("curve holds the initial point")
    }

    /// Relative change from the initial to the final loss.
    pub fn relative_change(&self) -> f64 {
        (self.last() - self.initial()) / self.initial()
    }
}

/// Smoothed per-label log-odds of the training targets.
pub fn label_prior(targets: &[&[f64]]) -> Vec<f64> {
    let width = targets.first().map_or(0, |t| t.len());
    let n = targets.len() as f64;
    (0..width)
        .map(|j| {
            let pos: f64 = targets.iter().map(|t| t[j]).sum();
            let p = (pos + 0.5) / (n + 1.0);
            (p / (1.0 - p)).ln()
        })
        .collect()
}

fn check_targets(examples: &[TrainExample], label_count: usize) -> Result<()> {
    match examples.iter().find(|e| e.target.len() != label_count) {
        Some(e) => Err(Error::DimMismatch {
            expected: label_count,
            got: e.target.len(),
        }),
        None => Ok(()),
    }
}

/// Mean binary cross-entropy of the classification head over `examples`.
pub fn validation_loss(model: &Encoder, examples: &[TrainExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Training("empty validation set".into()));
    }
    check_targets(examples, model.config().label_count)?;
    let mut total = 0.0;
    for e in examples {
        let mut g = Graph::new(model.store());
        let z = model.logits(&mut g, &[e.chunk])?;
        total += bce_value(g.value(z).data(), e.target)?;
    }
    Ok(total / examples.len() as f64)
}

/// Trains body and head with Adam at a constant learning rate, shuffling
/// the examples each epoch. `on_epoch(e, model)` runs after epoch `e`
/// (and with `e = 0` before training), so callers can snapshot checkpoints.
pub fn finetune_encoder<F>(
    model: &mut Encoder,
    train: &[TrainExample],
    val: &[TrainExample],
    cfg: &FineTuneConfig,
    mut on_epoch: F,
) -> Result<FineTuneResult>
where
    F: FnMut(usize, &Encoder) -> Result<()>,
{
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    let labels = model.config().label_count;
    check_targets(train, labels)?;
    check_targets(val, labels)?;

    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut adam = AdamState::new(model.store(), cfg.learning_rate, 0.0);
    let mut curve = vec![validation_loss(model, val)?];
    on_epoch(0, model)?;

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut order_rng);
        for batch in order.chunks(cfg.batch_size) {
            let chunks: Vec<&Chunk> = batch.iter().map(|&i| train[i].chunk).collect();
            let mut targets = Vec::with_capacity(batch.len() * labels);
            for &i in batch {
                targets.extend_from_slice(train[i].target);
            }
            let targets = Tensor::new(vec![batch.len(), labels], targets)?;
            let grads = {
                let mut g = Graph::training(model.store(), &mut dropout_rng);
                let z = model.logits(&mut g, &chunks)?;
                let loss = g.bce_with_logits(z, &targets)?;
                if !g.value(loss).data()[0].is_finite() {
                    return Err(Error::Training(format!("non-finite loss in epoch {epoch}")));
                }
                g.backward(loss)?
            };
            grads.apply_to(model.store_mut())?;
            adam.step(model.store_mut(), cfg.learning_rate)?;
        }
        curve.push(validation_loss(model, val)?);
        on_epoch(epoch, model)?;
    }
    Ok(FineTuneResult { curve })
}
