//! Adam with decoupled weight decay, and the linear-decay learning-rate schedule.

use crate::error::{NnError, Result};
use crate::params::ParamStore;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;
pub const DEFAULT_WEIGHT_DECAY: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct AdamState {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub base_lr: f64,
    pub weight_decay: f64,
}

impl AdamState {
    pub fn new(store: &ParamStore, base_lr: f64, weight_decay: f64) -> Self {
        let zeros: Vec<Vec<f64>> = store.iter().map(|(_, p)| vec![0.0; p.tensor.len()]).collect();
        Self {
            first: zeros.clone(),
            second: zeros,
            step: 0,
            beta1: BETA1,
            beta2: BETA2,
            eps: EPSILON,
            base_lr,
            weight_decay,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update from the store's grad slots. Weight decay
    /// `theta -= lr * lambda * theta` touches only parameters flagged `decay`.
    /// Grad slots are cleared afterwards.
    pub fn step(&mut self, store: &mut ParamStore, lr_now: f64) -> Result<()> {
        if self.first.len() != store.len() {
            return Err(NnError::InvalidArgument(format!(
                "optimizer tracks {} parameters, store has {}",
                self.first.len(),
                store.len()
            )));
        }
        for (_, p) in store.iter() {
            if p.tensor.grad.is_none() {
                return Err(NnError::MissingGradient(p.name.clone()));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
        for id in ids {
            let i = id.index();
            let p = store.get_mut(id);
            let decay = if p.decay { self.weight_decay } else { 0.0 };
            let grad = p.tensor.grad.take().expect("checked above");
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for (j, theta) in p.tensor.data_mut().iter_mut().enumerate() {
                let g = grad[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g * g;
                let mhat = m[j] / c1;
                let vhat = v[j] / c2;
                *theta -= lr_now * (mhat / (vhat.sqrt() + self.eps) + decay * *theta);
            }
        }
        Ok(())
    }
}

/// Linear interpolation from `base_lr` at epoch 0 to
/// `floor_fraction * base_lr` at `decay_epochs`, constant afterwards.
pub fn lr_schedule(base_lr: f64, epoch: usize, decay_epochs: usize, floor_fraction: f64) -> f64 {
    let decay_epochs = decay_epochs.max(1);
    if epoch >= decay_epochs {
        return base_lr * floor_fraction;
    }
    let frac = epoch as f64 / decay_epochs as f64;
    base_lr * (1.0 - (1.0 - floor_fraction) * frac)
}
