use rand::Rng;
use rand::RngCore;

use crate::error::{NnError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A named trainable tensor. `decay` marks weight matrices that receive
/// decoupled weight decay.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub tensor: Tensor,
    pub decay: bool,
}

/// Ordered collection of a model's parameters. Names are unique and
/// registration order fixes checkpoint layout.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    params: Vec<Parameter>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, mut tensor: Tensor, decay: bool) -> Result<ParamId> {
        let name = name.into();
        if self.params.iter().any(|p| p.name == name) {
            return Err(NnError::DuplicateName(name));
        }
        tensor.requires_grad = true;
        self.params.push(Parameter { name, tensor, decay });
        Ok(ParamId(self.params.len() - 1))
    }

    /// Weight initialised uniformly in `±sqrt(1/fan_in)`.
    pub fn add_uniform(
        &mut self,
        name: impl Into<String>,
        shape: Vec<usize>,
        fan_in: usize,
        rng: &mut dyn RngCore,
    ) -> Result<ParamId> {
        let bound = (1.0 / fan_in.max(1) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
        self.add(name, Tensor::new(shape, data)?, true)
    }

    pub fn add_const(&mut self, name: impl Into<String>, shape: Vec<usize>, value: f64) -> Result<ParamId> {
        self.add(name, Tensor::filled(shape, value), false)
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].tensor
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar weights.
    pub fn count(&self) -> usize {
        self.params.iter().map(|p| p.tensor.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.tensor.grad = None;
        }
    }

    /// Adds a gradient into a parameter's grad slot.
    pub fn accumulate_grad(&mut self, id: ParamId, grad: &[f64]) -> Result<()> {
        let p = &mut self.params[id.0];
        let t = &mut p.tensor;
        if grad.len() != t.len() {
            return Err(NnError::InvalidArgument(format!(
                "gradient for `{}` has {} values, expected {}",
                p.name,
                grad.len(),
                t.len()
            )));
        }
        match &mut t.grad {
            Some(g) => g.iter_mut().zip(grad).for_each(|(a, b)| *a += b),
            None => t.grad = Some(grad.to_vec()),
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        self.params.iter().map(|p| p.tensor.data().to_vec()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Vec<f64>]) -> Result<()> {
        if snapshot.len() != self.params.len() {
            return Err(NnError::InvalidArgument("snapshot does not match parameter set".into()));
        }
        for (p, s) in self.params.iter_mut().zip(snapshot) {
            if s.len() != p.tensor.len() {
                return Err(NnError::InvalidArgument(format!("snapshot size mismatch for `{}`", p.name)));
            }
            p.tensor.data_mut().copy_from_slice(s);
        }
        Ok(())
    }
}
