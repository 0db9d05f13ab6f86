//! Central finite-difference verification of analytic gradients.

use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::params::ParamStore;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// `(parameter name, max relative error over its elements)`
    pub per_param: Vec<(String, f64)>,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.per_param.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_error() < tolerance
    }

    pub fn worst(&self) -> Option<&(String, f64)> {
        self.per_param.iter().max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// `|a - n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares the backward pass of `model_fn` against
/// `(f(theta + step) - f(theta - step)) / (2 step)` for every element of
/// every parameter in `store`. `model_fn` must build a scalar on an
/// evaluation-mode graph.
pub fn grad_check<F>(store: &mut ParamStore, model_fn: F, step: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph) -> Result<NodeId>,
{
    let analytic = {
        let mut g = Graph::new(store);
        let root = model_fn(&mut g)?;
        g.backward(root)?
    };
    let eval = |store: &ParamStore| -> Result<f64> {
        let mut g = Graph::new(store);
        let root = model_fn(&mut g)?;
        Ok(g.value(root).data()[0])
    };
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    let mut per_param = Vec::with_capacity(ids.len());
    for id in ids {
        let n = store.tensor(id).len();
        let grad = analytic.get(id).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let orig = store.tensor(id).data()[j];
            store.get_mut(id).tensor.data_mut()[j] = orig + step;
            let plus = eval(store)?;
            store.get_mut(id).tensor.data_mut()[j] = orig - step;
            let minus = eval(store)?;
            store.get_mut(id).tensor.data_mut()[j] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(grad[j], numeric));
        }
        per_param.push((store.get(id).name.clone(), worst));
    }
    Ok(GradCheckReport { per_param })
}
