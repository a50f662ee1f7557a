use super::params::{Gradients, ParameterStore, TENSOR_NAMES};
use super::tensor::Tensor;
use crate::{Error, Result};

/// Momentum buffers kept beside the parameters for one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct Velocity {
    tensors: Vec<Tensor>,
}

impl Velocity {
    pub fn zeros(store: &ParameterStore) -> Self {
        Velocity { tensors: store.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect() }
    }
}

/// Classical momentum: `v ← μv + g`, `θ ← θ − lr·v`.
///
/// A learning rate of exactly zero is accepted and leaves the parameters
/// untouched. Any non-finite gradient entry aborts before anything is
/// written.
pub fn sgd_step(store: &mut ParameterStore, grads: &Gradients, velocity: &mut Velocity, lr: f64, momentum: f64) -> Result<()> {
    if !(lr >= 0.0) || !lr.is_finite() {
        return Err(Error::InvalidInput(format!("learning rate must be finite and non-negative, got {lr}")));
    }
    if !(0.0..1.0).contains(&momentum) {
        return Err(Error::InvalidInput(format!("momentum must lie in [0, 1), got {momentum}")));
    }
    if grads.tensors().len() != store.tensors().len() || velocity.tensors.len() != store.tensors().len() {
        return Err(Error::InvalidInput("gradient store does not mirror the parameters".into()));
    }
    for (i, (g, p)) in grads.tensors().iter().zip(store.tensors()).enumerate() {
        if g.shape() != p.shape() {
            return Err(Error::InvalidInput(format!("gradient shape mismatch for {}", TENSOR_NAMES[i])));
        }
        if let Some(k) = g.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::Training(format!(
                "non-finite gradient in {} at flat index {k} ({})",
                TENSOR_NAMES[i],
                g.data()[k]
            )));
        }
    }
    for ((p, g), v) in store.tensors_mut().iter_mut().zip(grads.tensors()).zip(velocity.tensors.iter_mut()) {
        for ((pj, gj), vj) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
            *vj = momentum * *vj + gj;
            *pj -= lr * *vj;
        }
    }
    Ok(())
}

/// Rescales `grads` so its global L2 norm is at most `max_norm`. Returns
/// the norm before clipping.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm.is_finite() && norm > max_norm && max_norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}
