//! Variational objective for the stochastic alignment model.
//!
//! `loss = mean_s nll(z_s) + kl_weight · KL[Dir(α) ‖ Dir(α⁰)]` with
//! `z_s ~ Dir(α)` drawn through the gamma rejection sampler. The predictor
//! and the direct fusion path are differentiated per draw; the encoder
//! receives `-(g_rep + g_cor)` through `α` plus the analytic KL gradient.

use super::action::{policy_loss_grad, ActionLabel};
use super::features::UnitFeatureSet;
use super::net::{
    attention_scores, encode, encode_backward_pub, fuse, fuse_backward, masked_scores, predict_backward,
    predict_cached, scores_backward_pub, stochastic_alpha,
};
use super::params::{Gradients, ParameterStore};
use super::tensor::Tensor;
use crate::dirichlet::{dirichlet_draw, dirichlet_kl, dirichlet_kl_grad, rsvi_sample_terms, union_floor, DirichletParams, KlDivergence};
use crate::numerics::{sparsemax_backward, RngStream};
use crate::{Error, Result};

/// Scalar pieces and the concentration-space gradient of one ELBO
/// evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ElboTerms {
    pub loss: f64,
    pub nll: f64,
    pub kl: f64,
    /// Coordinates raised by union flooring.
    pub raised: usize,
    /// Mean reparameterization part of `∇_α E[log p]`.
    pub g_rep: Vec<f64>,
    /// Mean correction part of `∇_α E[log p]`.
    pub g_cor: Vec<f64>,
    /// `∇_α KL`.
    pub kl_grad: Vec<f64>,
}

/// Prior concentrations from a frozen deterministic encoder:
/// `c_conc · sparsemax(t)` on the same state, floored.
pub fn prior_alpha(state: &UnitFeatureSet, prior: &ParameterStore, c_conc: f64, alpha_floor: f64) -> Result<DirichletParams> {
    let enc = encode(state, prior)?;
    let scores = masked_scores(&attention_scores(&enc.x), state, None);
    let p = crate::numerics::sparsemax(&scores)?;
    DirichletParams::new(p.values().iter().map(|v| c_conc * v).collect(), alpha_floor)
}

/// ELBO loss without gradients.
pub fn elbo_loss(
    state: &UnitFeatureSet,
    label: &ActionLabel,
    store: &ParameterStore,
    prior: &DirichletParams,
    rng: &mut RngStream,
) -> Result<ElboTerms> {
    let mut scratch = store.zero_grads();
    elbo_loss_and_grad(state, label, store, prior, rng, &mut scratch)
}

/// Evaluates the ELBO loss on one labelled state and accumulates its
/// gradient into `grads`.
pub fn elbo_loss_and_grad(
    state: &UnitFeatureSet,
    label: &ActionLabel,
    store: &ParameterStore,
    prior: &DirichletParams,
    rng: &mut RngStream,
    grads: &mut Gradients,
) -> Result<ElboTerms> {
    let h = &store.hyper;
    let enc = encode(state, store)?;
    let x = &enc.x;
    let scores = masked_scores(&attention_scores(x), state, None);
    let alpha = stochastic_alpha(&scores, store)?;
    if prior.len() != alpha.len() {
        return Err(Error::InvalidInput("prior dimension does not match the unit count".into()));
    }
    let (q, p0, raised) = union_floor(&alpha, prior, h.union_fill)?;
    let kl = match dirichlet_kl(&q, &p0)? {
        KlDivergence::Finite(v) => v,
        KlDivergence::Infinite { uncovered } => {
            return Err(Error::Training(format!("infinite KL, uncovered units {uncovered:?}")))
        }
    };
    let kl_grad = dirichlet_kl_grad(&q, &p0)?.unwrap_or_else(|| vec![0.0; q.len()]);

    let draws = h.n_avg;
    let inv = 1.0 / draws as f64;
    let mut dx = Tensor::zeros(x.shape());
    let mut g_rep = vec![0.0; q.len()];
    let mut g_cor = vec![0.0; q.len()];
    let mut nll_sum = 0.0;
    for _ in 0..draws {
        let draw = dirichlet_draw(&q, h.shape_aug, rng)?;
        let c = fuse(x, &draw.z)?;
        let (dist, cache) = predict_cached(&c, &state.global, x, store);
        let (nll, dlogits) = policy_loss_grad(&dist, label, h.lambda_int)?;
        nll_sum += nll;
        let mut g_draw = store.zero_grads();
        let mut dx_draw = Tensor::zeros(x.shape());
        let dc = predict_backward(&cache, x, &dlogits, store, &mut g_draw, &mut dx_draw);
        let (dx_fuse, dz) = fuse_backward(x, &draw.z, &dc);
        let grad_ll: Vec<f64> = dz.iter().map(|v| -v).collect();
        let (rep, cor) = rsvi_sample_terms(&q, &draw, -nll, &grad_ll);
        for i in 0..q.len() {
            g_rep[i] += rep[i] * inv;
            g_cor[i] += cor[i] * inv;
        }
        grads.add_scaled(&g_draw, inv);
        dx.add_scaled(&dx_draw, inv);
        dx.add_scaled(&dx_fuse, inv);
    }

    // dLoss/dα = -(g_rep + g_cor) + kl_weight ∇KL, routed only through
    // coordinates whose concentration came from the sparsemax.
    let mut dp = vec![0.0; q.len()];
    for &i in alpha.support() {
        let dalpha = -(g_rep[i] + g_cor[i]) + h.kl_weight * kl_grad[i];
        dp[i] = h.c_conc * dalpha;
    }
    let dt = sparsemax_backward(&scores, &dp)?;
    scores_backward_pub(x, &dt, &mut dx);
    encode_backward_pub(state, &enc, &dx, store, grads);

    let nll = nll_sum * inv;
    Ok(ElboTerms { loss: nll + h.kl_weight * kl, nll, kl, raised, g_rep, g_cor, kl_grad })
}
