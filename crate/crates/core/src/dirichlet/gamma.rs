//! Marsaglia-Tsang style rejection sampler viewed as a reparameterization.
//!
//! For shape `a >= 1` the proposal is `h(ε, a) = (a - 1/3)(1 + ε/√(9a-3))³`
//! with `ε ~ N(0, 1)`. Accepted `ε` follow `s(ε) q(h)/r(h)`, where `q` is the
//! Γ(a, 1) density and `r` the density of `h(ε, a)` under `s`.

use serde::{Deserialize, Serialize};

use crate::numerics::{digamma, RngStream};
use crate::{Error, Result};

/// One accepted gamma draw and everything needed to differentiate it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaDraw {
    /// Final draw `h(ε, α+B) · exp(booster_logs)`.
    pub value: f64,
    /// Accepted standard-normal noise.
    pub epsilon: f64,
    /// Shape used by the rejection sampler, `α + B`.
    pub alpha_aug: f64,
    /// `Σ_i log(u_i) / (α + i - 1)` over the `B` boosters.
    pub booster_logs: f64,
    /// `d booster_logs / dα = -Σ_i log(u_i) / (α + i - 1)²`.
    pub booster_dalpha: f64,
    /// Proposals rejected before acceptance.
    pub rejections: u32,
}

impl GammaDraw {
    /// `d value / dα` with `ε` and the boosters held fixed.
    pub fn dvalue_dalpha(&self) -> f64 {
        let part = reparam_partials(self.epsilon, self.alpha_aug);
        self.booster_logs.exp() * part.dh_dalpha + self.value * self.booster_dalpha
    }
}

/// `h(ε, α)` and its partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReparamPartials {
    pub h: f64,
    pub dh_deps: f64,
    pub dh_dalpha: f64,
}

/// `(α - 1/3)(1 + ε/√(9α-3))³`, or `None` when `ε` falls where the cube is
/// non-positive (a rejected proposal).
pub fn gamma_reparam(epsilon: f64, alpha: f64) -> Result<Option<f64>> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "gamma reparameterization needs alpha >= 1, got {alpha}; shape-augment first"
        )));
    }
    let v = 1.0 + epsilon / (9.0 * alpha - 3.0).sqrt();
    if v <= 0.0 {
        return Ok(None);
    }
    Ok(Some((alpha - 1.0 / 3.0) * v * v * v))
}

/// Analytic partials of `h`. The caller is responsible for `α ≥ 1` and an
/// in-region `ε`.
pub fn reparam_partials(epsilon: f64, alpha: f64) -> ReparamPartials {
    let d = alpha - 1.0 / 3.0;
    let s = (9.0 * alpha - 3.0).sqrt();
    let v = 1.0 + epsilon / s;
    let dv_dalpha = -4.5 * epsilon / (s * s * s);
    ReparamPartials {
        h: d * v * v * v,
        dh_deps: 3.0 * d * v * v / s,
        dh_dalpha: v * v * v + 3.0 * d * v * v * dv_dalpha,
    }
}

/// `∂/∂α log[q(h(ε,α); α) / r(h(ε,α); α)]` with `ε` fixed.
///
/// `r(h) = s(ε) / |∂h/∂ε|`, so the ratio's α-dependence is
/// `log q(h; α) + log ∂h/∂ε`.
pub fn log_accept_ratio_dalpha(epsilon: f64, alpha: f64) -> f64 {
    let d = alpha - 1.0 / 3.0;
    let s = (9.0 * alpha - 3.0).sqrt();
    let v = 1.0 + epsilon / s;
    let dv_dalpha = -4.5 * epsilon / (s * s * s);
    let p = reparam_partials(epsilon, alpha);
    let dlogq = p.h.ln() + ((alpha - 1.0) / p.h - 1.0) * p.dh_dalpha - digamma(alpha);
    let dlog_jac = 0.5 / d + 2.0 * dv_dalpha / v;
    dlogq + dlog_jac
}

/// Draws from Γ(α, 1) by rejection-sampling Γ(α + B, 1) and multiplying by
/// `∏_{i=1..B} u_i^{1/(α+i-1)}`.
pub fn gamma_sample(alpha: f64, boost: u32, rng: &mut RngStream) -> Result<GammaDraw> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("gamma shape must be > 0, got {alpha}")));
    }
    let a = alpha + boost as f64;
    if a < 1.0 {
        return Err(Error::Domain(format!(
            "alpha + B = {a} < 1; increase the shape augmentation"
        )));
    }
    let d = a - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    let mut rejections = 0u32;
    let (epsilon, base) = loop {
        let eps = rng.normal();
        let v = 1.0 + c * eps;
        if v <= 0.0 {
            rejections += 1;
            continue;
        }
        let v3 = v * v * v;
        let u = rng.uniform();
        let e2 = eps * eps;
        // Squeeze first; the log test below is the exact criterion.
        if u < 1.0 - 0.0331 * e2 * e2 || u.ln() < 0.5 * e2 + d * (1.0 - v3 + v3.ln()) {
            break (eps, d * v3);
        }
        rejections += 1;
    };
    let log_uniforms: Vec<f64> = (0..boost).map(|_| rng.uniform().ln()).collect();
    Ok(assemble(alpha, epsilon, base, &log_uniforms, rejections))
}

fn assemble(alpha: f64, epsilon: f64, base: f64, log_uniforms: &[f64], rejections: u32) -> GammaDraw {
    let mut booster_logs = 0.0;
    let mut booster_dalpha = 0.0;
    for (i, lu) in log_uniforms.iter().enumerate() {
        let shape = alpha + i as f64;
        booster_logs += lu / shape;
        booster_dalpha -= lu / (shape * shape);
    }
    GammaDraw {
        value: base * booster_logs.exp(),
        epsilon,
        alpha_aug: alpha + log_uniforms.len() as f64,
        booster_logs,
        booster_dalpha,
        rejections,
    }
}
