//! Stochastic-attention kernel: the gamma rejection sampler used as a
//! reparameterization, shape augmentation, Dirichlet sampling and density,
//! the closed-form Dirichlet KL, and the reparameterization + correction
//! gradient estimator.

mod density;
mod gamma;
mod params;
mod rsvi;
mod sample;

pub use density::{dirichlet_kl, dirichlet_kl_grad, dirichlet_log_pdf, KlDivergence};
pub use gamma::{
    gamma_reparam, gamma_sample, log_accept_ratio_dalpha, reparam_partials, GammaDraw,
    ReparamPartials,
};
pub use params::{union_floor, DirichletParams, DEFAULT_ALPHA_FLOOR, DEFAULT_SHAPE_AUGMENTATION};
pub use rsvi::{rsvi_gradient, rsvi_sample_terms, RsviGradient};
pub use sample::{dirichlet_draw, dirichlet_sample, DirichletDraw, DirichletSample};
