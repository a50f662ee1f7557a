//! Latent alignment policies for controllable imitation-learned agents.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: sparsemax projection, special functions, finite
//!   differences and the seeded RNG stream contract.
//! * [`dirichlet`]: gamma rejection-sampler reparameterization with shape
//!   augmentation, Dirichlet sampling, density, closed-form KL and the
//!   two-part (reparameterization + correction) gradient estimator.
//! * [`model`]: the unit embedder, scaled-dot attention, latent alignment
//!   fusion and hierarchical action predictor, with hand-written backward
//!   passes, training and checkpoints.
//! * [`control`]: selective attention sampling under a command, the
//!   execution gate and command outcome classification.
//! * [`arena`]: a small MOBA-like environment, a scripted expert, datasets
//!   and rollouts.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration
//! otherwise. Results are identical either way.

pub mod arena;
pub mod config;
pub mod control;
pub mod dirichlet;
pub mod error;
pub mod gradcheck;
pub mod model;
pub mod numerics;
pub mod par;

pub use error::{Error, Result};
