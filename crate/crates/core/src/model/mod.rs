//! The latent alignment policy network.
//!
//! Units are embedded by a shared two-layer perceptron, scored against the
//! main hero with scaled dot products, and fused into one context vector by
//! alignment weights `z` drawn either deterministically (sparsemax) or
//! from a Dirichlet whose concentrations come from the sparsemax. The
//! predictor maps `[context ‖ global info]` to the hierarchical action heads.

mod action;
pub(crate) mod checkpoint;
mod elbo;
mod features;
mod net;
mod optim;
mod params;
mod tensor;
mod train;

pub use action::{
    log_softmax, policy_loss, policy_loss_grad, softmax, ActionDistribution, ActionLabel, Level1,
    MOVE_DIRECTIONS,
};
pub use checkpoint::{checkpoint_load, checkpoint_load_matching, checkpoint_save, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use elbo::{elbo_loss, elbo_loss_and_grad, prior_alpha, ElboTerms};
pub use features::{UnitFeatureSet, MAIN_HERO};
pub use net::{
    attention_scores, backward_deterministic, embed_units, forward_deterministic, forward_stochastic,
    fuse, fuse_backward, masked_scores, predict, stochastic_alpha, AlignmentWeights, AttentionMode,
    deterministic_pass, DeterministicPass, Encoded,
};
pub use optim::{clip_global_norm, sgd_step, Velocity};
pub use params::{Gradients, Hyper, ParameterStore, TENSOR_NAMES};
pub use tensor::Tensor;
pub use train::{attention_stats, evaluate, train, AttentionStats, EpochRecord, HeadAccuracy, LabelledState, TrainConfig, TrainReport};
