//! Deterministic numerical primitives.

mod diff;
mod rng;
mod simplex;
mod special;

pub use diff::{finite_diff_grad, DEFAULT_FD_STEP};
pub use rng::{stream_id, RngStream};
pub use simplex::{sparsemax, sparsemax_backward, SimplexVector, EXCLUDED, SIMPLEX_TOL};
pub use special::{digamma, ln_gamma, special_functions, trigamma, SpecialValues};
