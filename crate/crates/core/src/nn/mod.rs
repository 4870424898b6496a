//! Small dense networks with exact reverse-mode gradients, the squashed
//! Gaussian policy head and an Adam optimizer.

mod adam;
pub mod gradcheck;
mod matrix;
mod network;
pub mod policy;

pub use adam::{adam_update, OptimizerState};
pub use gradcheck::{finite_difference_check, GradCheckReport};
pub use matrix::Matrix;
pub use network::{Activation, ForwardCache, GradientBundle, Network};
pub use policy::{sample_squashed_action, GaussianPolicyOutput, SquashedSample};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
