//! Small reverse-mode differentiable multilayer perceptrons.
//!
//! Every learned function in the crate (policy mean, discriminator, intention
//! posterior) is an [`MlpNet`]. Parameters live in one flat vector so that the
//! optimizer, the finite-difference checker and the text persistence format
//! can all treat a network as a plain slice of reals.

mod adam;
mod gradcheck;
mod mlp;
mod persist;

pub use adam::AdamState;
pub use gradcheck::{
    grad_check, max_relative_error, numeric_gradient, relative_error, ConstantLoss, CrossEntropy,
    ScalarLoss, SquaredLoss,
};
pub use mlp::{Activation, GradBuffer, MlpNet, OutputHead, Tape};
pub use persist::{load_net, parse_net, render_net, save_net, NET_MAGIC};

use thiserror::Error;

/// Errors raised by network evaluation, training and persistence.
#[derive(Debug, Error)]
pub enum NetError {
    #[error("input shape error: expected {expected} values, got {got}")]
    InputShape { expected: usize, got: usize },
    #[error("backward called without a cached forward pass for this network")]
    NoForward,
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("training diverged: non-finite gradient at parameter {index}")]
    Diverged { index: usize },
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
