//! A small, fixed-topology differentiable kernel: LSTM cell, tanh MLP,
//! Gaussian policy head and vector-valued critic head with hand-written
//! reverse-mode gradients, Adam, a flat checkpoint format and a
//! finite-difference gradient checker.
//!
//! All parameters of a network live in one flat `Vec<f64>` described by a
//! [`ParamLayout`]; gradients and optimizer moments use the same layout.

mod adam;
mod checkpoint;
mod gaussian;
mod gradcheck;
mod layers;
mod layout;
mod net;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gaussian::{
    affine_to_bounds, log_prob, log_prob_grad, sample_action, squash_to_bounds, GaussianPolicyStep,
    LOG_STD_MAX, LOG_STD_MIN,
};
pub use gradcheck::{central_difference, max_relative_error, GradCheck};
pub use layers::{dense_backward, dense_forward, lstm_backward, lstm_forward, Activation, LstmCache};
pub use layout::{ParamEntry, ParamLayout};
pub use net::{
    Architecture, Net, NetForward, NetSpec, PolicyNetwork, RecurrentState, ValueNetwork,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient at parameter {0}")]
    NonFiniteGradient(usize),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
