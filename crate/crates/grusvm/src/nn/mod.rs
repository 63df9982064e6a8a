//! Minimal dense numerical kernel: matrices, activations, dropout, and the
//! Adam optimizer, each with analytic derivatives where training needs them.

mod activations;
mod adam;
mod dropout;
mod linalg;

pub use activations::{
    cross_entropy, sigmoid, sigmoid_deriv_from_output, softmax, tanh_deriv_from_output, PROB_FLOOR,
};
pub use adam::{AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON};
pub use dropout::{dropout, sample_mask, Mode};
pub use linalg::Matrix;
