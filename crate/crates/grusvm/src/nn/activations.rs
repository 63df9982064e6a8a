//! Scalar and vector activations with their analytic derivatives.

use crate::error::{Error, Result};

/// Probability floor used when taking logarithms of predicted probabilities.
pub const PROB_FLOOR: f64 = 1e-12;

/// Logistic sigmoid, `1 / (1 + e^{-y})`.
///
/// Evaluated branch-wise so neither exponential overflows for large `|y|`.
pub fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the sigmoid expressed through its output: `s·(1−s)`.
pub fn sigmoid_deriv_from_output(s: f64) -> f64 {
    s * (1.0 - s)
}

/// Derivative of tanh expressed through its output: `1 − t²`.
pub fn tanh_deriv_from_output(t: f64) -> f64 {
    1.0 - t * t
}

/// Softmax with max-subtraction stabilization. Entries are positive and sum to 1.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    assert!(!scores.is_empty(), "softmax of empty vector");
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Negative log likelihood of `true_class` under `probs`,
/// with probabilities floored at [`PROB_FLOOR`].
pub fn cross_entropy(probs: &[f64], true_class: usize) -> Result<f64> {
    if true_class >= probs.len() {
        return Err(Error::Invalid(format!(
            "class index {true_class} out of range for {} probabilities",
            probs.len()
        )));
    }
    Ok(-probs[true_class].max(PROB_FLOOR).ln())
}
