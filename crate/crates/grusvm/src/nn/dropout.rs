//! Inverted dropout.
//!
//! The rate configured for training is a KEEP probability: with
//! `keep_prob = 0.85`, each entry survives with probability 0.85 and
//! survivors are scaled by `1/0.85` so the expected activation is unchanged.
//! Evaluation mode is the exact identity.

use rand::Rng;

use crate::error::{Error, Result};

/// Whether stochastic regularization is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Samples a dropout mask of `len` entries. Each entry is either `0` or
/// `1/keep_prob`; applying the mask elementwise performs inverted dropout.
/// In eval mode the mask is all ones.
pub fn sample_mask<R: Rng>(len: usize, keep_prob: f64, mode: Mode, rng: &mut R) -> Result<Vec<f64>> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::Invalid(format!(
            "keep probability must lie in (0, 1], got {keep_prob}"
        )));
    }
    if mode == Mode::Eval || keep_prob == 1.0 {
        return Ok(vec![1.0; len]);
    }
    let scale = 1.0 / keep_prob;
    Ok((0..len)
        .map(|_| {
            if rng.gen::<f64>() < keep_prob {
                scale
            } else {
                0.0
            }
        })
        .collect())
}

/// Applies inverted dropout to `v`, sampling a fresh mask.
pub fn dropout<R: Rng>(v: &[f64], keep_prob: f64, mode: Mode, rng: &mut R) -> Result<Vec<f64>> {
    let mask = sample_mask(v.len(), keep_prob, mode, rng)?;
    Ok(v.iter().zip(&mask).map(|(x, m)| x * m).collect())
}
