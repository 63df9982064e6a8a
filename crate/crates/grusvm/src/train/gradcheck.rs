//! Full-network gradient verification.
//!
//! The hand-derived backward pass (backpropagation through time plus the
//! head losses) is compared against central finite differences of the
//! scalar batch loss, parameter by parameter, over seeded random trials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gru::GruParams;
use crate::heads::{HeadKind, HeadParams};
use crate::nn::Mode;

/// Step used for central differences.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    pub cell_size: usize,
    pub seq_len: usize,
    pub input_width: usize,
    pub trials: usize,
    pub seed: u64,
    pub head: HeadKind,
    pub svm_c: f64,
}

impl GradCheckConfig {
    pub fn new(head: HeadKind) -> Self {
        GradCheckConfig {
            cell_size: 8,
            seq_len: 5,
            input_width: 10,
            trials: 8,
            seed: 1,
            head,
            svm_c: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("at least one trial required".into()));
        }
        if self.cell_size == 0 || self.cell_size > 16 {
            return Err(Error::Config(format!(
                "cell_size must lie in 1..=16 for tractable finite differences, got {}",
                self.cell_size
            )));
        }
        if self.seq_len == 0 || self.seq_len > 8 {
            return Err(Error::Config(format!(
                "seq_len must lie in 1..=8, got {}",
                self.seq_len
            )));
        }
        if self.input_width == 0 {
            return Err(Error::Config("input_width must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub trial_errors: Vec<f64>,
}

/// Relative error with an absolute fallback when both values are tiny.
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-6 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Enumerates every trainable tensor as mutable flat storage.
fn tensors<'a>(
    gru: &'a mut GruParams,
    head: &'a mut HeadParams,
) -> [(&'static str, &'a mut [f64]); 8] {
    [
        ("w_update", gru.w_update.data_mut()),
        ("w_reset", gru.w_reset.data_mut()),
        ("w_cand", gru.w_cand.data_mut()),
        ("b_update", gru.b_update.as_mut_slice()),
        ("b_reset", gru.b_reset.as_mut_slice()),
        ("b_cand", gru.b_cand.as_mut_slice()),
        ("head_w", head.weights.data_mut()),
        ("head_b", head.bias.as_mut_slice()),
    ]
}

/// Runs `config.trials` seeded random trials and reports the worst relative
/// error between analytic and finite-difference gradients across every
/// parameter of the network.
#[allow(clippy::needless_range_loop)] // slot/element indices address two structures
pub fn gradient_check(config: &GradCheckConfig) -> Result<GradCheckReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trial_errors = Vec::with_capacity(config.trials);

    for _ in 0..config.trials {
        let mut gru_params = GruParams::init(config.cell_size, config.input_width, &mut rng);
        let mut head_params = HeadParams::init(config.cell_size, config.svm_c, &mut rng);

        // small batch of one-hot sequences, one step per feature group
        let batch_size = 2;
        let batch: Vec<Vec<Vec<f64>>> = (0..batch_size)
            .map(|_| {
                (0..config.seq_len)
                    .map(|_| {
                        let hot = rng.gen_range(0..config.input_width);
                        let mut g = vec![0.0; config.input_width];
                        g[hot] = 1.0;
                        g
                    })
                    .collect()
            })
            .collect();
        let labels: Vec<u8> = (0..batch_size).map(|_| rng.gen_range(0..2) as u8).collect();

        let analytic = analytic_grads(&batch, &labels, &gru_params, &head_params, config.head)?;

        let mut worst: f64 = 0.0;
        for slot in 0..analytic.len() {
            for i in 0..analytic[slot].len() {
                let original = tensors(&mut gru_params, &mut head_params)[slot].1[i];
                tensors(&mut gru_params, &mut head_params)[slot].1[i] = original + FD_STEP;
                let plus =
                    super::batch_loss(&batch, &labels, &gru_params, &head_params, config.head)?;
                tensors(&mut gru_params, &mut head_params)[slot].1[i] = original - FD_STEP;
                let minus =
                    super::batch_loss(&batch, &labels, &gru_params, &head_params, config.head)?;
                tensors(&mut gru_params, &mut head_params)[slot].1[i] = original;
                let numeric = (plus - minus) / (2.0 * FD_STEP);
                worst = worst.max(relative_error(analytic[slot][i], numeric));
            }
        }
        trial_errors.push(worst);
    }

    Ok(GradCheckReport {
        max_rel_error: trial_errors.iter().cloned().fold(0.0, f64::max),
        trial_errors,
    })
}

/// Analytic gradients of the batch loss for every tensor, flattened in
/// optimizer-slot order.
fn analytic_grads(
    batch: &[Vec<Vec<f64>>],
    labels: &[u8],
    gru_params: &GruParams,
    head_params: &HeadParams,
    kind: HeadKind,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pass = super::batch_pass(
        batch,
        labels,
        gru_params,
        head_params,
        kind,
        1.0,
        Mode::Eval,
        &mut rng,
    )?;
    Ok(vec![
        pass.gru_grads.w_update.data().to_vec(),
        pass.gru_grads.w_reset.data().to_vec(),
        pass.gru_grads.w_cand.data().to_vec(),
        pass.gru_grads.b_update.clone(),
        pass.gru_grads.b_reset.clone(),
        pass.gru_grads.b_cand.clone(),
        pass.head_dw.data().to_vec(),
        pass.head_db.clone(),
    ])
}
