//! Gated recurrent cell: forward over a sample's feature-group sequence and
//! exact backpropagation through time.
//!
//! Per step, with `[·,·]` concatenation and `∘` the elementwise product:
//!
//! ```text
//! z_t = sigmoid(W_z · [h_{t−1}, x_t] + b_z)        update gate
//! r_t = sigmoid(W_r · [h_{t−1}, x_t] + b_r)        reset gate
//! c_t = tanh(W_c · [r_t ∘ h_{t−1}, x_t] + b_c)     candidate state
//! h_t = (1 − z_t) ∘ h_{t−1} + z_t ∘ c_t
//! ```
//!
//! Biases generalize the bias-free formulation: zero biases recover it
//! exactly. The backward pass is hand-derived; `train::gradient_check`
//! verifies it against central finite differences.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{
    sample_mask, sigmoid, sigmoid_deriv_from_output, tanh_deriv_from_output, Matrix, Mode,
};

/// Half-width of the uniform interval used for weight initialization.
pub const INIT_SPAN: f64 = 0.1;

/// Gate weight matrices of shape `cell_size × (cell_size + input_width)`
/// and per-gate bias vectors of length `cell_size`.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams {
    pub w_update: Matrix,
    pub w_reset: Matrix,
    pub w_cand: Matrix,
    pub b_update: Vec<f64>,
    pub b_reset: Vec<f64>,
    pub b_cand: Vec<f64>,
}

impl GruParams {
    /// All-zero parameters (useful as a gradient accumulator).
    pub fn zeros(cell_size: usize, input_width: usize) -> Self {
        let concat = cell_size + input_width;
        GruParams {
            w_update: Matrix::zeros(cell_size, concat),
            w_reset: Matrix::zeros(cell_size, concat),
            w_cand: Matrix::zeros(cell_size, concat),
            b_update: vec![0.0; cell_size],
            b_reset: vec![0.0; cell_size],
            b_cand: vec![0.0; cell_size],
        }
    }

    /// Seeded uniform initialization in `[−INIT_SPAN, INIT_SPAN]`; small and
    /// symmetric so the gates start unsaturated.
    pub fn init<R: Rng>(cell_size: usize, input_width: usize, rng: &mut R) -> Self {
        let concat = cell_size + input_width;
        let mut uniform = |_r: usize, _c: usize| rng.gen_range(-INIT_SPAN..=INIT_SPAN);
        let w_update = Matrix::from_fn(cell_size, concat, &mut uniform);
        let w_reset = Matrix::from_fn(cell_size, concat, &mut uniform);
        let w_cand = Matrix::from_fn(cell_size, concat, &mut uniform);
        let mut bias = || {
            (0..cell_size)
                .map(|_| rng.gen_range(-INIT_SPAN..=INIT_SPAN))
                .collect::<Vec<f64>>()
        };
        GruParams {
            w_update,
            w_reset,
            w_cand,
            b_update: bias(),
            b_reset: bias(),
            b_cand: bias(),
        }
    }

    pub fn cell_size(&self) -> usize {
        self.w_update.rows()
    }

    pub fn input_width(&self) -> usize {
        self.w_update.cols() - self.w_update.rows()
    }

    fn validate(&self) -> Result<()> {
        let (rows, cols) = (self.w_update.rows(), self.w_update.cols());
        if cols <= rows {
            return Err(Error::Shape(format!(
                "gate matrices must be cell × (cell + input), got {rows} × {cols}"
            )));
        }
        for (name, m) in [("reset", &self.w_reset), ("candidate", &self.w_cand)] {
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::Shape(format!(
                    "{name} weights are {} × {}, update weights are {rows} × {cols}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        for (name, b) in [
            ("update", &self.b_update),
            ("reset", &self.b_reset),
            ("candidate", &self.b_cand),
        ] {
            if b.len() != rows {
                return Err(Error::Shape(format!(
                    "{name} bias has {} entries, cell size is {rows}",
                    b.len()
                )));
            }
        }
        Ok(())
    }
}

/// Values cached by one forward step, everything the backward pass needs.
#[derive(Clone, Debug)]
pub struct GruStep {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    /// Update gate output, entries in (0, 1).
    pub update: Vec<f64>,
    /// Reset gate output, entries in (0, 1).
    pub reset: Vec<f64>,
    /// Candidate state, entries in (−1, 1).
    pub cand: Vec<f64>,
    pub h: Vec<f64>,
}

/// Full forward trace of one sequence, plus the dropout mask applied to the
/// final hidden state.
#[derive(Clone, Debug)]
pub struct GruTrace {
    pub steps: Vec<GruStep>,
    pub dropout_mask: Vec<f64>,
    /// Final hidden state after dropout; the head consumes this.
    pub output: Vec<f64>,
}

/// Parameter gradients accumulated over all time steps, plus per-step input
/// gradients.
#[derive(Clone, Debug)]
pub struct GruGrads {
    pub w_update: Matrix,
    pub w_reset: Matrix,
    pub w_cand: Matrix,
    pub b_update: Vec<f64>,
    pub b_reset: Vec<f64>,
    pub b_cand: Vec<f64>,
    pub inputs: Vec<Vec<f64>>,
}

impl GruGrads {
    fn zeros(params: &GruParams) -> Self {
        GruGrads {
            w_update: Matrix::zeros(params.w_update.rows(), params.w_update.cols()),
            w_reset: Matrix::zeros(params.w_reset.rows(), params.w_reset.cols()),
            w_cand: Matrix::zeros(params.w_cand.rows(), params.w_cand.cols()),
            b_update: vec![0.0; params.cell_size()],
            b_reset: vec![0.0; params.cell_size()],
            b_cand: vec![0.0; params.cell_size()],
            inputs: Vec::new(),
        }
    }

    /// Accumulates `other` into `self` (fixed order, used for batch reduction).
    pub fn accumulate(&mut self, other: &GruGrads) {
        self.w_update.add_scaled(&other.w_update, 1.0);
        self.w_reset.add_scaled(&other.w_reset, 1.0);
        self.w_cand.add_scaled(&other.w_cand, 1.0);
        for (a, b) in self.b_update.iter_mut().zip(&other.b_update) {
            *a += b;
        }
        for (a, b) in self.b_reset.iter_mut().zip(&other.b_reset) {
            *a += b;
        }
        for (a, b) in self.b_cand.iter_mut().zip(&other.b_cand) {
            *a += b;
        }
    }
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

/// One cell step from `h_prev` on input `x`.
pub fn cell_forward(x: &[f64], h_prev: &[f64], params: &GruParams) -> Result<(Vec<f64>, GruStep)> {
    params.validate()?;
    let cell = params.cell_size();
    let input = params.input_width();
    if x.len() != input {
        return Err(Error::Shape(format!(
            "input has {} entries, expected {input}",
            x.len()
        )));
    }
    if h_prev.len() != cell {
        return Err(Error::Shape(format!(
            "hidden state has {} entries, expected {cell}",
            h_prev.len()
        )));
    }

    let joined = concat(h_prev, x);
    let mut update = params.w_update.matvec(&joined);
    for (u, b) in update.iter_mut().zip(&params.b_update) {
        *u = sigmoid(*u + b);
    }
    let mut reset = params.w_reset.matvec(&joined);
    for (r, b) in reset.iter_mut().zip(&params.b_reset) {
        *r = sigmoid(*r + b);
    }

    let gated_prev: Vec<f64> = reset.iter().zip(h_prev).map(|(r, h)| r * h).collect();
    let mut cand = params.w_cand.matvec(&concat(&gated_prev, x));
    for (c, b) in cand.iter_mut().zip(&params.b_cand) {
        *c = (*c + b).tanh();
    }

    let h: Vec<f64> = update
        .iter()
        .zip(&cand)
        .zip(h_prev)
        .map(|((z, c), hp)| (1.0 - z) * hp + z * c)
        .collect();

    let step = GruStep {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        update,
        reset,
        cand,
        h: h.clone(),
    };
    Ok((h, step))
}

/// Runs the cell over `groups` in order from a zero initial state, then
/// applies dropout to the final hidden state (train mode only). Every group
/// must already be padded to the parameter input width.
pub fn sequence_forward<R: Rng>(
    groups: &[Vec<f64>],
    params: &GruParams,
    keep_prob: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Vec<f64>, GruTrace)> {
    if groups.is_empty() {
        return Err(Error::Invalid("empty input sequence".into()));
    }
    let mut h = vec![0.0; params.cell_size()];
    let mut steps = Vec::with_capacity(groups.len());
    for x in groups {
        let (next, step) = cell_forward(x, &h, params)?;
        steps.push(step);
        h = next;
    }
    let dropout_mask = sample_mask(h.len(), keep_prob, mode, rng)?;
    let output: Vec<f64> = h.iter().zip(&dropout_mask).map(|(v, m)| v * m).collect();
    let trace = GruTrace {
        steps,
        dropout_mask,
        output: output.clone(),
    };
    Ok((output, trace))
}

/// Exact backpropagation through time. `d_output` is the loss gradient with
/// respect to the trace's `output` (the dropped-out final hidden state).
pub fn sequence_backward(
    trace: &GruTrace,
    d_output: &[f64],
    params: &GruParams,
) -> Result<GruGrads> {
    params.validate()?;
    let cell = params.cell_size();
    let input = params.input_width();
    if d_output.len() != cell {
        return Err(Error::Shape(format!(
            "upstream gradient has {} entries, cell size is {cell}",
            d_output.len()
        )));
    }
    if trace.steps.is_empty() {
        return Err(Error::Invalid("empty trace".into()));
    }
    for step in &trace.steps {
        if step.x.len() != input || step.h_prev.len() != cell {
            return Err(Error::Shape(
                "trace was produced with different parameter shapes".into(),
            ));
        }
    }

    let mut grads = GruGrads::zeros(params);
    grads.inputs = vec![vec![0.0; input]; trace.steps.len()];

    // Dropout backward: the mask entries are the local derivatives.
    let mut dh: Vec<f64> = d_output
        .iter()
        .zip(&trace.dropout_mask)
        .map(|(g, m)| g * m)
        .collect();

    for (t, step) in trace.steps.iter().enumerate().rev() {
        // h_t = (1 − z) ∘ h_prev + z ∘ c
        let mut dh_prev: Vec<f64> = dh
            .iter()
            .zip(&step.update)
            .zip(&step.h_prev)
            .map(|((g, z), _)| g * (1.0 - z))
            .collect();
        let d_update: Vec<f64> = dh
            .iter()
            .zip(&step.cand)
            .zip(&step.h_prev)
            .map(|((g, c), hp)| g * (c - hp))
            .collect();
        let d_cand: Vec<f64> = dh.iter().zip(&step.update).map(|(g, z)| g * z).collect();

        // Candidate pre-activation and its inputs [r ∘ h_prev, x].
        let da_cand: Vec<f64> = d_cand
            .iter()
            .zip(&step.cand)
            .map(|(d, c)| d * tanh_deriv_from_output(*c))
            .collect();
        let gated_prev: Vec<f64> = step
            .reset
            .iter()
            .zip(&step.h_prev)
            .map(|(r, h)| r * h)
            .collect();
        grads
            .w_cand
            .add_outer(&da_cand, &concat(&gated_prev, &step.x));
        for (b, d) in grads.b_cand.iter_mut().zip(&da_cand) {
            *b += d;
        }
        let d_joined_cand = params.w_cand.matvec_t(&da_cand);
        let (d_gated_prev, dx_cand) = d_joined_cand.split_at(cell);

        let d_reset: Vec<f64> = d_gated_prev
            .iter()
            .zip(&step.h_prev)
            .map(|(d, h)| d * h)
            .collect();
        for ((acc, d), r) in dh_prev.iter_mut().zip(d_gated_prev).zip(&step.reset) {
            *acc += d * r;
        }

        // Both sigmoid gates read the same concatenation [h_prev, x].
        let da_update: Vec<f64> = d_update
            .iter()
            .zip(&step.update)
            .map(|(d, z)| d * sigmoid_deriv_from_output(*z))
            .collect();
        let da_reset: Vec<f64> = d_reset
            .iter()
            .zip(&step.reset)
            .map(|(d, r)| d * sigmoid_deriv_from_output(*r))
            .collect();
        let joined = concat(&step.h_prev, &step.x);
        grads.w_update.add_outer(&da_update, &joined);
        grads.w_reset.add_outer(&da_reset, &joined);
        for (b, d) in grads.b_update.iter_mut().zip(&da_update) {
            *b += d;
        }
        for (b, d) in grads.b_reset.iter_mut().zip(&da_reset) {
            *b += d;
        }

        let d_joined_update = params.w_update.matvec_t(&da_update);
        let d_joined_reset = params.w_reset.matvec_t(&da_reset);
        for i in 0..cell {
            dh_prev[i] += d_joined_update[i] + d_joined_reset[i];
        }
        let dx = &mut grads.inputs[t];
        for i in 0..input {
            dx[i] = dx_cand[i] + d_joined_update[cell + i] + d_joined_reset[cell + i];
        }

        dh = dh_prev;
    }

    Ok(grads)
}
