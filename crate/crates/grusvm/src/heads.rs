//! Interchangeable output layers: an L2-SVM head trained on a squared hinge
//! objective, and a Softmax head trained on cross-entropy.
//!
//! Both score a hidden state with an affine map `scores = W·h + b` and
//! predict by argmax over the raw scores. The SVM targets are one-vs-rest:
//! `y' = +1` for the true class unit and `−1` for the other. The data term
//! of each loss is averaged over the batch; the SVM regularizer `½‖W‖₂²`
//! is added once and covers the head weights only.

use crate::error::{Error, Result};
use crate::nn::{cross_entropy, softmax, Matrix};

pub const NUM_CLASSES: usize = 2;

/// Which output layer a model uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadKind {
    Svm,
    Softmax,
}

impl HeadKind {
    pub fn name(self) -> &'static str {
        match self {
            HeadKind::Svm => "svm",
            HeadKind::Softmax => "softmax",
        }
    }
}

/// Output-layer parameters: `NUM_CLASSES × cell_size` weights, per-class
/// bias, and the SVM penalty C (unused by the Softmax head).
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub penalty: f64,
}

impl HeadParams {
    pub fn zeros(cell_size: usize, penalty: f64) -> Self {
        HeadParams {
            weights: Matrix::zeros(NUM_CLASSES, cell_size),
            bias: vec![0.0; NUM_CLASSES],
            penalty,
        }
    }

    pub fn init<R: rand::Rng>(cell_size: usize, penalty: f64, rng: &mut R) -> Self {
        let span = crate::gru::INIT_SPAN;
        let weights = Matrix::from_fn(NUM_CLASSES, cell_size, |_, _| rng.gen_range(-span..=span));
        let bias = (0..NUM_CLASSES).map(|_| rng.gen_range(-span..=span)).collect();
        HeadParams {
            weights,
            bias,
            penalty,
        }
    }

    pub fn cell_size(&self) -> usize {
        self.weights.cols()
    }
}

/// Raw affine scores for one sample, tagged with the head that produced them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassScores {
    pub scores: [f64; NUM_CLASSES],
    pub kind: HeadKind,
}

/// `scores = W·h + b`.
pub fn head_scores(h: &[f64], params: &HeadParams, kind: HeadKind) -> Result<ClassScores> {
    if h.len() != params.cell_size() {
        return Err(Error::Shape(format!(
            "hidden state has {} entries, head expects {}",
            h.len(),
            params.cell_size()
        )));
    }
    let raw = params.weights.matvec(h);
    Ok(ClassScores {
        scores: [raw[0] + params.bias[0], raw[1] + params.bias[1]],
        kind,
    })
}

/// Index of the maximum raw score; ties break toward the lower index.
pub fn predict(scores: &ClassScores) -> usize {
    if scores.scores[1] > scores.scores[0] {
        1
    } else {
        0
    }
}

fn check_labels(scores: &[ClassScores], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} score vectors but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::Invalid("empty batch".into()));
    }
    if let Some(bad) = labels.iter().find(|l| **l > 1) {
        return Err(Error::Invalid(format!(
            "label {bad} outside {{0, 1}}"
        )));
    }
    Ok(())
}

/// One-vs-rest target: +1 for the true class unit, −1 for the other.
fn svm_target(label: u8, class: usize) -> f64 {
    if usize::from(label) == class {
        1.0
    } else {
        -1.0
    }
}

/// Squared-hinge SVM objective over a batch:
///
/// ```text
/// loss = ½‖W‖₂² + C · mean_i Σ_k max(0, 1 − y'ᵢₖ·sᵢₖ)²
/// ```
///
/// Returns the loss, the exact gradient with respect to every score, and the
/// regularizer gradient with respect to the head weights (`W` itself). The
/// squared hinge is continuously differentiable, including at the margin.
pub fn l2_svm_loss(
    scores: &[ClassScores],
    labels: &[u8],
    params: &HeadParams,
) -> Result<(f64, Vec<[f64; NUM_CLASSES]>, Matrix)> {
    check_labels(scores, labels)?;
    let batch = scores.len() as f64;
    let c = params.penalty;
    let mut data_term = 0.0;
    let mut dscores = Vec::with_capacity(scores.len());
    for (s, label) in scores.iter().zip(labels) {
        let mut ds = [0.0; NUM_CLASSES];
        for (k, d) in ds.iter_mut().enumerate() {
            let y = svm_target(*label, k);
            let hinge = (1.0 - y * s.scores[k]).max(0.0);
            data_term += hinge * hinge;
            *d = -2.0 * c * y * hinge / batch;
        }
        dscores.push(ds);
    }
    let loss = 0.5 * params.weights.frobenius_sq() + c * data_term / batch;
    Ok((loss, dscores, params.weights.clone()))
}

/// Plain-hinge SVM objective, kept as a reference value only (the hinge is
/// not differentiable at the margin, so training always uses [`l2_svm_loss`]).
/// The regularizer is `½‖w‖₁²` — the square of the entrywise L1 norm — which
/// is an unusual expression, but it is computed here exactly as written.
pub fn l1_svm_loss(scores: &[ClassScores], labels: &[u8], params: &HeadParams) -> Result<f64> {
    check_labels(scores, labels)?;
    let batch = scores.len() as f64;
    let mut data_term = 0.0;
    for (s, label) in scores.iter().zip(labels) {
        for k in 0..NUM_CLASSES {
            let y = svm_target(*label, k);
            data_term += (1.0 - y * s.scores[k]).max(0.0);
        }
    }
    let l1 = params.weights.l1_norm();
    Ok(0.5 * l1 * l1 + params.penalty * data_term / batch)
}

/// Mean cross-entropy of the softmaxed scores. The gradient with respect to
/// the scores is `(softmax(s) − onehot(label)) / batch`.
pub fn softmax_head_loss(
    scores: &[ClassScores],
    labels: &[u8],
) -> Result<(f64, Vec<[f64; NUM_CLASSES]>)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} score vectors but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::Invalid("empty batch".into()));
    }
    let batch = scores.len() as f64;
    let mut loss = 0.0;
    let mut dscores = Vec::with_capacity(scores.len());
    for (s, label) in scores.iter().zip(labels) {
        let probs = softmax(&s.scores);
        loss += cross_entropy(&probs, usize::from(*label))?;
        let mut ds = [0.0; NUM_CLASSES];
        for (k, d) in ds.iter_mut().enumerate() {
            let target = if usize::from(*label) == k { 1.0 } else { 0.0 };
            *d = (probs[k] - target) / batch;
        }
        dscores.push(ds);
    }
    Ok((loss / batch, dscores))
}

/// Backpropagates score gradients through the affine head: accumulates
/// `dW = Σᵢ dsᵢ ⊗ hᵢ` and `db = Σᵢ dsᵢ`, and returns `dh = Wᵀ·ds` per sample.
/// Regularizer gradients are not included here; [`l2_svm_loss`] reports them.
pub fn head_backward(
    hidden: &[Vec<f64>],
    dscores: &[[f64; NUM_CLASSES]],
    params: &HeadParams,
) -> Result<(Matrix, Vec<f64>, Vec<Vec<f64>>)> {
    if hidden.len() != dscores.len() {
        return Err(Error::Shape(format!(
            "{} hidden states but {} score gradients",
            hidden.len(),
            dscores.len()
        )));
    }
    let mut dw = Matrix::zeros(NUM_CLASSES, params.cell_size());
    let mut db = vec![0.0; NUM_CLASSES];
    let mut dh = Vec::with_capacity(hidden.len());
    for (h, ds) in hidden.iter().zip(dscores) {
        if h.len() != params.cell_size() {
            return Err(Error::Shape(format!(
                "hidden state has {} entries, head expects {}",
                h.len(),
                params.cell_size()
            )));
        }
        dw.add_outer(ds, h);
        for (b, d) in db.iter_mut().zip(ds) {
            *b += d;
        }
        dh.push(params.weights.matvec_t(ds));
    }
    Ok((dw, db, dh))
}
