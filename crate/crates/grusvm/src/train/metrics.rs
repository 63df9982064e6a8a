//! Confusion counts and the derived binary-classification rates.
//!
//! The positive class is "intrusion" throughout, so the true-positive rate
//! reads as "attacks caught".

use std::path::Path;

use crate::error::Result;

/// Whether counts cover one pass over the data or are accumulated across
/// repeated passes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    PerEpoch,
    Accumulated,
}

impl Scope {
    pub fn name(self) -> &'static str {
        match self {
            Scope::PerEpoch => "per_epoch",
            Scope::Accumulated => "accumulated",
        }
    }
}

/// TP/TN/FP/FN counts with rate accessors. Rates with a zero denominator
/// report 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConfusionReport {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub scope: Scope,
}

impl ConfusionReport {
    pub fn zero(scope: Scope) -> Self {
        ConfusionReport {
            true_pos: 0,
            true_neg: 0,
            false_pos: 0,
            false_neg: 0,
            scope,
        }
    }

    pub fn from_counts(true_pos: u64, true_neg: u64, false_pos: u64, false_neg: u64, scope: Scope) -> Self {
        ConfusionReport {
            true_pos,
            true_neg,
            false_pos,
            false_neg,
            scope,
        }
    }

    /// Tallies one prediction against its label (1 = intrusion, positive).
    pub fn record(&mut self, predicted: u8, label: u8) {
        match (predicted, label) {
            (1, 1) => self.true_pos += 1,
            (0, 0) => self.true_neg += 1,
            (1, 0) => self.false_pos += 1,
            _ => self.false_neg += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.true_pos + self.true_neg, self.total())
    }

    /// TP / (TP + FN).
    pub fn tpr(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_neg)
    }

    /// TN / (TN + FP).
    pub fn tnr(&self) -> f64 {
        ratio(self.true_neg, self.true_neg + self.false_pos)
    }

    /// FP / (TN + FP).
    pub fn fpr(&self) -> f64 {
        ratio(self.false_pos, self.true_neg + self.false_pos)
    }

    /// FN / (TP + FN).
    pub fn fnr(&self) -> f64 {
        ratio(self.false_neg, self.true_pos + self.false_neg)
    }

    /// Counts multiplied by the number of passes, tagged as accumulated.
    pub fn scaled(&self, passes: u64) -> ConfusionReport {
        ConfusionReport {
            true_pos: self.true_pos * passes,
            true_neg: self.true_neg * passes,
            false_pos: self.false_pos * passes,
            false_neg: self.false_neg * passes,
            scope: Scope::Accumulated,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One metrics-log row.
#[derive(Clone, Debug)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub report: ConfusionReport,
    /// Measured wall time; the only nondeterministic column in the log.
    pub wall_time_s: f64,
}

pub const METRICS_HEADER: &str = "epoch,loss,accuracy,tp,tn,fp,fn,tpr,tnr,fpr,fnr,wall_time_s";

pub fn metrics_log_to_text(rows: &[EpochMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in rows {
        let r = &m.report;
        out.push_str(&format!(
            "{},{:.6},{:.6},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.3}\n",
            m.epoch,
            m.loss,
            r.accuracy(),
            r.true_pos,
            r.true_neg,
            r.false_pos,
            r.false_neg,
            r.tpr(),
            r.tnr(),
            r.fpr(),
            r.fnr(),
            m.wall_time_s,
        ));
    }
    out
}

pub fn write_metrics_log(path: &Path, rows: &[EpochMetrics]) -> Result<()> {
    crate::util::write_atomic(path, metrics_log_to_text(rows).as_bytes())
}

/// Renders per-epoch and accumulated reports as delimited rows.
pub fn reports_to_text(reports: &[ConfusionReport]) -> String {
    let mut out = String::from("scope,tp,tn,fp,fn,tpr,tnr,fpr,fnr,accuracy\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.scope.name(),
            r.true_pos,
            r.true_neg,
            r.false_pos,
            r.false_neg,
            r.tpr(),
            r.tnr(),
            r.fpr(),
            r.fnr(),
            r.accuracy(),
        ));
    }
    out
}
