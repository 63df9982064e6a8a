//! Preprocessing pipeline: raw delimited traffic logs in, deduplicated
//! one-hot encoded samples out.
//!
//! The order of operations per continuous feature is standardization
//! (`z = (x − μ)/σ`), then decile binning of the standardized values;
//! categorical features map to their lexicographic index. Every feature
//! then becomes a one-hot group, and exact-duplicate samples are dropped.
//! Everything is deterministic: the same input and schema produce
//! byte-identical outputs.

mod encode;
mod schema;
mod stats;

pub use encode::{
    dedupe, encode_records, group_widths, one_hot, EncodedDataset, EncodedSample,
};
pub use schema::{split_records, ColumnKind, RawRecord, RecordSchema};
pub use stats::{
    continuous_stats_from_values, decile_bin, fit_stats, load_stats, percentile_linear,
    standardize, stats_from_text, stats_to_text, CategoryMap, ColumnStats, ContinuousStats,
};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// What [`run_pipeline`] did, for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineSummary {
    pub rows_read: usize,
    pub rows_rejected: usize,
    pub duplicates_removed: usize,
    pub samples_written: usize,
}

/// Fits statistics on the input, encodes every valid row, deduplicates, and
/// writes the encoded dataset plus the stats sidecar.
pub fn run_pipeline(
    input: &Path,
    schema_path: &Path,
    output: &Path,
    stats_out: &Path,
) -> Result<PipelineSummary> {
    let schema = RecordSchema::from_file(schema_path)?;
    let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    if text.trim().is_empty() {
        return Err(Error::Invalid(format!(
            "input file {} is empty",
            input.display()
        )));
    }
    let (records, rows_rejected) = split_records(&text, &schema);
    let rows_read = records.len() + rows_rejected;
    let stats = fit_stats(&records, &schema)?;
    let encoded = encode_records(&records, &schema, &stats)?;
    let before = encoded.len();
    let dataset = EncodedDataset {
        group_widths: encoded.group_widths,
        samples: dedupe(encoded.samples),
    };
    dataset.save(output)?;
    crate::util::write_atomic(stats_out, stats_to_text(&stats, &schema).as_bytes())?;
    Ok(PipelineSummary {
        rows_read,
        rows_rejected,
        duplicates_removed: before - dataset.len(),
        samples_written: dataset.len(),
    })
}
