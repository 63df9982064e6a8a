//! One-hot encoding, the encoded-sample container, deduplication, and the
//! encoded-dataset file format.
//!
//! On disk a dataset is compact: a header line of group widths, then one
//! sample per line as space-separated group indices with the binary label
//! last. One-hot vectors are materialized on demand.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::schema::{ColumnKind, RawRecord, RecordSchema};
use crate::preprocess::stats::{decile_bin, standardize, ColumnStats};

/// Vector of `width` zeros with a single 1 at `index`.
pub fn one_hot(index: usize, width: usize) -> Result<Vec<f64>> {
    if index >= width {
        return Err(Error::Invalid(format!(
            "one-hot index {index} out of range for width {width}"
        )));
    }
    let mut v = vec![0.0; width];
    v[index] = 1.0;
    Ok(v)
}

/// One encoded sample: the active index of each feature group, plus the
/// binary class label (0 = normal, 1 = intrusion).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodedSample {
    pub indices: Vec<usize>,
    pub label: u8,
}

/// A full encoded dataset: per-group one-hot widths and the samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedDataset {
    pub group_widths: Vec<usize>,
    pub samples: Vec<EncodedSample>,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Width the recurrent cell sees: every group is zero-padded on the
    /// right to the widest group.
    pub fn input_width(&self) -> usize {
        self.group_widths.iter().copied().max().unwrap_or(0)
    }

    /// Materializes sample `i` as its sequence of one-hot groups, each
    /// padded to [`input_width`](Self::input_width).
    pub fn padded_groups(&self, i: usize) -> Vec<Vec<f64>> {
        let width = self.input_width();
        let sample = &self.samples[i];
        sample
            .indices
            .iter()
            .map(|idx| {
                let mut v = vec![0.0; width];
                v[*idx] = 1.0;
                v
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.group_widths.is_empty() {
            return Err(Error::Invalid("dataset has no feature groups".into()));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.indices.len() != self.group_widths.len() {
                return Err(Error::Invalid(format!(
                    "sample {i} has {} groups, header declares {}",
                    s.indices.len(),
                    self.group_widths.len()
                )));
            }
            for (idx, w) in s.indices.iter().zip(&self.group_widths) {
                if idx >= w {
                    return Err(Error::Invalid(format!(
                        "sample {i}: index {idx} out of range for group width {w}"
                    )));
                }
            }
            if s.label > 1 {
                return Err(Error::Invalid(format!(
                    "sample {i}: label {} outside {{0, 1}}",
                    s.label
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let widths: Vec<String> = self.group_widths.iter().map(|w| w.to_string()).collect();
        out.push_str(&widths.join(" "));
        out.push('\n');
        for s in &self.samples {
            let mut fields: Vec<String> = s.indices.iter().map(|i| i.to_string()).collect();
            fields.push(s.label.to_string());
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty dataset file".into()))?;
        let group_widths: Vec<usize> = header
            .split_whitespace()
            .map(|w| {
                w.parse()
                    .map_err(|_| Error::Invalid(format!("bad group width '{w}'")))
            })
            .collect::<Result<_>>()?;
        let mut samples = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != group_widths.len() + 1 {
                return Err(Error::Invalid(format!(
                    "dataset line {}: expected {} fields, got {}",
                    i + 2,
                    group_widths.len() + 1,
                    fields.len()
                )));
            }
            let indices: Vec<usize> = fields[..group_widths.len()]
                .iter()
                .map(|f| {
                    f.parse()
                        .map_err(|_| Error::Invalid(format!("bad index '{f}' on line {}", i + 2)))
                })
                .collect::<Result<_>>()?;
            let label: u8 = fields[group_widths.len()]
                .parse()
                .map_err(|_| Error::Invalid(format!("bad label on line {}", i + 2)))?;
            samples.push(EncodedSample { indices, label });
        }
        let ds = EncodedDataset {
            group_widths,
            samples,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        crate::util::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Keeps the first occurrence of each distinct `(indices, label)` pair,
/// preserving order. Idempotent.
pub fn dedupe(samples: Vec<EncodedSample>) -> Vec<EncodedSample> {
    let mut seen = HashSet::with_capacity(samples.len());
    samples
        .into_iter()
        .filter(|s| seen.insert(s.clone()))
        .collect()
}

/// One-hot group widths implied by the fitted statistics: continuous columns
/// bin into 10 deciles, categorical columns get one slot per category.
pub fn group_widths(schema: &RecordSchema, stats: &[ColumnStats]) -> Result<Vec<usize>> {
    let mut widths = Vec::new();
    for (col, _, kind) in schema.feature_columns() {
        match (&stats[col], kind) {
            (ColumnStats::Continuous(_), ColumnKind::Continuous) => widths.push(10),
            (ColumnStats::Categorical(m), ColumnKind::Categorical) => {
                if m.is_empty() {
                    return Err(Error::Invalid(format!(
                        "categorical column {col} has no categories"
                    )));
                }
                widths.push(m.len());
            }
            _ => {
                return Err(Error::Shape(format!(
                    "stats for column {col} do not match its schema kind"
                )))
            }
        }
    }
    if widths.is_empty() {
        return Err(Error::Schema(
            "schema declares no feature columns (everything is label or ignored)".into(),
        ));
    }
    Ok(widths)
}

/// Encodes parsed records with previously fitted statistics. Continuous
/// features are standardized then decile-binned; categorical features map
/// to their lexicographic index; the label column binarizes through the
/// schema's positive set.
pub fn encode_records(
    records: &[RawRecord],
    schema: &RecordSchema,
    stats: &[ColumnStats],
) -> Result<EncodedDataset> {
    if stats.len() != schema.columns.len() {
        return Err(Error::Shape(format!(
            "{} stats entries for {} schema columns",
            stats.len(),
            schema.columns.len()
        )));
    }
    let widths = group_widths(schema, stats)?;
    let label_col = schema.label_index();
    let mut samples = Vec::with_capacity(records.len());
    for rec in records {
        let mut indices = Vec::with_capacity(widths.len());
        for (col, name, kind) in schema.feature_columns() {
            let field = &rec.fields[col];
            match (&stats[col], kind) {
                (ColumnStats::Continuous(c), ColumnKind::Continuous) => {
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        row: rec.line,
                        column: name.to_string(),
                        message: format!("'{field}' is not a number"),
                    })?;
                    indices.push(decile_bin(standardize(v, c), c));
                }
                (ColumnStats::Categorical(m), ColumnKind::Categorical) => {
                    indices.push(m.index_of(field)?);
                }
                _ => unreachable!("group_widths validated the stats kinds"),
            }
        }
        let label = u8::from(schema.label_positive.contains(&rec.fields[label_col]));
        samples.push(EncodedSample { indices, label });
    }
    Ok(EncodedDataset {
        group_widths: widths,
        samples,
    })
}
