//! Per-column statistics: standardization parameters, decile edges, and
//! categorical index maps, plus the text sidecar they are saved to.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::schema::{ColumnKind, RawRecord, RecordSchema};

/// Standardization parameters and decile edges for one continuous column.
/// `edges` holds the 0th, 10th, …, 100th percentiles of the *standardized*
/// training values (standardization happens first, binning second).
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousStats {
    pub mean: f64,
    pub std: f64,
    pub edges: [f64; 11],
}

impl ContinuousStats {
    /// A constant column carries no information; it standardizes to 0.
    pub fn is_degenerate(&self) -> bool {
        self.std == 0.0
    }
}

/// Lexicographically ordered category-to-index map for one categorical
/// column. Index = rank in the sorted category list, a bijection onto
/// `[0, n−1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryMap {
    categories: Vec<String>,
}

impl CategoryMap {
    pub fn from_observed<'a>(values: impl Iterator<Item = &'a str>) -> Self {
        let mut categories: Vec<String> = values.map(|v| v.to_string()).collect();
        categories.sort();
        categories.dedup();
        CategoryMap { categories }
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    /// Lexicographic rank of `raw`; unseen categories are an error.
    pub fn index_of(&self, raw: &str) -> Result<usize> {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(raw))
            .map_err(|_| Error::UnknownCategory(raw.to_string()))
    }
}

/// Fitted statistics for one schema column.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnStats {
    Continuous(ContinuousStats),
    Categorical(CategoryMap),
    /// Label and ignored columns carry no statistics.
    Unused,
}

/// `(x − μ) / σ`; constant columns (σ = 0) standardize to 0.
pub fn standardize(x: f64, stats: &ContinuousStats) -> f64 {
    if stats.std == 0.0 {
        0.0
    } else {
        (x - stats.mean) / stats.std
    }
}

/// Linear-interpolation percentile of a sorted sample: the value at rank
/// `(n−1)·p`, interpolating between neighbours.
pub fn percentile_linear(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty sample");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// Mean, population standard deviation, and decile edges of the standardized
/// values. Works for any non-empty list; table-level fitting enforces the
/// minimum row count.
pub fn continuous_stats_from_values(values: &[f64]) -> ContinuousStats {
    assert!(!values.is_empty(), "no values to fit");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let provisional = ContinuousStats {
        mean,
        std,
        edges: [0.0; 11],
    };
    let mut standardized: Vec<f64> = values.iter().map(|v| standardize(*v, &provisional)).collect();
    standardized.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut edges = [0.0; 11];
    for (k, e) in edges.iter_mut().enumerate() {
        *e = percentile_linear(&standardized, k as f64 / 10.0);
    }
    ContinuousStats { mean, std, edges }
}

/// Index of the half-open decile interval `[edge_k, edge_{k+1})` containing
/// `z`. Values below `edge_0` clamp to bin 0 and values at or above
/// `edge_10` clamp to bin 9. Duplicated edges (tied training values) merge
/// intervals leftward: a value sitting on a run of equal edges takes the
/// lowest bin index of that run. Monotone non-decreasing in `z`.
pub fn decile_bin(z: f64, stats: &ContinuousStats) -> usize {
    let e = &stats.edges;
    if z >= e[10] {
        return 9;
    }
    let mut k = 0;
    for i in (0..=9).rev() {
        if e[i] <= z {
            k = i;
            break;
        }
    }
    while k > 0 && e[k - 1] == e[k] {
        k -= 1;
    }
    k
}

/// Fits statistics for every schema column over the parsed records.
/// Requires at least 10 rows (decile edges are meaningless below that).
pub fn fit_stats(records: &[RawRecord], schema: &RecordSchema) -> Result<Vec<ColumnStats>> {
    if records.is_empty() {
        return Err(Error::Invalid("no input rows to fit".into()));
    }
    if records.len() < 10 {
        return Err(Error::Invalid(format!(
            "at least 10 rows required to fit decile edges, got {}",
            records.len()
        )));
    }
    let mut out = Vec::with_capacity(schema.columns.len());
    for (col, (name, kind)) in schema.columns.iter().enumerate() {
        match kind {
            ColumnKind::Continuous => {
                let mut values = Vec::with_capacity(records.len());
                for rec in records {
                    let field = &rec.fields[col];
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        row: rec.line,
                        column: name.clone(),
                        message: format!("'{field}' is not a number"),
                    })?;
                    values.push(v);
                }
                out.push(ColumnStats::Continuous(continuous_stats_from_values(
                    &values,
                )));
            }
            ColumnKind::Categorical => {
                let map =
                    CategoryMap::from_observed(records.iter().map(|r| r.fields[col].as_str()));
                out.push(ColumnStats::Categorical(map));
            }
            ColumnKind::Label | ColumnKind::Ignored => out.push(ColumnStats::Unused),
        }
    }
    Ok(out)
}

fn fmt_f64(v: f64) -> String {
    // Display output for f64 is the shortest string that parses back to the
    // same value, so the sidecar re-encodes identically.
    format!("{v}")
}

/// Writes the stats sidecar. One `column` entry per schema column, in order.
pub fn stats_to_text(stats: &[ColumnStats], schema: &RecordSchema) -> String {
    let mut out = String::new();
    for ((name, _), st) in schema.columns.iter().zip(stats) {
        match st {
            ColumnStats::Continuous(c) => {
                out.push_str(&format!("column {name} continuous\n"));
                out.push_str(&format!("mean {}\n", fmt_f64(c.mean)));
                out.push_str(&format!("std {}\n", fmt_f64(c.std)));
                let edges: Vec<String> = c.edges.iter().map(|e| fmt_f64(*e)).collect();
                out.push_str(&format!("edges {}\n", edges.join(" ")));
            }
            ColumnStats::Categorical(m) => {
                out.push_str(&format!("column {name} categorical\n"));
                out.push_str(&format!("categories {}\n", m.len()));
                for c in m.categories() {
                    out.push_str(&format!("cat {c}\n"));
                }
            }
            ColumnStats::Unused => {
                out.push_str(&format!("column {name} unused\n"));
            }
        }
    }
    out
}

/// Parses a stats sidecar back, validating column names and order against
/// the schema.
pub fn stats_from_text(text: &str, schema: &RecordSchema) -> Result<Vec<ColumnStats>> {
    let mut lines = text.lines().peekable();
    let mut out = Vec::new();
    let mut col_idx = 0usize;
    let bad = |msg: &str| Error::Invalid(format!("stats file: {msg}"));

    while let Some(line) = lines.next() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let rest = line
            .strip_prefix("column ")
            .ok_or_else(|| bad(&format!("expected 'column', got '{line}'")))?;
        let (name, kind) = rest
            .rsplit_once(' ')
            .ok_or_else(|| bad("column line needs a name and a kind"))?;
        let (schema_name, _) = schema
            .columns
            .get(col_idx)
            .ok_or_else(|| bad("more columns than the schema declares"))?;
        if name != schema_name {
            return Err(bad(&format!(
                "column {col_idx} is '{name}', schema says '{schema_name}'"
            )));
        }
        match kind {
            "continuous" => {
                let mean_line = lines.next().ok_or_else(|| bad("missing mean"))?;
                let std_line = lines.next().ok_or_else(|| bad("missing std"))?;
                let edges_line = lines.next().ok_or_else(|| bad("missing edges"))?;
                let mean: f64 = mean_line
                    .strip_prefix("mean ")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("malformed mean"))?;
                let std: f64 = std_line
                    .strip_prefix("std ")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("malformed std"))?;
                let edge_vals: Vec<f64> = edges_line
                    .strip_prefix("edges ")
                    .ok_or_else(|| bad("malformed edges"))?
                    .split(' ')
                    .map(|v| v.parse().map_err(|_| bad("malformed edge value")))
                    .collect::<Result<_>>()?;
                if edge_vals.len() != 11 {
                    return Err(bad(&format!("expected 11 edges, got {}", edge_vals.len())));
                }
                let mut edges = [0.0; 11];
                edges.copy_from_slice(&edge_vals);
                out.push(ColumnStats::Continuous(ContinuousStats { mean, std, edges }));
            }
            "categorical" => {
                let count_line = lines.next().ok_or_else(|| bad("missing category count"))?;
                let count: usize = count_line
                    .strip_prefix("categories ")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("malformed category count"))?;
                let mut categories = Vec::with_capacity(count);
                for _ in 0..count {
                    let cat_line = lines.next().ok_or_else(|| bad("missing category"))?;
                    categories.push(
                        cat_line
                            .strip_prefix("cat ")
                            .ok_or_else(|| bad("malformed category line"))?
                            .to_string(),
                    );
                }
                if categories.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(bad("categories are not strictly sorted"));
                }
                out.push(ColumnStats::Categorical(CategoryMap { categories }));
            }
            "unused" => out.push(ColumnStats::Unused),
            other => return Err(bad(&format!("unknown column kind '{other}'"))),
        }
        col_idx += 1;
    }
    if col_idx != schema.columns.len() {
        return Err(bad(&format!(
            "{col_idx} columns described, schema declares {}",
            schema.columns.len()
        )));
    }
    Ok(out)
}

pub fn load_stats(path: &Path, schema: &RecordSchema) -> Result<Vec<ColumnStats>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    stats_from_text(&text, schema)
}
