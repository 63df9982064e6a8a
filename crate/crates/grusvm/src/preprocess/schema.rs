//! Dataset column declarations.
//!
//! A schema file is key-value text, one directive per line:
//!
//! ```text
//! # comment
//! delimiter tab            # or: comma, space, or any single character
//! column duration continuous
//! column service categorical
//! column label label
//! positive attack          # raw label values meaning "intrusion"
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// How a column participates in preprocessing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Continuous,
    Categorical,
    Label,
    Ignored,
}

impl ColumnKind {
    pub fn name(self) -> &'static str {
        match self {
            ColumnKind::Continuous => "continuous",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Label => "label",
            ColumnKind::Ignored => "ignored",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(ColumnKind::Continuous),
            "categorical" => Ok(ColumnKind::Categorical),
            "label" => Ok(ColumnKind::Label),
            "ignored" => Ok(ColumnKind::Ignored),
            other => Err(Error::Schema(format!("unknown column kind '{other}'"))),
        }
    }
}

/// Ordered column declarations plus the record delimiter and the set of raw
/// label values that map to the positive ("intrusion") class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordSchema {
    pub columns: Vec<(String, ColumnKind)>,
    pub delimiter: char,
    pub label_positive: BTreeSet<String>,
}

impl RecordSchema {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        let mut delimiter = None;
        let mut label_positive = BTreeSet::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = match raw_line.split_once('#') {
                Some((before, _)) => before.trim(),
                None => raw_line.trim(),
            };
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::Schema(format!("line {}: missing value", i + 1)))?;
            let rest = rest.trim();
            match key {
                "delimiter" => {
                    delimiter = Some(match rest {
                        "tab" => '\t',
                        "comma" => ',',
                        "space" => ' ',
                        s if s.chars().count() == 1 => s.chars().next().unwrap(),
                        other => {
                            return Err(Error::Schema(format!(
                                "line {}: delimiter must be a single character, 'tab', 'comma' or 'space', got '{other}'",
                                i + 1
                            )))
                        }
                    });
                }
                "column" => {
                    let (name, kind) = rest.split_once(char::is_whitespace).ok_or_else(|| {
                        Error::Schema(format!("line {}: column needs a name and a kind", i + 1))
                    })?;
                    columns.push((name.to_string(), ColumnKind::parse(kind.trim())?));
                }
                "positive" => {
                    label_positive.insert(rest.to_string());
                }
                other => {
                    return Err(Error::Schema(format!(
                        "line {}: unknown directive '{other}'",
                        i + 1
                    )))
                }
            }
        }
        let schema = RecordSchema {
            columns,
            delimiter: delimiter
                .ok_or_else(|| Error::Schema("schema does not declare a delimiter".into()))?,
            label_positive,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let labels = self
            .columns
            .iter()
            .filter(|(_, k)| *k == ColumnKind::Label)
            .count();
        if labels != 1 {
            return Err(Error::Schema(format!(
                "exactly one label column required, found {labels}"
            )));
        }
        if self.columns.is_empty() {
            return Err(Error::Schema("schema declares no columns".into()));
        }
        if self.label_positive.is_empty() {
            return Err(Error::Schema(
                "no positive label values declared (add at least one 'positive' line)".into(),
            ));
        }
        Ok(())
    }

    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|(_, k)| *k == ColumnKind::Label)
            .expect("validated schema has a label column")
    }

    /// Columns that become feature groups, in schema order.
    pub fn feature_columns(&self) -> impl Iterator<Item = (usize, &str, ColumnKind)> {
        self.columns.iter().enumerate().filter_map(|(i, (n, k))| {
            matches!(k, ColumnKind::Continuous | ColumnKind::Categorical)
                .then_some((i, n.as_str(), *k))
        })
    }
}

/// One raw input record: original 1-based line number and the split fields.
#[derive(Clone, Debug)]
pub struct RawRecord {
    pub line: usize,
    pub fields: Vec<String>,
}

/// Splits delimited text into records, rejecting rows whose field count does
/// not match the schema. Returns the valid records and the rejected count.
pub fn split_records(text: &str, schema: &RecordSchema) -> (Vec<RawRecord>, usize) {
    let mut records = Vec::new();
    let mut rejected = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line
            .split(schema.delimiter)
            .map(|f| f.to_string())
            .collect();
        if fields.len() == schema.columns.len() {
            records.push(RawRecord {
                line: i + 1,
                fields,
            });
        } else {
            rejected += 1;
        }
    }
    (records, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = "\
delimiter comma
column duration continuous
column proto categorical
column label label
positive attack
";

    #[test]
    fn parses_a_schema() {
        let s = RecordSchema::parse(SCHEMA).unwrap();
        assert_eq!(s.delimiter, ',');
        assert_eq!(s.columns.len(), 3);
        assert_eq!(s.label_index(), 2);
        assert!(s.label_positive.contains("attack"));
        assert_eq!(s.feature_columns().count(), 2);
    }

    #[test]
    fn rejects_missing_or_duplicate_label() {
        let no_label = "delimiter comma\ncolumn a continuous\npositive x\n";
        assert!(RecordSchema::parse(no_label).is_err());
        let two_labels =
            "delimiter comma\ncolumn a label\ncolumn b label\npositive x\n";
        assert!(RecordSchema::parse(two_labels).is_err());
    }

    #[test]
    fn rejects_unknown_directives_and_kinds() {
        assert!(RecordSchema::parse("delimiter comma\nfrobnicate yes\n").is_err());
        assert!(
            RecordSchema::parse("delimiter comma\ncolumn a numeric\ncolumn l label\npositive x\n")
                .is_err()
        );
    }

    #[test]
    fn splits_and_rejects_rows() {
        let s = RecordSchema::parse(SCHEMA).unwrap();
        let text = "1.5,tcp,normal\nbroken row\n2.5,udp,attack\n\n3,tcp,normal,extra\n";
        let (records, rejected) = split_records(text, &s);
        assert_eq!(records.len(), 2);
        assert_eq!(rejected, 2);
        assert_eq!(records[0].line, 1);
        assert_eq!(records[1].line, 3);
        assert_eq!(records[1].fields, vec!["2.5", "udp", "attack"]);
    }

    #[test]
    fn tab_delimiter_keyword() {
        let s = RecordSchema::parse(
            "delimiter tab\ncolumn a continuous\ncolumn l label\npositive bad\n",
        )
        .unwrap();
        assert_eq!(s.delimiter, '\t');
    }
}
