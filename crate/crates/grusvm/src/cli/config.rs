//! Key-value training config files.
//!
//! ```text
//! # hyperparameters
//! batch_size 256
//! cell_size 256
//! dropout_rate 0.85    # keep probability: 0.85 keeps 85% of activations
//! epochs 5
//! learning_rate 1e-5
//! svm_c 0.5            # omit for the softmax head
//! seed 42
//! ```
//!
//! `key value` and `key = value` are both accepted. `dropout_rate` is a
//! KEEP probability.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::heads::HeadKind;
use crate::train::TrainConfig;

/// Raw values read from a config file, before head-specific resolution.
#[derive(Clone, Debug, Default)]
pub struct FileConfig {
    pub batch_size: Option<usize>,
    pub cell_size: Option<usize>,
    pub dropout_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub svm_c: Option<f64>,
    pub seed: Option<u64>,
    pub shuffle: Option<bool>,
}

pub fn parse_config_file(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<FileConfig> {
    let mut config = FileConfig::default();
    for (i, raw_line) in text.lines().enumerate() {
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before.trim(),
            None => raw_line.trim(),
        };
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => line
                .split_once(char::is_whitespace)
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {}: missing value", i + 1)))?,
        };
        let bad = |what: &str| Error::Config(format!("line {}: {key} must be {what}", i + 1));
        match key {
            "batch_size" => config.batch_size = Some(value.parse().map_err(|_| bad("an integer"))?),
            "cell_size" => config.cell_size = Some(value.parse().map_err(|_| bad("an integer"))?),
            "dropout_rate" => {
                config.dropout_rate = Some(value.parse().map_err(|_| bad("a number"))?)
            }
            "epochs" => config.epochs = Some(value.parse().map_err(|_| bad("an integer"))?),
            "learning_rate" => {
                config.learning_rate = Some(value.parse().map_err(|_| bad("a number"))?)
            }
            "svm_c" => config.svm_c = Some(value.parse().map_err(|_| bad("a number"))?),
            "seed" => config.seed = Some(value.parse().map_err(|_| bad("an integer"))?),
            "shuffle" => {
                config.shuffle = Some(value.parse().map_err(|_| bad("true or false"))?)
            }
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{other}'",
                    i + 1
                )))
            }
        }
    }
    Ok(config)
}

/// Combines a parsed file with the head choice. The SVM head demands
/// `svm_c`; the Softmax head ignores it with a warning (returned, not
/// printed). Missing `seed` defaults to 42.
pub fn resolve_config(
    file: &FileConfig,
    head: HeadKind,
) -> Result<(TrainConfig, Vec<String>)> {
    let mut warnings = Vec::new();
    let need = |name: &str| Error::Config(format!("config is missing '{name}'"));
    let svm_c = match (head, file.svm_c) {
        (HeadKind::Svm, Some(c)) => c,
        (HeadKind::Svm, None) => {
            return Err(Error::Config(
                "the svm head requires 'svm_c' in the config (the penalty C)".into(),
            ))
        }
        (HeadKind::Softmax, Some(_)) => {
            warnings.push("svm_c is not applicable to the softmax head; ignoring it".into());
            0.0
        }
        (HeadKind::Softmax, None) => 0.0,
    };
    let config = TrainConfig {
        batch_size: file.batch_size.ok_or_else(|| need("batch_size"))?,
        cell_size: file.cell_size.ok_or_else(|| need("cell_size"))?,
        dropout_keep: file.dropout_rate.ok_or_else(|| need("dropout_rate"))?,
        epochs: file.epochs.ok_or_else(|| need("epochs"))?,
        learning_rate: file.learning_rate.ok_or_else(|| need("learning_rate"))?,
        svm_c,
        head,
        seed: file.seed.unwrap_or(42),
        shuffle: file.shuffle.unwrap_or(false),
    };
    config.validate()?;
    Ok((config, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
batch_size 8
cell_size 16
dropout_rate 0.85
epochs 5
learning_rate 1e-3
svm_c 0.5
seed 7
";

    #[test]
    fn parses_both_separators_and_comments() {
        let config = parse_config_text("batch_size = 4 # four\ncell_size 2\n").unwrap();
        assert_eq!(config.batch_size, Some(4));
        assert_eq!(config.cell_size, Some(2));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config_text("batch_siez 4\n").is_err());
    }

    #[test]
    fn svm_head_demands_c() {
        let mut file = parse_config_text(FULL).unwrap();
        file.svm_c = None;
        let err = resolve_config(&file, HeadKind::Svm).unwrap_err();
        assert!(err.to_string().contains("svm_c"), "{err}");
    }

    #[test]
    fn softmax_head_warns_and_ignores_c() {
        let file = parse_config_text(FULL).unwrap();
        let (config, warnings) = resolve_config(&file, HeadKind::Softmax).unwrap();
        assert_eq!(config.svm_c, 0.0);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("svm_c"));
    }

    #[test]
    fn resolved_config_carries_the_file_values() {
        let file = parse_config_text(FULL).unwrap();
        let (config, warnings) = resolve_config(&file, HeadKind::Svm).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(config.batch_size, 8);
        assert_eq!(config.cell_size, 16);
        assert_eq!(config.dropout_keep, 0.85);
        assert_eq!(config.epochs, 5);
        assert_eq!(config.learning_rate, 1e-3);
        assert_eq!(config.svm_c, 0.5);
        assert_eq!(config.seed, 7);
        assert!(!config.shuffle);
    }

    #[test]
    fn missing_required_keys_are_named() {
        let err = resolve_config(&FileConfig::default(), HeadKind::Softmax).unwrap_err();
        assert!(err.to_string().contains("batch_size"));
    }
}
