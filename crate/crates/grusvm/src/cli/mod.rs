//! Batch command-line front end: `preprocess`, `train`, `test`, `compare`,
//! and `gradcheck`.
//!
//! Exit codes: 0 on success, 1 for validation failures (bad flags, missing
//! files, malformed configs — everything caught before compute starts), 2
//! for runtime failures. Outputs are deterministic given identical inputs
//! and seeds; volatile values (timestamps, measured wall times) go to each
//! run's manifest, written alongside the primary output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::error::Result;
use crate::heads::HeadKind;
use crate::preprocess::{self, EncodedDataset};
use crate::train::{
    self, gradient_check, reports_to_text, write_metrics_log, Checkpoint, EpochMetrics,
    GradCheckConfig, TrainConfig,
};

mod config;

pub use config::{parse_config_file, resolve_config, FileConfig};

/// Threshold the gradient checker must beat.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "grusvm",
    version,
    about = "Recurrent intrusion-detection models with SVM or Softmax output layers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a raw delimited traffic log into one-hot feature groups
    Preprocess(PreprocessArgs),
    /// Train a model on an encoded dataset
    Train(TrainArgs),
    /// Evaluate a checkpoint on an encoded dataset
    Test(TestArgs),
    /// Train and evaluate both heads side by side on the same data
    Compare(CompareArgs),
    /// Verify analytic gradients against finite differences
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct PreprocessArgs {
    /// Raw delimited input file
    #[arg(long)]
    input: PathBuf,
    /// Schema file describing the columns
    #[arg(long)]
    schema: PathBuf,
    /// Encoded dataset output path
    #[arg(long)]
    output: PathBuf,
    /// Statistics sidecar output path
    #[arg(long)]
    stats_out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Encoded dataset (output of `preprocess`)
    #[arg(long)]
    data: PathBuf,
    /// Key-value config file (batch_size, cell_size, dropout_rate, epochs,
    /// learning_rate, svm_c, seed)
    #[arg(long)]
    config: PathBuf,
    /// Output layer to train
    #[arg(long, value_parser = parse_head)]
    head: HeadKind,
    /// Checkpoint output path
    #[arg(long)]
    checkpoint_out: PathBuf,
    /// Per-epoch metrics log output path
    #[arg(long)]
    log_out: PathBuf,
    /// Override the config file's seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TestArgs {
    /// Encoded dataset to evaluate on
    #[arg(long)]
    data: PathBuf,
    /// Trained checkpoint
    #[arg(long)]
    checkpoint: PathBuf,
    /// Report output path (per-epoch and accumulated rows)
    #[arg(long)]
    report_out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Encoded training dataset
    #[arg(long)]
    data_train: PathBuf,
    /// Encoded testing dataset (same encoding as the training set)
    #[arg(long)]
    data_test: PathBuf,
    /// Config for the SVM-headed model
    #[arg(long)]
    config_svm: PathBuf,
    /// Config for the Softmax-headed model
    #[arg(long)]
    config_softmax: PathBuf,
    /// Directory for the comparison table, logs, and checkpoints
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Seeded random trials per head
    #[arg(long, default_value_t = 8)]
    trials: usize,
    #[arg(long, default_value_t = 8)]
    cell_size: usize,
    #[arg(long, default_value_t = 5)]
    seq_len: usize,
    #[arg(long, default_value_t = 10)]
    input_width: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_head(s: &str) -> std::result::Result<HeadKind, String> {
    match s {
        "svm" => Ok(HeadKind::Svm),
        "softmax" => Ok(HeadKind::Softmax),
        other => Err(format!("unknown head '{other}' (use 'svm' or 'softmax')")),
    }
}

/// A command failure tagged with the exit code it maps to.
enum CmdError {
    Validation(String),
    Runtime(String),
}

type CmdResult<T> = std::result::Result<T, CmdError>;

fn validation<T>(r: Result<T>) -> CmdResult<T> {
    r.map_err(|e| CmdError::Validation(e.to_string()))
}

fn runtime<T>(r: Result<T>) -> CmdResult<T> {
    r.map_err(|e| CmdError::Runtime(e.to_string()))
}

fn require_file(path: &Path, what: &str) -> CmdResult<()> {
    if !path.is_file() {
        return Err(CmdError::Validation(format!(
            "{what} not found: {}",
            path.display()
        )));
    }
    Ok(())
}

/// Parses argv and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success, bad flags are validation
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Preprocess(args) => cmd_preprocess(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Test(args) => cmd_test(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Gradcheck(args) => cmd_gradcheck(&args),
    };
    match outcome {
        Ok(()) => 0,
        Err(CmdError::Validation(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CmdError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

/// Key-value run manifest; the home for volatile values so every other
/// output stays byte-identical across reruns.
struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            entries: vec![
                ("command".into(), command.to_string()),
                ("artifact_version".into(), env!("CARGO_PKG_VERSION").into()),
                ("timestamp_unix".into(), timestamp.to_string()),
            ],
        }
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    fn path(&mut self, key: &str, value: &Path) {
        self.push(key, value.display());
    }

    fn write_beside(&self, primary_output: &Path) -> Result<()> {
        let mut name = primary_output
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        name.push(".manifest");
        let path = primary_output.with_file_name(name);
        self.write_to(&path)
    }

    fn write_to(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(text, "{k} {v}");
        }
        crate::util::write_atomic(path, text.as_bytes())
    }
}

fn cmd_preprocess(args: &PreprocessArgs) -> CmdResult<()> {
    require_file(&args.input, "input file")?;
    require_file(&args.schema, "schema file")?;

    let started = Instant::now();
    let summary = runtime(preprocess::run_pipeline(
        &args.input,
        &args.schema,
        &args.output,
        &args.stats_out,
    ))?;

    let mut manifest = RunManifest::new("preprocess");
    manifest.path("input", &args.input);
    manifest.path("schema", &args.schema);
    manifest.path("output", &args.output);
    manifest.path("stats", &args.stats_out);
    manifest.push("rows_read", summary.rows_read);
    manifest.push("rows_rejected", summary.rows_rejected);
    manifest.push("duplicates_removed", summary.duplicates_removed);
    manifest.push("samples_written", summary.samples_written);
    manifest.push(
        "wall_time_s",
        format!("{:.3}", started.elapsed().as_secs_f64()),
    );
    runtime(manifest.write_beside(&args.output))?;

    println!(
        "read {} rows ({} rejected), wrote {} samples ({} duplicates removed)",
        summary.rows_read,
        summary.rows_rejected,
        summary.samples_written,
        summary.duplicates_removed
    );
    Ok(())
}

fn load_train_inputs(
    data: &Path,
    config_path: &Path,
    head: HeadKind,
    seed_override: Option<u64>,
) -> CmdResult<(EncodedDataset, TrainConfig)> {
    require_file(data, "dataset file")?;
    require_file(config_path, "config file")?;
    let file_config = validation(parse_config_file(config_path))?;
    let (mut config, warnings) = validation(resolve_config(&file_config, head))?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let dataset = validation(EncodedDataset::load(data))?;
    if dataset.is_empty() {
        return Err(CmdError::Validation(format!(
            "dataset {} contains no samples",
            data.display()
        )));
    }
    Ok((dataset, config))
}

fn cmd_train(args: &TrainArgs) -> CmdResult<()> {
    let (dataset, config) = load_train_inputs(&args.data, &args.config, args.head, args.seed)?;

    let started = Instant::now();
    let (ckpt, log) = runtime(train::train(&dataset, &config))?;
    runtime(ckpt.save(&args.checkpoint_out))?;
    runtime(write_metrics_log(&args.log_out, &log))?;

    let mut manifest = RunManifest::new("train");
    manifest.path("data", &args.data);
    manifest.path("config", &args.config);
    manifest.push("head", config.head.name());
    manifest.push("seed", config.seed);
    manifest.path("checkpoint", &args.checkpoint_out);
    manifest.path("log", &args.log_out);
    manifest.push(
        "samples_per_epoch",
        train::truncated_len(dataset.len(), config.batch_size),
    );
    manifest.push(
        "wall_time_s",
        format!("{:.3}", started.elapsed().as_secs_f64()),
    );
    runtime(manifest.write_beside(&args.checkpoint_out))?;

    if let Some(last) = log.last() {
        println!(
            "trained {} epochs; final loss {:.6}, accuracy {:.6}",
            log.len(),
            last.loss,
            last.report.accuracy()
        );
    } else {
        println!("trained 0 epochs; checkpoint holds the initialization");
    }
    Ok(())
}

fn cmd_test(args: &TestArgs) -> CmdResult<()> {
    require_file(&args.data, "dataset file")?;
    require_file(&args.checkpoint, "checkpoint file")?;
    let ckpt = validation(Checkpoint::load(&args.checkpoint))?;
    let dataset = validation(EncodedDataset::load(&args.data))?;
    if dataset.group_widths != ckpt.group_widths {
        return Err(CmdError::Validation(format!(
            "dataset encoding {:?} does not match the checkpoint's {:?}; re-encode with the stats the model was trained on",
            dataset.group_widths, ckpt.group_widths
        )));
    }

    let started = Instant::now();
    let passes = (ckpt.config.epochs as u64).max(1);
    let outcome = runtime(train::evaluate(&dataset, &ckpt, passes))?;
    let text = reports_to_text(&[outcome.per_pass, outcome.accumulated]);
    runtime(crate::util::write_atomic(&args.report_out, text.as_bytes()))?;

    let mut manifest = RunManifest::new("test");
    manifest.path("data", &args.data);
    manifest.path("checkpoint", &args.checkpoint);
    manifest.path("report", &args.report_out);
    manifest.push("passes", passes);
    manifest.push("samples_used", outcome.samples_used);
    manifest.push(
        "wall_time_s",
        format!("{:.3}", started.elapsed().as_secs_f64()),
    );
    runtime(manifest.write_beside(&args.report_out))?;

    println!(
        "evaluated {} samples x {} passes: accuracy {:.6}, loss {:.6}",
        outcome.samples_used,
        passes,
        outcome.per_pass.accuracy(),
        outcome.loss
    );
    Ok(())
}

struct ComparisonSide {
    train_log: Vec<EpochMetrics>,
    eval: train::EvalOutcome,
    train_samples: usize,
    epochs: usize,
}

fn run_side(
    dataset: &EncodedDataset,
    test_set: &EncodedDataset,
    config: &TrainConfig,
) -> Result<(ComparisonSide, Checkpoint)> {
    let (ckpt, train_log) = train::train(dataset, config)?;
    let eval = train::evaluate(test_set, &ckpt, (config.epochs as u64).max(1))?;
    Ok((
        ComparisonSide {
            train_log,
            eval,
            train_samples: train::truncated_len(dataset.len(), config.batch_size),
            epochs: config.epochs,
        },
        ckpt,
    ))
}

/// Side-by-side table, one row per experiment parameter. Run times are not
/// part of the deterministic table; the manifest carries the measured values.
fn comparison_table(svm: &ComparisonSide, softmax: &ComparisonSide) -> String {
    let mut t = String::from("parameter,gru_svm,gru_softmax\n");
    let sum_fp = |log: &[EpochMetrics]| log.iter().map(|m| m.report.false_pos).sum::<u64>();
    let sum_fn = |log: &[EpochMetrics]| log.iter().map(|m| m.report.false_neg).sum::<u64>();
    let final_acc = |log: &[EpochMetrics]| {
        log.last()
            .map(|m| format!("{:.6}", m.report.accuracy()))
            .unwrap_or_else(|| "na".into())
    };
    let final_loss = |log: &[EpochMetrics]| {
        log.last()
            .map(|m| format!("{:.6}", m.loss))
            .unwrap_or_else(|| "na".into())
    };
    let rows: Vec<(&str, String, String)> = vec![
        (
            "data_points_training",
            svm.train_samples.to_string(),
            softmax.train_samples.to_string(),
        ),
        (
            "data_points_testing",
            svm.eval.samples_used.to_string(),
            softmax.eval.samples_used.to_string(),
        ),
        ("epochs", svm.epochs.to_string(), softmax.epochs.to_string()),
        (
            "accuracy_training",
            final_acc(&svm.train_log),
            final_acc(&softmax.train_log),
        ),
        (
            "accuracy_testing",
            format!("{:.6}", svm.eval.per_pass.accuracy()),
            format!("{:.6}", softmax.eval.per_pass.accuracy()),
        ),
        (
            "loss_training",
            final_loss(&svm.train_log),
            final_loss(&softmax.train_log),
        ),
        (
            "loss_testing",
            format!("{:.6}", svm.eval.loss),
            format!("{:.6}", softmax.eval.loss),
        ),
        ("run_time_training_s", "na".into(), "na".into()),
        ("run_time_testing_s", "na".into(), "na".into()),
        (
            "false_positives_training",
            sum_fp(&svm.train_log).to_string(),
            sum_fp(&softmax.train_log).to_string(),
        ),
        (
            "false_positives_testing",
            svm.eval.accumulated.false_pos.to_string(),
            softmax.eval.accumulated.false_pos.to_string(),
        ),
        (
            "false_negatives_training",
            sum_fn(&svm.train_log).to_string(),
            sum_fn(&softmax.train_log).to_string(),
        ),
        (
            "false_negatives_testing",
            svm.eval.accumulated.false_neg.to_string(),
            softmax.eval.accumulated.false_neg.to_string(),
        ),
    ];
    for (name, a, b) in rows {
        let _ = writeln!(t, "{name},{a},{b}");
    }
    t
}

fn cmd_compare(args: &CompareArgs) -> CmdResult<()> {
    require_file(&args.data_train, "training dataset")?;
    require_file(&args.data_test, "testing dataset")?;
    require_file(&args.config_svm, "svm config")?;
    require_file(&args.config_softmax, "softmax config")?;

    let (train_set, svm_config) =
        load_train_inputs(&args.data_train, &args.config_svm, HeadKind::Svm, None)?;
    let (_, softmax_config) = load_train_inputs(
        &args.data_train,
        &args.config_softmax,
        HeadKind::Softmax,
        None,
    )?;
    let test_set = validation(EncodedDataset::load(&args.data_test))?;
    if test_set.group_widths != train_set.group_widths {
        return Err(CmdError::Validation(
            "training and testing datasets have different encodings; preprocess them together and split the encoded file".into(),
        ));
    }
    if svm_config.seed != softmax_config.seed {
        eprintln!(
            "warning: the two configs carry different seeds ({} vs {})",
            svm_config.seed, softmax_config.seed
        );
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CmdError::Validation(format!("cannot create output directory: {e}")))?;

    let started = Instant::now();
    let (svm_side, svm_ckpt) = runtime(run_side(&train_set, &test_set, &svm_config))?;
    let svm_secs = started.elapsed().as_secs_f64();
    let softmax_started = Instant::now();
    let (softmax_side, softmax_ckpt) = runtime(run_side(&train_set, &test_set, &softmax_config))?;
    let softmax_secs = softmax_started.elapsed().as_secs_f64();

    let table = comparison_table(&svm_side, &softmax_side);
    let table_path = args.out_dir.join("compare.csv");
    runtime(crate::util::write_atomic(&table_path, table.as_bytes()))?;
    runtime(write_metrics_log(
        &args.out_dir.join("train_svm.csv"),
        &svm_side.train_log,
    ))?;
    runtime(write_metrics_log(
        &args.out_dir.join("train_softmax.csv"),
        &softmax_side.train_log,
    ))?;
    runtime(svm_ckpt.save(&args.out_dir.join("svm.ckpt")))?;
    runtime(softmax_ckpt.save(&args.out_dir.join("softmax.ckpt")))?;

    let mut manifest = RunManifest::new("compare");
    manifest.path("data_train", &args.data_train);
    manifest.path("data_test", &args.data_test);
    manifest.path("config_svm", &args.config_svm);
    manifest.path("config_softmax", &args.config_softmax);
    manifest.path("table", &table_path);
    manifest.push("seed_svm", svm_config.seed);
    manifest.push("seed_softmax", softmax_config.seed);
    manifest.push("wall_time_svm_s", format!("{svm_secs:.3}"));
    manifest.push("wall_time_softmax_s", format!("{softmax_secs:.3}"));
    runtime(manifest.write_to(&args.out_dir.join("manifest.txt")))?;

    print!("{table}");
    Ok(())
}

fn cmd_gradcheck(args: &GradcheckArgs) -> CmdResult<()> {
    if args.trials == 0 {
        return Err(CmdError::Validation("--trials must be at least 1".into()));
    }
    let mut worst: f64 = 0.0;
    for head in [HeadKind::Svm, HeadKind::Softmax] {
        let config = GradCheckConfig {
            cell_size: args.cell_size,
            seq_len: args.seq_len,
            input_width: args.input_width,
            trials: args.trials,
            seed: args.seed,
            head,
            svm_c: 0.5,
        };
        let report = validation(gradient_check(&config))?;
        println!(
            "{} head: max relative error {:.6e} over {} trials",
            head.name(),
            report.max_rel_error,
            args.trials
        );
        worst = worst.max(report.max_rel_error);
    }
    if worst >= GRADCHECK_TOLERANCE {
        return Err(CmdError::Runtime(format!(
            "gradient check failed: max relative error {worst:.6e} >= {GRADCHECK_TOLERANCE:e}"
        )));
    }
    println!("gradient check passed (tolerance {GRADCHECK_TOLERANCE:e})");
    Ok(())
}
