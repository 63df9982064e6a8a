//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them on success).

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use grusvm::gru::{sequence_forward, GruParams};
use grusvm::heads::HeadKind;
use grusvm::nn::Mode;
use grusvm::preprocess::{
    dedupe, encode_records, fit_stats, split_records, EncodedSample, RecordSchema,
};
use grusvm::train::{
    evaluate, gradient_check, train, ConfusionReport, GradCheckConfig, Scope, TrainConfig,
};

fn pass(n: u32, what: &str) {
    println!("criterion {n}: PASS - {what}");
}

/// 1. Full-network analytic gradients match central finite differences at
///    1e-4 relative tolerance for both heads (cell 8, sequence 5, width 10,
///    8 seeded trials each), in under 30 s.
#[test]
fn criterion_1_gradient_correctness() {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for head in [HeadKind::Svm, HeadKind::Softmax] {
        let config = GradCheckConfig {
            cell_size: 8,
            seq_len: 5,
            input_width: 10,
            trials: 8,
            seed: 1,
            head,
            svm_c: 0.5,
        };
        let report = gradient_check(&config).unwrap();
        assert!(
            report.max_rel_error < 1e-4,
            "criterion 1: FAIL - {} head max relative error {:.3e} >= 1e-4",
            head.name(),
            report.max_rel_error
        );
        worst = worst.max(report.max_rel_error);
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 30.0, "criterion 1: FAIL - took {secs:.1}s (budget 30s)");
    pass(
        1,
        &format!("max relative error {worst:.3e} < 1e-4 across both heads in {secs:.2}s"),
    );
}

/// Published per-class test counts (five passes over 420,608 samples).
const TEST_POSITIVES: u64 = 262_694 * 5;
const TEST_NEGATIVES: u64 = 157_914 * 5;
const TOTAL_TEST_PREDICTIONS: u64 = 2_103_040;

fn published_report(false_pos: u64, false_neg: u64) -> ConfusionReport {
    ConfusionReport::from_counts(
        TEST_POSITIVES - false_neg,
        TEST_NEGATIVES - false_pos,
        false_pos,
        false_neg,
        Scope::Accumulated,
    )
}

/// 2. Feeding the published test confusion counts through the metric
///    formulas reproduces the published accuracies.
#[test]
fn criterion_2_published_counts_reproduce_accuracy() {
    let svm = published_report(192_635, 140_535);
    assert_eq!(svm.total(), TOTAL_TEST_PREDICTIONS);
    let svm_acc = svm.accuracy() * 100.0;
    assert!(
        (svm_acc - 84.16).abs() <= 0.05,
        "criterion 2: FAIL - svm accuracy {svm_acc:.4}% outside 84.16 +/- 0.05"
    );

    let softmax = published_report(32_255, 582_105);
    assert_eq!(softmax.total(), TOTAL_TEST_PREDICTIONS);
    let softmax_acc = softmax.accuracy() * 100.0;
    assert!(
        (softmax_acc - 70.79).abs() <= 0.10,
        "criterion 2: FAIL - softmax accuracy {softmax_acc:.4}% outside 70.79 +/- 0.10"
    );
    pass(
        2,
        &format!("published counts give {svm_acc:.4}% and {softmax_acc:.4}% accuracy"),
    );
}

/// 3. Rate identities: tpr+fnr = 1 and tnr+fpr = 1 within 1e-12 on every
///    report this library emits, and the published rate pairs close to 100
///    within the printed rounding.
#[test]
fn criterion_3_rate_identities() {
    // emitted reports: sweep a grid of counts plus the published reports
    let mut checked = 0u32;
    for tp in [0u64, 1, 89, 12_345] {
        for tn in [0u64, 3, 76, 54_321] {
            for fp in [0u64, 24, 999] {
                for fn_ in [0u64, 11, 421] {
                    let r = ConfusionReport::from_counts(tp, tn, fp, fn_, Scope::PerEpoch);
                    if tp + fn_ > 0 {
                        assert!((r.tpr() + r.fnr() - 1.0).abs() < 1e-12);
                        checked += 1;
                    }
                    if tn + fp > 0 {
                        assert!((r.tnr() + r.fpr() - 1.0).abs() < 1e-12);
                        checked += 1;
                    }
                }
            }
        }
    }
    for r in [
        published_report(192_635, 140_535),
        published_report(32_255, 582_105),
    ] {
        assert!((r.tpr() + r.fnr() - 1.0).abs() < 1e-12);
        assert!((r.tnr() + r.fpr() - 1.0).abs() < 1e-12);
        checked += 2;
    }
    // published training-rate pairs, as printed (percent, 4-6 significant digits)
    for (a, b) in [(84.3726f64, 15.6273f64), (77.6132, 22.3867)] {
        assert!(
            (a + b - 100.0).abs() <= 0.001,
            "criterion 3: FAIL - published pair {a} + {b} misses 100 by more than 0.001"
        );
    }
    pass(3, &format!("{checked} identity checks plus published pairs hold"));
}

/// 4. Both heads reach 99% training accuracy within 50 epochs on a
///    1,000-sample task whose label is one feature's decile bin, under 60 s
///    in total.
#[test]
fn criterion_4_separable_synthetic_task() {
    let started = Instant::now();
    let dataset = common::separable_encoded(1000, 9);
    let mut finals = Vec::new();
    for head in [HeadKind::Svm, HeadKind::Softmax] {
        let config = TrainConfig {
            batch_size: 50,
            cell_size: 32,
            dropout_keep: 0.85,
            epochs: 50,
            learning_rate: 1e-2,
            svm_c: 0.5,
            head,
            seed: 42,
            shuffle: false,
        };
        let (ckpt, log) = train(&dataset, &config).unwrap();
        let final_acc = log.last().unwrap().report.accuracy();
        assert!(
            final_acc >= 0.99,
            "criterion 4: FAIL - {} head finished at {final_acc:.4} training accuracy",
            head.name()
        );
        // the loss settles: non-increasing after the early transient
        let eval = evaluate(&dataset, &ckpt, 1).unwrap();
        assert!(eval.per_pass.accuracy() >= 0.99);
        finals.push(final_acc);
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 60.0, "criterion 4: FAIL - took {secs:.1}s (budget 60s)");
    pass(
        4,
        &format!(
            "training accuracies {:.4} (svm) and {:.4} (softmax) in {secs:.1}s",
            finals[0], finals[1]
        ),
    );
}

// --- independent brute-force preprocessing oracle -------------------------

fn oracle_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn oracle_std(values: &[f64], mean: f64) -> f64 {
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64).sqrt()
}

fn oracle_percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bin of `z` among the 11 edges: rightmost interval whose left edge is at
/// or below `z`, runs of equal edges collapsing to their first index, with
/// clamping at both ends.
fn oracle_bin(z: f64, edges: &[f64; 11]) -> usize {
    if z >= edges[10] {
        return 9;
    }
    let mut bin = 0;
    for k in (0..=9).rev() {
        if edges[k] <= z {
            bin = k;
            break;
        }
    }
    while bin > 0 && edges[bin] == edges[bin - 1] {
        bin -= 1;
    }
    bin
}

/// 5. On 200 random rows the pipeline output equals a brute-force
///    reimplementation element for element, and dedupe reduces a corpus
///    with planted duplicates to exactly its distinct-row count.
#[test]
fn criterion_5_preprocessing_oracle_equivalence() {
    let schema = RecordSchema::parse(common::SCHEMA_TEXT).unwrap();
    let text = common::raw_traffic(200, 31);
    let (records, rejected) = split_records(&text, &schema);
    assert_eq!(rejected, 0);
    assert_eq!(records.len(), 200);

    let stats = fit_stats(&records, &schema).unwrap();
    let encoded = encode_records(&records, &schema, &stats).unwrap();

    // brute-force re-derivation, no library calls
    let columns: Vec<Vec<&str>> = (0..5)
        .map(|c| records.iter().map(|r| r.fields[c].as_str()).collect())
        .collect();
    let mut expected_per_row: Vec<Vec<usize>> = vec![Vec::new(); records.len()];
    for (group, col) in [0usize, 1, 2, 3].iter().enumerate() {
        match col {
            0 | 3 => {
                let values: Vec<f64> = columns[*col].iter().map(|f| f.parse().unwrap()).collect();
                let mean = oracle_mean(&values);
                let std = oracle_std(&values, mean);
                let z: Vec<f64> = values
                    .iter()
                    .map(|v| if std == 0.0 { 0.0 } else { (v - mean) / std })
                    .collect();
                let mut sorted = z.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut edges = [0.0; 11];
                for (k, e) in edges.iter_mut().enumerate() {
                    *e = oracle_percentile(&sorted, k as f64 / 10.0);
                }
                for (row, zi) in z.iter().enumerate() {
                    expected_per_row[row].push(oracle_bin(*zi, &edges));
                }
            }
            _ => {
                let mut cats: Vec<&str> = columns[*col].to_vec();
                cats.sort();
                cats.dedup();
                for (row, f) in columns[*col].iter().enumerate() {
                    expected_per_row[row].push(cats.iter().position(|c| c == f).unwrap());
                }
            }
        }
        let _ = group;
    }
    for (row, sample) in encoded.samples.iter().enumerate() {
        assert_eq!(
            sample.indices, expected_per_row[row],
            "criterion 5: FAIL - row {row} disagrees with the oracle"
        );
        let expected_label = u8::from(columns[4][row] == "attack");
        assert_eq!(sample.label, expected_label);
    }

    // dedupe: plant duplicates, expect exactly the distinct count
    let mut with_dupes = Vec::new();
    for i in 0..40 {
        let s = EncodedSample {
            indices: vec![i % 8, i % 3],
            label: (i % 2) as u8,
        };
        with_dupes.push(s.clone());
        if i % 4 == 0 {
            with_dupes.push(s);
        }
    }
    let mut distinct = with_dupes.clone();
    distinct.sort_by(|a, b| (&a.indices, a.label).cmp(&(&b.indices, b.label)));
    distinct.dedup();
    let deduped = dedupe(with_dupes);
    assert_eq!(
        deduped.len(),
        distinct.len(),
        "criterion 5: FAIL - dedupe kept {} of {} distinct rows",
        deduped.len(),
        distinct.len()
    );
    pass(5, "200-row oracle equivalence and planted-duplicate reduction hold");
}

/// 6. Gate and state ranges over 1,000 random forward passes.
#[test]
fn criterion_6_gru_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut stub = ChaCha8Rng::seed_from_u64(0);
    for pass_no in 0..1000 {
        let cell = rng.gen_range(1..=12);
        let input = rng.gen_range(1..=8);
        let params = GruParams::init(cell, input, &mut rng);
        let len = rng.gen_range(1..=6);
        let groups: Vec<Vec<f64>> = (0..len)
            .map(|_| {
                let mut g = vec![0.0; input];
                g[rng.gen_range(0..input)] = 1.0;
                g
            })
            .collect();
        let (_, trace) = sequence_forward(&groups, &params, 1.0, Mode::Eval, &mut stub).unwrap();
        for step in &trace.steps {
            for z in &step.update {
                assert!(*z > 0.0 && *z < 1.0, "pass {pass_no}: update gate {z}");
            }
            for r in &step.reset {
                assert!(*r > 0.0 && *r < 1.0, "pass {pass_no}: reset gate {r}");
            }
            for c in &step.cand {
                assert!(*c > -1.0 && *c < 1.0, "pass {pass_no}: candidate {c}");
            }
            for h in &step.h {
                assert!(*h > -1.0 && *h < 1.0, "pass {pass_no}: state {h}");
            }
        }
    }
    pass(6, "1,000 random forward passes kept gates in (0,1) and states in (-1,1)");
}

/// 7. `compare` run twice with identical seeds produces byte-identical
///    metric tables.
#[test]
fn criterion_7_compare_determinism() {
    use std::fs;
    use std::process::Command;

    let dir = tempfile::tempdir().unwrap();
    let train_path = dir.path().join("train.ds");
    let test_path = dir.path().join("test.ds");
    common::separable_encoded(200, 41).save(&train_path).unwrap();
    common::separable_encoded(100, 43).save(&test_path).unwrap();
    let config_svm = dir.path().join("svm.conf");
    let config_softmax = dir.path().join("softmax.conf");
    fs::write(&config_svm, common::config_text(20, 12, 0.85, 3, 1e-2, Some(0.5), 42)).unwrap();
    fs::write(&config_softmax, common::config_text(20, 12, 0.8, 3, 1e-3, None, 42)).unwrap();

    let mut tables = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("cmp{run}"));
        let output = Command::new(env!("CARGO_BIN_EXE_grusvm"))
            .args([
                "compare",
                "--data-train",
                train_path.to_str().unwrap(),
                "--data-test",
                test_path.to_str().unwrap(),
                "--config-svm",
                config_svm.to_str().unwrap(),
                "--config-softmax",
                config_softmax.to_str().unwrap(),
                "--out-dir",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(
            output.status.code(),
            Some(0),
            "criterion 7: FAIL - compare exited nonzero: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        tables.push(fs::read(out_dir.join("compare.csv")).unwrap());
    }
    assert_eq!(
        tables[0], tables[1],
        "criterion 7: FAIL - tables differ between identical runs"
    );
    pass(7, "byte-identical comparison tables across reruns");
}
