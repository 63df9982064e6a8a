//! Shared synthetic-data builders for the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use grusvm::preprocess::{EncodedDataset, EncodedSample};

/// Schema for the synthetic traffic format used across the tests.
pub const SCHEMA_TEXT: &str = "\
delimiter comma
column duration continuous
column protocol categorical
column service categorical
column src_bytes continuous
column label label
positive attack
";

pub const PROTOCOLS: [&str; 3] = ["tcp", "udp", "icmp"];
pub const SERVICES: [&str; 5] = ["http", "smtp", "dns", "ssh", "other"];

/// Synthetic raw traffic rows in the schema above. Durations spread over a
/// grid so decile bins are well populated; roughly 40% of rows are attacks.
pub fn raw_traffic(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..n {
        let duration = rng.gen_range(0..100_000) as f64 / 100.0;
        let protocol = PROTOCOLS[rng.gen_range(0..PROTOCOLS.len())];
        let service = SERVICES[rng.gen_range(0..SERVICES.len())];
        let src_bytes = rng.gen_range(0..1_000_000);
        let label = if rng.gen_bool(0.4) { "attack" } else { "normal" };
        out.push_str(&format!(
            "{duration},{protocol},{service},{src_bytes},{label}\n"
        ));
    }
    out
}

/// An encoded dataset whose label is a deterministic function of the first
/// feature group's decile bin (upper half = intrusion). The remaining groups
/// are seeded noise. Bins are covered evenly, so classes are balanced.
pub fn separable_encoded(n: usize, seed: u64) -> EncodedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| {
            let bin = i % 10;
            EncodedSample {
                indices: vec![
                    bin,
                    rng.gen_range(0..3),
                    rng.gen_range(0..5),
                    rng.gen_range(0..10),
                ],
                label: u8::from(bin >= 5),
            }
        })
        .collect();
    EncodedDataset {
        group_widths: vec![10, 3, 5, 10],
        samples,
    }
}

/// Config file text with the given hyperparameters, SVM variant.
pub fn config_text(
    batch: usize,
    cell: usize,
    keep: f64,
    epochs: usize,
    lr: f64,
    svm_c: Option<f64>,
    seed: u64,
) -> String {
    let mut text = format!(
        "batch_size {batch}\ncell_size {cell}\ndropout_rate {keep}\nepochs {epochs}\nlearning_rate {lr}\nseed {seed}\n"
    );
    if let Some(c) = svm_c {
        text.push_str(&format!("svm_c {c}\n"));
    }
    text
}
