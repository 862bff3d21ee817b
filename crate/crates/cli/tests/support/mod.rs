//! Drives the `rejinf` binary from integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

/// A small but complete config: 3000 applications, tiny networks, a few
/// epochs. `[benchmark]` is left for the caller to append.
pub const SMALL: &str = r#"
seed = 11

[generator]
n_applications = 3000
dim = 3
default_rate = 0.25
bayes_auc = 0.85
accept_rate = 0.6

[generator.accept_rule]
weight = 1.0
noise = 1.0

[design]
train_frac = 0.7
calibration_frac = 0.1
balance = true

[models.model1]
learning_rate = 3e-3
epochs = 8
pretrain_epochs = 2
batch_size = 64

[models.model1.arch]
encoder_hidden = [8]
decoder_hidden = [8]
gmm_hidden = [4]
classifier_hidden = [8]
latent_dim = 2

[models.model2]
learning_rate = 3e-3
epochs = 8
pretrain_epochs = 2
batch_size = 64
predict_samples = 5

[models.model2.arch]
encoder_hidden = [8]
decoder_hidden = [8]
gmm_hidden = [4]
aux_hidden = [8]
classifier_hidden = [8]
latent_dim = 2
aux_dim = 2

[models.mlp]
hidden = [8]
learning_rate = 3e-3
epochs = 30

[models.baselines]
max_rounds = 2
"#;

pub fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

pub fn rejinf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rejinf"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

/// Runs a command that must succeed and returns its stdout.
#[track_caller]
pub fn ok(args: &[&str]) -> String {
    let out = rejinf(args);
    assert!(
        out.status.success(),
        "rejinf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Runs a command that must fail and returns its stderr.
#[track_caller]
pub fn fails(args: &[&str]) -> String {
    let out = rejinf(args);
    assert!(
        !out.status.success(),
        "rejinf {args:?} unexpectedly succeeded"
    );
    String::from_utf8(out.stderr).unwrap()
}

/// Every file in `dir`, by name.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a CSV file without its header.
pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
