#![allow(dead_code)]

use std::path::Path;

use nlab::config::ExperimentConfig;

/// A run small enough for debug-build tests: 4 classes x 8 glyphs, 3 epochs.
pub fn tiny(strategy: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    for o in [
        "data.per_class=8",
        "data.test_per_class=4",
        "train.epochs=3",
        "train.warmup=1",
        "train.batch_size=8",
        "train.filters=2",
        "train.hidden=8",
        "noise.rate=0.5",
        "dividemix.rampup=1",
        "output.histogram_epochs=0,2",
    ] {
        cfg.apply_override(o).unwrap();
    }
    cfg.set("train", "strategy", strategy).unwrap();
    cfg.output.dir = out.to_path_buf();
    cfg
}

/// The same settings as `--set` flags for the binary.
pub fn tiny_flags() -> Vec<String> {
    [
        "data.per_class=8",
        "data.test_per_class=4",
        "train.epochs=3",
        "train.warmup=1",
        "train.batch_size=8",
        "train.filters=2",
        "train.hidden=8",
        "dividemix.rampup=1",
    ]
    .iter()
    .flat_map(|s| ["--set".to_string(), s.to_string()])
    .collect()
}
