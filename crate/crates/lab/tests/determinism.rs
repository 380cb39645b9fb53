mod common;

use std::fs;

use nlab::metrics::{checkpoint_path, emit_all, seed_dir};
use nlab::run::run;

fn outputs(strategy: &str, seed: u64) -> (Vec<u8>, Vec<Vec<u8>>) {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::tiny(strategy, dir.path());
    cfg.seeds = vec![seed];
    let results = run(&cfg).unwrap();
    emit_all(&results, &cfg, dir.path()).unwrap();
    let sd = seed_dir(dir.path(), seed);
    let nets = (0..results[0].nets.len())
        .map(|k| fs::read(checkpoint_path(&sd, k)).unwrap())
        .collect();
    (fs::read(sd.join("epochs.csv")).unwrap(), nets)
}

#[test]
fn repeated_runs_are_byte_identical() {
    for strategy in ["ce", "dividemix-WS-WAW", "coteaching+-WS", "mdyrh-SS"] {
        let a = outputs(strategy, 9);
        let b = outputs(strategy, 9);
        assert_eq!(a, b, "{strategy}");
    }
    assert_ne!(outputs("dividemix-WS-WAW", 9).1, outputs("dividemix-WS-WAW", 10).1);
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::tiny("dividemix", dir.path());
    cfg.seeds = vec![0, 1, 2];
    let parallel = run(&cfg).unwrap();
    for (r, &s) in parallel.iter().zip(&cfg.seeds) {
        let single = nlab::run::run_seed(&cfg, s).unwrap();
        assert_eq!(r.seed, s);
        assert_eq!(r.epochs, single.epochs);
        assert_eq!(r.nets, single.nets);
    }
}
