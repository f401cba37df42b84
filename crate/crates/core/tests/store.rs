use std::collections::BTreeMap;
use std::path::PathBuf;

use spde_lab_core::store::{diff_series, parse_series_csv, NewRun, RunStore};
use spde_lab_core::{Experiment, ExperimentConfig};

fn linear(seed: u64) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/linear.toml");
    let mut cfg = ExperimentConfig::from_path(&path).unwrap();
    cfg.ensemble.base_seed = seed;
    cfg.ensemble.m_paths = 200;
    cfg
}

fn stored(store: &RunStore, cfg: &ExperimentConfig) -> String {
    let result = Experiment::new(cfg.clone()).unwrap().ensemble().unwrap();
    let run = NewRun {
        config_hash: cfg.hash(),
        seed: cfg.ensemble.base_seed,
        command: "ensemble".into(),
        wall_clock_secs: 0.0,
        artifacts: vec![("series.csv".into(), result.series.to_csv().into_bytes())],
        summary: BTreeMap::new(),
    };
    store.store_run(&run).unwrap().id
}

#[test]
fn seeds_of_one_config_agree_statistically() {
    let tmp = tempfile::tempdir().unwrap();
    let store = RunStore::open(tmp.path()).unwrap();
    let a = stored(&store, &linear(1));
    let b = stored(&store, &linear(2));
    assert_ne!(a, b);
    let found = store.find_by_config_hash(&linear(1).hash()).unwrap();
    assert_eq!(found.len(), 2);
    let diff = store.diff_runs(&a, &b).unwrap();
    assert_eq!(diff.unmatched, 0);
    for f in &diff.functionals {
        assert!(f.max_z <= 3.0, "{f:?}");
        if f.max_abs_deviation > 0.0 {
            assert!(f.max_z > 0.0);
        }
    }
    let same = store.diff_runs(&a, &a).unwrap();
    assert!(same.functionals.iter().all(|f| f.max_abs_deviation == 0.0));
}

#[test]
fn rerunning_a_config_reproduces_bytes() {
    let cfg = linear(3);
    let one = Experiment::new(cfg.clone()).unwrap().ensemble().unwrap().series.to_csv();
    let two = Experiment::new(cfg).unwrap().ensemble().unwrap().series.to_csv();
    assert_eq!(one, two);
    let rows = parse_series_csv(one.as_bytes()).unwrap();
    assert!(diff_series(&rows, &rows).functionals.iter().all(|f| !f.flagged));
}

#[test]
fn unknown_hash_finds_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let store = RunStore::open(tmp.path()).unwrap();
    assert!(store.find_by_config_hash("0000").unwrap().is_empty());
}
