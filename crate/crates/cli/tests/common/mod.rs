#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spde-lab"))
}

pub fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn run(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = bin();
    cmd.args(args).env_remove("SPDE_LAB_THREADS");
    if let Some(n) = threads {
        cmd.env("SPDE_LAB_THREADS", n.to_string());
    }
    cmd.output().expect("spawn spde-lab")
}

/// The single run directory below a store root.
pub fn only_run(store: &Path) -> PathBuf {
    let runs: Vec<PathBuf> = std::fs::read_dir(store)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    assert_eq!(runs.len(), 1, "{runs:?}");
    runs.into_iter().next().unwrap()
}
