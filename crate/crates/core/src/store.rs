//! Append-only run store.
//!
//! Layout: `<root>/index.json` and `<root>/<id>/{manifest.json, artifacts...}`.
//! A run directory is assembled under a temporary name and renamed into
//! place; the index is replaced by write-then-rename. Runs are never
//! modified once stored.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Format versions of the modules whose output lands in a run.
pub const MODULE_VERSIONS: &[(&str, u32)] = &[
    ("grid", 1),
    ("kernel", 1),
    ("noise", 1),
    ("model", 1),
    ("integrator", 1),
    ("ensemble", 1),
    ("theory", 1),
    ("store", 1),
];

pub const MANIFEST: &str = "manifest.json";
pub const INDEX: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_hash: String,
    pub seed: u64,
    pub command: String,
    pub code_version: String,
    pub module_versions: BTreeMap<String, u32>,
    pub wall_clock_secs: f64,
    pub created_unix: u64,
    pub artifacts: Vec<Artifact>,
    #[serde(default)]
    pub summary: BTreeMap<String, f64>,
}

/// Content handed to [`RunStore::store_run`].
#[derive(Debug, Clone, Default)]
pub struct NewRun {
    pub config_hash: String,
    pub seed: u64,
    pub command: String,
    pub wall_clock_secs: f64,
    /// `(file name, contents)`
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub summary: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub id: String,
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunRecord {
    pub fn artifact_path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct IndexEntry {
    id: String,
    config_hash: String,
    seed: u64,
    command: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run id: a prefix of the hash of everything that determines the outputs.
pub fn run_id(config_hash: &str, seed: u64, command: &str) -> String {
    let key = format!("{config_hash}\n{seed}\n{CODE_VERSION}\n{command}");
    sha256_hex(key.as_bytes())[..16].to_string()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(RunStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn read_index(&self) -> Result<Vec<IndexEntry>> {
        let path = self.root.join(INDEX);
        if !path.exists() {
            return Ok(Vec::new());
        }
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    /// Stores a run and returns its record. Storing identical artifacts
    /// again returns the existing record; different artifacts under the same
    /// id are an integrity error.
    pub fn store_run(&self, run: &NewRun) -> Result<RunRecord> {
        let id = run_id(&run.config_hash, run.seed, &run.command);
        let dir = self.root.join(&id);
        let artifacts: Vec<Artifact> = run
            .artifacts
            .iter()
            .map(|(name, bytes)| Artifact {
                name: name.clone(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len() as u64,
            })
            .collect();
        for a in &artifacts {
            if a.name == MANIFEST || a.name.contains(['/', '\\']) || a.name.starts_with('.') {
                return Err(Error::invalid(format!("invalid artifact name `{}`", a.name)));
            }
        }

        if dir.exists() {
            let existing = self.load(&id)?;
            if existing.manifest.artifacts != artifacts {
                return Err(Error::Integrity(format!(
                    "run {id} already exists with different artifacts; refusing to overwrite"
                )));
            }
            self.index_insert(&existing)?;
            return Ok(existing);
        }

        let manifest = RunManifest {
            run_id: id.clone(),
            config_hash: run.config_hash.clone(),
            seed: run.seed,
            command: run.command.clone(),
            code_version: CODE_VERSION.into(),
            module_versions: MODULE_VERSIONS.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            wall_clock_secs: run.wall_clock_secs,
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            artifacts,
            summary: run.summary.clone(),
        };
        let staging = self.root.join(format!(".staging-{id}-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging)?;
        for (name, bytes) in &run.artifacts {
            fs::write(staging.join(name), bytes)?;
        }
        fs::write(staging.join(MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
        fs::rename(&staging, &dir)?;
        let record = RunRecord { id, dir, manifest };
        self.index_insert(&record)?;
        Ok(record)
    }

    fn index_insert(&self, record: &RunRecord) -> Result<()> {
        let mut index = self.read_index()?;
        if index.iter().any(|e| e.id == record.id) {
            return Ok(());
        }
        index.push(IndexEntry {
            id: record.id.clone(),
            config_hash: record.manifest.config_hash.clone(),
            seed: record.manifest.seed,
            command: record.manifest.command.clone(),
        });
        index.sort_by(|a, b| a.id.cmp(&b.id));
        write_atomic(&self.root.join(INDEX), &serde_json::to_vec_pretty(&index)?)
    }

    /// Loads a run and checks every artifact against its manifest hash.
    pub fn load(&self, id: &str) -> Result<RunRecord> {
        let dir = self.root.join(id);
        let manifest_path = dir.join(MANIFEST);
        if !manifest_path.exists() {
            return Err(Error::RunNotFound(id.into()));
        }
        let manifest: RunManifest = serde_json::from_slice(&fs::read(&manifest_path)?)?;
        for a in &manifest.artifacts {
            let path = dir.join(&a.name);
            let bytes = fs::read(&path)
                .map_err(|_| Error::Integrity(format!("missing artifact {}", path.display())))?;
            if sha256_hex(&bytes) != a.sha256 {
                return Err(Error::Integrity(format!("hash mismatch for {}", path.display())));
            }
        }
        Ok(RunRecord {
            id: id.into(),
            dir,
            manifest,
        })
    }

    pub fn read_artifact(&self, id: &str, name: &str) -> Result<Vec<u8>> {
        let record = self.load(id)?;
        if !record.manifest.artifacts.iter().any(|a| a.name == name) {
            return Err(Error::Integrity(format!("run {id} has no artifact {name}")));
        }
        Ok(fs::read(record.artifact_path(name))?)
    }

    pub fn find_by_config_hash(&self, hash: &str) -> Result<Vec<RunRecord>> {
        self.read_index()?
            .iter()
            .filter(|e| e.config_hash == hash)
            .map(|e| self.load(&e.id))
            .collect()
    }

    pub fn list(&self) -> Result<Vec<String>> {
        Ok(self.read_index()?.into_iter().map(|e| e.id).collect())
    }

    /// Compares the `series.csv` artifacts of two runs.
    pub fn diff_runs(&self, a: &str, b: &str) -> Result<RunDiff> {
        let sa = parse_series_csv(&self.read_artifact(a, "series.csv")?)?;
        let sb = parse_series_csv(&self.read_artifact(b, "series.csv")?)?;
        Ok(diff_series(&sa, &sb))
    }
}

/// One row of a scalar series CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCsvRow {
    pub t: f64,
    pub functional: String,
    pub estimate: f64,
    pub stderr: f64,
    pub censored: bool,
    pub blown_fraction: f64,
}

/// Parses the `t,functional,estimate,stderr,censored,blown_fraction` format.
pub fn parse_series_csv(bytes: &[u8]) -> Result<Vec<SeriesCsvRow>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Integrity(format!("series.csv is not UTF-8: {e}")))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "t,functional,estimate,stderr,censored,blown_fraction" {
        return Err(Error::Integrity(format!("unexpected series.csv header `{header}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(k, line)| {
            let bad = || Error::Integrity(format!("series.csv line {}: `{line}`", k + 2));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(SeriesCsvRow {
                t: num(cols[0])?,
                functional: cols[1].to_string(),
                estimate: num(cols[2])?,
                stderr: num(cols[3])?,
                censored: cols[4].parse().map_err(|_| bad())?,
                blown_fraction: num(cols[5])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalDiff {
    pub functional: String,
    pub rows: usize,
    pub max_abs_deviation: f64,
    /// Largest `|a − b| / sqrt(se_a² + se_b²)` over rows where neither side is censored.
    pub max_z: f64,
    /// Some row deviates by more than three combined standard errors.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiff {
    pub functionals: Vec<FunctionalDiff>,
    /// `(t, functional)` keys present in only one run.
    pub unmatched: usize,
}

impl RunDiff {
    pub fn any_flagged(&self) -> bool {
        self.functionals.iter().any(|f| f.flagged)
    }
}

pub fn diff_series(a: &[SeriesCsvRow], b: &[SeriesCsvRow]) -> RunDiff {
    let key = |r: &SeriesCsvRow| (r.functional.clone(), r.t.to_bits());
    let right: BTreeMap<_, _> = b.iter().map(|r| (key(r), r)).collect();
    let mut per: BTreeMap<String, FunctionalDiff> = BTreeMap::new();
    let mut matched = 0;
    for ra in a {
        let Some(rb) = right.get(&key(ra)) else { continue };
        matched += 1;
        let e = per.entry(ra.functional.clone()).or_insert_with(|| FunctionalDiff {
            functional: ra.functional.clone(),
            rows: 0,
            max_abs_deviation: 0.0,
            max_z: 0.0,
            flagged: false,
        });
        e.rows += 1;
        let d = (ra.estimate - rb.estimate).abs();
        let d = if d.is_nan() { f64::INFINITY } else { d };
        e.max_abs_deviation = e.max_abs_deviation.max(d);
        if !ra.censored && !rb.censored {
            let se = ra.stderr.hypot(rb.stderr);
            let z = if d == 0.0 { 0.0 } else if se > 0.0 { d / se } else { f64::INFINITY };
            e.max_z = e.max_z.max(z);
            e.flagged |= z > 3.0;
        }
    }
    RunDiff {
        functionals: per.into_values().collect(),
        unmatched: a.len() + b.len() - 2 * matched,
    }
}
