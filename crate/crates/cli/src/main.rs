//! `spde-lab`: runs configured experiments, evaluates the analytic oracles,
//! verifies the acceptance suites and renders stored runs.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a
//! verification suite fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use spde_lab_core::report::{link_bounds, markdown, plot_csv, ReportInput};
use spde_lab_core::store::{parse_series_csv, NewRun, RunStore};
use spde_lab_core::{verify, Experiment, ExperimentConfig, OracleResult, PathResult};

const THREADS_VAR: &str = "SPDE_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(name = "spde-lab", version, about = "Stochastic heat equation experiments and blowup oracles")]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `ensemble.base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path and store it as a run.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Path index within the seeded ensemble.
        #[arg(long, default_value_t = 0)]
        path_index: u64,
    },
    /// Run the Monte Carlo ensemble and store series, oracles and a report.
    Ensemble {
        #[command(flatten)]
        run: RunArgs,
        /// Overrides `ensemble.m_paths`.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Print the applicable oracle reports as JSON.
    Thresholds {
        #[arg(long)]
        config: PathBuf,
        /// Write the JSON to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite (`acceptance` or `quick`).
    Verify {
        #[arg(default_value = "acceptance")]
        suite: String,
        /// Write the results as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a stored run as markdown plus plot-ready CSV.
    Report {
        /// Run directory, `<store>/<id>`.
        run_dir: PathBuf,
        /// Directory for `report.md` and `plot.csv`; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_VAR} must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let quiet = cli.quiet;
    let say = |msg: String| {
        if !quiet {
            println!("{msg}");
        }
    };
    match cli.command {
        Command::Simulate { run, path_index } => {
            let (cfg, exp) = load(&run, None)?;
            let start = Instant::now();
            let path = exp.simulate(path_index);
            let record = store_simulation(&cfg, &path, path_index, start)?;
            say(format!("{:?}", path.verdict));
            say(record.display().to_string());
        }
        Command::Ensemble { run, paths } => {
            let (cfg, exp) = load(&run, paths)?;
            let record = store_ensemble(&cfg, &exp)?;
            say(record.display().to_string());
        }
        Command::Thresholds { config, out } => {
            let exp = Experiment::new(read_config(&config)?)?;
            let json = serde_json::to_string_pretty(&exp.oracles()?)? + "\n";
            match out {
                Some(path) => std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{json}"),
            }
        }
        Command::Verify { suite, out } => {
            let mut results = Vec::new();
            for &id in verify::suite_ids(&suite)? {
                let r = verify::run_criterion(id)?;
                say(r.to_string());
                results.push(r);
            }
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&results)?)?;
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            say(format!("{} passed, {failed} failed", results.len() - failed));
            if failed > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report { run_dir, out } => {
            let (md, csv) = render_report(&run_dir)?;
            match out {
                Some(dir) => {
                    if dir.canonicalize().ok() == run_dir.canonicalize().ok() {
                        bail!("refusing to write into the run directory; stored runs are immutable");
                    }
                    std::fs::create_dir_all(&dir)?;
                    std::fs::write(dir.join("report.md"), md)?;
                    std::fs::write(dir.join("plot.csv"), csv)?;
                    say(dir.display().to_string());
                }
                None => print!("{md}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_path(path).with_context(|| format!("loading {}", path.display()))
}

fn load(run: &RunArgs, paths: Option<usize>) -> Result<(ExperimentConfig, Experiment)> {
    let mut cfg = read_config(&run.config)?;
    if let Some(seed) = run.seed {
        cfg.ensemble.base_seed = seed;
    }
    if let Some(m) = paths {
        cfg.ensemble.m_paths = m;
    }
    if let Some(dir) = &run.out {
        cfg.output.dir = dir.clone();
    }
    let exp = Experiment::new(cfg.clone())?;
    Ok((cfg, exp))
}

fn wants(cfg: &ExperimentConfig, format: &str) -> bool {
    cfg.output.formats.iter().any(|f| f == format)
}

fn store_simulation(cfg: &ExperimentConfig, path: &PathResult, path_index: u64, start: Instant) -> Result<PathBuf> {
    let mut summary = BTreeMap::new();
    summary.insert("blowup".into(), f64::from(u8::from(path.verdict.is_blowup())));
    summary.insert("steps".into(), path.steps as f64);
    let new = NewRun {
        config_hash: cfg.hash(),
        seed: cfg.ensemble.base_seed,
        command: format!("simulate --path-index {path_index}"),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        artifacts: vec![
            ("config.toml".into(), cfg.to_toml()?.into_bytes()),
            ("path.json".into(), serde_json::to_vec_pretty(path)?),
        ],
        summary,
    };
    Ok(RunStore::open(&cfg.output.dir)?.store_run(&new)?.dir)
}

fn store_ensemble(cfg: &ExperimentConfig, exp: &Experiment) -> Result<PathBuf> {
    let start = Instant::now();
    let result = exp.ensemble()?;
    let oracles = exp.oracles()?;
    let wall = start.elapsed().as_secs_f64();

    let series_csv = result.series.to_csv();
    let mut artifacts = vec![
        ("config.toml".to_string(), cfg.to_toml()?.into_bytes()),
        ("series.csv".to_string(), series_csv.clone().into_bytes()),
    ];
    let rows = parse_series_csv(series_csv.as_bytes())?;
    if wants(cfg, "csv") {
        let links = link_bounds(&rows, &oracles)?;
        artifacts.push(("plot.csv".into(), plot_csv(&rows, &links).into_bytes()));
        if !result.series.fields.is_empty() {
            artifacts.push(("fields.csv".into(), result.series.fields_csv().into_bytes()));
        }
    }
    if wants(cfg, "json") {
        artifacts.push(("thresholds.json".into(), serde_json::to_vec_pretty(&oracles)?));
        artifacts.push(("verdicts.json".into(), serde_json::to_vec_pretty(&result.paths)?));
    }
    let hash = cfg.hash();
    if wants(cfg, "md") {
        let md = markdown(&ReportInput {
            title: if cfg.name.is_empty() { "ensemble" } else { &cfg.name },
            config_hash: &hash,
            seed: cfg.ensemble.base_seed,
            m_paths: cfg.ensemble.m_paths,
            blown_paths: result.blown_paths(),
            series: &rows,
            oracles: &oracles,
        })?;
        artifacts.push(("report.md".into(), md.into_bytes()));
    }

    let mut summary = BTreeMap::new();
    summary.insert("m_paths".into(), cfg.ensemble.m_paths as f64);
    summary.insert("blown_paths".into(), result.blown_paths() as f64);
    let new = NewRun {
        config_hash: hash,
        seed: cfg.ensemble.base_seed,
        command: "ensemble".into(),
        wall_clock_secs: wall,
        artifacts,
        summary,
    };
    Ok(RunStore::open(&cfg.output.dir)?.store_run(&new)?.dir)
}

fn render_report(run_dir: &Path) -> Result<(String, String)> {
    let id = run_dir
        .file_name()
        .and_then(|s| s.to_str())
        .context("run directory has no name")?;
    let root = run_dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let store = RunStore::open(root)?;
    let record = store.load(id)?;
    let has = |name: &str| record.manifest.artifacts.iter().any(|a| a.name == name);
    let rows = parse_series_csv(&store.read_artifact(id, "series.csv")?)?;
    let oracles: Vec<OracleResult> = if has("thresholds.json") {
        serde_json::from_slice(&store.read_artifact(id, "thresholds.json")?)?
    } else {
        Vec::new()
    };
    let cfg = ExperimentConfig::from_toml(std::str::from_utf8(&store.read_artifact(id, "config.toml")?)?)?;
    let m = &record.manifest;
    let get = |k: &str| m.summary.get(k).copied().unwrap_or(0.0) as usize;
    let links = link_bounds(&rows, &oracles)?;
    let title = if cfg.name.is_empty() { id.to_string() } else { cfg.name.clone() };
    let md = markdown(&ReportInput {
        title: &title,
        config_hash: &m.config_hash,
        seed: m.seed,
        m_paths: get("m_paths"),
        blown_paths: get("blown_paths"),
        series: &rows,
        oracles: &oracles,
    })?;
    Ok((md, plot_csv(&rows, &links)))
}
