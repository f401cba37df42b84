//! Markdown summaries and plot-ready CSV that pair each empirical series
//! with the oracle bounds that apply to it.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiment::OracleResult;
use crate::store::SeriesCsvRow;
use crate::theory::{kaplan_ode_solve, KaplanParams, LabeledBound};

/// A comparison-ODE trajectory evaluated on the series' time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedBound {
    pub functional: String,
    pub oracle: String,
    pub label: String,
    pub blowup_time: Option<f64>,
    /// `(t, η(t))`; `∞` past the ODE blowup.
    pub values: Vec<(f64, f64)>,
}

impl LinkedBound {
    pub fn at(&self, t: f64) -> Option<f64> {
        self.values.iter().find(|(s, _)| *s == t).map(|&(_, v)| v)
    }
}

/// Everything a report is built from; all of it is stored with the run.
#[derive(Debug, Clone)]
pub struct ReportInput<'a> {
    pub title: &'a str,
    pub config_hash: &'a str,
    pub seed: u64,
    pub m_paths: usize,
    pub blown_paths: usize,
    pub series: &'a [SeriesCsvRow],
    pub oracles: &'a [OracleResult],
}

fn functional_for(oracle: &str, report: &serde_json::Value) -> Option<String> {
    match oracle {
        "eigen_moment_threshold" => Some("squared_eigen_moment".into()),
        "eps_moment_threshold" => {
            let eps = report["hypotheses"]["eps"].as_f64()?;
            Some(format!("eps_eigen_moment({eps})"))
        }
        _ => None,
    }
}

/// Solves every labeled comparison ODE of the threshold oracles on the
/// series times of the functional it bounds.
pub fn link_bounds(series: &[SeriesCsvRow], oracles: &[OracleResult]) -> Result<Vec<LinkedBound>> {
    let mut out = Vec::new();
    for o in oracles.iter().filter(|o| o.applicable) {
        let Some(functional) = functional_for(&o.name, &o.report) else { continue };
        let mut times: Vec<f64> = series.iter().filter(|r| r.functional == functional).map(|r| r.t).collect();
        times.dedup();
        let Some(&t_end) = times.last() else { continue };
        let lambda1 = o.report["hypotheses"]["lambda1"].as_f64().unwrap_or(0.0);
        let bounds: Vec<LabeledBound> = serde_json::from_value(o.report["bounds"].clone())?;
        for b in bounds {
            if !(b.eta0 > 0.0) {
                continue;
            }
            let p = KaplanParams {
                lambda1,
                gain: b.gain,
                damp: b.damp,
                gamma_exp: b.gamma_exp,
                eta0: b.eta0,
            };
            let traj = kaplan_ode_solve(p, t_end.max(f64::MIN_POSITIVE), &times)?;
            out.push(LinkedBound {
                functional: functional.clone(),
                oracle: o.name.clone(),
                label: b.label,
                blowup_time: traj.blowup_time,
                values: traj.checkpoints,
            });
        }
    }
    Ok(out)
}

/// Long-format CSV: one row per series row and linked bound, with empty
/// bound columns for series that have none.
pub fn plot_csv(series: &[SeriesCsvRow], links: &[LinkedBound]) -> String {
    let mut out = String::from("t,functional,estimate,stderr,censored,blown_fraction,bound_label,bound\n");
    for r in series {
        let row = format!(
            "{},{},{},{},{},{}",
            r.t, r.functional, r.estimate, r.stderr, r.censored, r.blown_fraction
        );
        let mine: Vec<&LinkedBound> = links.iter().filter(|l| l.functional == r.functional).collect();
        if mine.is_empty() {
            let _ = writeln!(out, "{row},,");
        }
        for l in mine {
            let v = l.at(r.t).map_or(String::new(), |v| v.to_string());
            let _ = writeln!(out, "{row},{},{v}", l.label);
        }
    }
    out
}

fn fmt(v: f64) -> String {
    if v.is_infinite() {
        "∞".into()
    } else if v == 0.0 || (1e-3..1e5).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.4e}")
    }
}

pub fn markdown(input: &ReportInput) -> Result<String> {
    let links = link_bounds(input.series, input.oracles)?;
    let mut md = String::new();
    let _ = writeln!(md, "# {}\n", input.title);
    let _ = writeln!(md, "- config hash: `{}`", input.config_hash);
    let _ = writeln!(md, "- seed: {}", input.seed);
    let _ = writeln!(md, "- paths: {} ({} blew up)\n", input.m_paths, input.blown_paths);

    if !input.oracles.is_empty() {
        let _ = writeln!(md, "## Oracles\n");
        let _ = writeln!(md, "| oracle | applicable | verdict | note |");
        let _ = writeln!(md, "|---|---|---|---|");
        for o in input.oracles {
            let verdict = o
                .verdict
                .map(|v| serde_json::to_value(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} |",
                o.name,
                if o.applicable { "yes" } else { "no" },
                verdict,
                o.note.as_deref().unwrap_or("")
            );
        }
        md.push('\n');
    }

    let mut by_functional: BTreeMap<&str, Vec<&SeriesCsvRow>> = BTreeMap::new();
    for r in input.series {
        by_functional.entry(r.functional.as_str()).or_default().push(r);
    }
    for (name, rows) in by_functional {
        let mine: Vec<&LinkedBound> = links.iter().filter(|l| l.functional == name).collect();
        let _ = writeln!(md, "## {name}\n");
        for l in &mine {
            let t = l.blowup_time.map_or("none".into(), fmt);
            let _ = writeln!(md, "- bound `{}` from `{}`: ODE blowup time {t}", l.label, l.oracle);
        }
        if !mine.is_empty() {
            md.push('\n');
        }
        let mut header = String::from("| t | estimate | stderr | censored | blown |");
        let mut rule = String::from("|---|---|---|---|---|");
        for l in &mine {
            let _ = write!(header, " {} | est+2se ≥ bound |", l.label);
            rule.push_str("---|---|");
        }
        let _ = writeln!(md, "{header}\n{rule}");
        for r in rows {
            let _ = write!(
                md,
                "| {} | {} | {} | {} | {} |",
                fmt(r.t),
                fmt(r.estimate),
                fmt(r.stderr),
                r.censored,
                fmt(r.blown_fraction)
            );
            for l in &mine {
                match l.at(r.t) {
                    Some(b) => {
                        let ok = r.censored || r.estimate + 2.0 * r.stderr >= b;
                        let _ = write!(md, " {} | {} |", fmt(b), if ok { "yes" } else { "no" });
                    }
                    None => md.push_str(" - | - |"),
                }
            }
            md.push('\n');
        }
        md.push('\n');
    }
    Ok(md)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::experiment::Experiment;
    use crate::store::parse_series_csv;

    #[test]
    fn eigen_moment_series_is_linked_to_all_three_bounds() {
        let exp = Experiment::new(ExperimentConfig::from_toml(crate::config::tests::DEMO).unwrap()).unwrap();
        let result = exp.ensemble().unwrap();
        let series = parse_series_csv(result.series.to_csv().as_bytes()).unwrap();
        let oracles = exp.oracles().unwrap();
        let links = link_bounds(&series, &oracles).unwrap();
        assert_eq!(links.len(), 3);
        for l in &links {
            assert_eq!(l.functional, "squared_eigen_moment");
            assert_eq!(l.at(0.0), Some(4.0 * std::f64::consts::PI.powi(2)));
        }
        let csv = plot_csv(&series, &links);
        assert_eq!(csv.lines().count(), 1 + 3 * series.len());
        let md = markdown(&ReportInput {
            title: "demo",
            config_hash: "h",
            seed: 7,
            m_paths: 8,
            blown_paths: result.blown_paths(),
            series: &series,
            oracles: &oracles,
        })
        .unwrap();
        assert!(md.contains("ito_consistent") && md.contains("## squared_eigen_moment"));
        assert!(md.contains("| kaplan_ode | yes |"));
    }
}
