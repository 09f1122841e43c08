//! Parameter sweeps: grid and seed parsing, parallel runs, CSV summary.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use lieswarm::sim::io::fmt_f64;
use lieswarm::sim::scenario::{run, scenario_objective, ScenarioConfig};

/// One grid axis: a dotted scenario key and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

fn expand_key(key: &str) -> String {
    match key {
        "h" => "integrator.h".into(),
        "t_end" | "t-end" => "integrator.t_end".into(),
        other => other.into(),
    }
}

/// Parses `key=v1,v2;key2=w1`. A blank spec is an empty grid.
pub fn parse_grid(spec: &str) -> Result<Vec<Axis>> {
    let mut axes = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((key, values)) = part.split_once('=') else {
            bail!("grid entry `{part}` is not of the form key=v1,v2");
        };
        let key = key.trim();
        if key.is_empty() {
            bail!("grid entry `{part}` has an empty key");
        }
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if axes.iter().any(|a: &Axis| a.key == expand_key(key)) {
            bail!("grid key `{key}` given twice");
        }
        axes.push(Axis {
            key: expand_key(key),
            values,
        });
    }
    Ok(axes)
}

/// Cartesian product of the axes; empty when there are no axes or any axis is empty.
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<String>> {
    if axes.is_empty() {
        return Vec::new();
    }
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect()
    })
}

/// Parses `a..b` (inclusive), `a..=b` or `s1,s2,...`.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    let num = |s: &str| s.trim().parse::<u64>().with_context(|| format!("bad seed `{s}`"));
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b) = (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?);
        if b < a {
            bail!("seed range {a}..{b} is empty");
        }
        return Ok((a..=b).collect());
    }
    spec.split(',').map(num).collect()
}

#[derive(Debug, Clone)]
struct RunSummary {
    completed: bool,
    metrics: [f64; 5],
    objective: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn cmd_sweep(file: &Path, grid: &str, seeds: Option<&str>, tol: f64, out: Option<&Path>) -> Result<bool> {
    let base = crate::load_scenario(file)?;
    let axes = parse_grid(grid)?;
    let seeds = match seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![base.seed],
    };
    let points = grid_points(&axes);

    // build and validate every configuration before running anything
    let mut jobs: Vec<(usize, ScenarioConfig)> = Vec::new();
    for (i, point) in points.iter().enumerate() {
        let mut cfg = base.clone();
        for (axis, value) in axes.iter().zip(point) {
            cfg = cfg
                .with_override(&axis.key, value)
                .with_context(|| format!("grid value {}={value}", axis.key))?;
        }
        for &seed in &seeds {
            let mut c = cfg.clone();
            c.seed = seed;
            jobs.push((i, c));
        }
    }
    let objective = scenario_objective(&base)?;

    let results = jobs
        .par_iter()
        .map(|(i, cfg)| {
            let r = run(cfg).with_context(|| format!("seed {}", cfg.seed))?;
            let m = r.final_metrics();
            Ok((
                *i,
                RunSummary {
                    completed: r.outcome().is_completed(),
                    metrics: [m.v_r, m.v_l, m.v_tr, m.v_tl, m.max_vk()],
                    objective: m.objective(objective),
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table: Vec<u8> = Vec::new();
    let mut header: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    header.extend(
        ["runs", "completed", "V_r", "V_l", "V_tr", "V_tl", "V_k_max", "reached_fraction"]
            .iter()
            .map(|s| s.to_string()),
    );
    writeln!(table, "{}", header.join(","))?;
    for (i, point) in points.iter().enumerate() {
        let rows: Vec<&RunSummary> = results.iter().filter(|(j, _)| *j == i).map(|(_, r)| r).collect();
        let done: Vec<&&RunSummary> = rows.iter().filter(|r| r.completed).collect();
        let mut line = point.clone();
        line.push(rows.len().to_string());
        line.push(done.len().to_string());
        for c in 0..5 {
            line.push(fmt_f64(mean(done.iter().map(|r| r.metrics[c]))));
        }
        // aborted runs count as not reached; controllers without an objective leave it blank
        let reached = rows
            .iter()
            .map(|r| r.completed && r.objective.is_some_and(|v| v < tol))
            .filter(|&b| b)
            .count();
        line.push(match objective {
            lieswarm::control::Objective::None => String::new(),
            _ => fmt_f64(reached as f64 / rows.len().max(1) as f64),
        });
        writeln!(table, "{}", line.join(","))?;
    }

    match out {
        Some(path) => std::fs::write(path, &table).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&table)?,
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid(" ; ").unwrap().is_empty());
        let axes = parse_grid("h=1e-2,1e-3; agents=3,4,5").unwrap();
        assert_eq!(axes[0].key, "integrator.h");
        assert_eq!(axes[1].values, ["3", "4", "5"]);
        assert_eq!(grid_points(&axes).len(), 6);
        assert_eq!(grid_points(&axes)[1], ["1e-2", "4"]);
        assert!(parse_grid("h").is_err());
        assert!(parse_grid("h=1;integrator.h=2").is_err());
        assert!(grid_points(&parse_grid("h=").unwrap()).is_empty());
    }

    #[test]
    fn seed_parsing() {
        assert_eq!(parse_seeds("1..3").unwrap(), [1, 2, 3]);
        assert_eq!(parse_seeds("4..=4").unwrap(), [4]);
        assert_eq!(parse_seeds("7, 9").unwrap(), [7, 9]);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
