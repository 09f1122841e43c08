//! Run artifacts: trajectory and metrics CSV files plus a TOML manifest.
//!
//! Numbers are written with 17 significant digits so that reading a run back reproduces
//! every double exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::AlgebraVector;
use crate::error::SimError;
use crate::groups::{Se2, Se3, So3};
use crate::lie::{GroupKind, LieGroup};
use crate::sim::scenario::{aux_from_values, RunOutput, ScenarioConfig};
use crate::sim::{Event, MetricRow, Metrics, Outcome, Sample, Trajectory};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Hex SHA-256 of the canonical TOML form of a scenario.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml_string().as_bytes()))
}

pub fn write_trajectory<G: LieGroup, W: Write>(traj: &Trajectory<G>, w: W) -> Result<(), SimError> {
    let mut out = csv::Writer::from_writer(w);
    let aux_len = traj
        .samples
        .iter()
        .flat_map(|s| s.aux.iter().map(|a| a.values().len()))
        .max()
        .unwrap_or(0);
    let mut header = vec!["t".to_string(), "agent".to_string()];
    header.extend(G::payload_labels().iter().map(|s| s.to_string()));
    header.extend((0..G::DIM).map(|i| format!("xi_{i}")));
    header.extend((0..aux_len).map(|i| format!("aux_{i}")));
    out.write_record(&header)?;
    for s in &traj.samples {
        for k in 0..s.g.len() {
            let mut row = vec![fmt_f64(s.t), k.to_string()];
            row.extend(s.g[k].payload().into_iter().map(fmt_f64));
            row.extend(s.xi[k].as_slice().iter().map(|&x| fmt_f64(x)));
            row.extend(s.aux[k].values().into_iter().map(fmt_f64));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_metrics<G, W: Write>(traj: &Trajectory<G>, w: W) -> Result<(), SimError> {
    let mut out = csv::Writer::from_writer(w);
    let n = traj.metrics.first().map(|m| m.metrics.v_k.len()).unwrap_or(0);
    let mut header: Vec<String> = ["t", "V_r", "V_l", "V_tr", "V_tl"].iter().map(|s| s.to_string()).collect();
    header.extend((0..n).map(|k| format!("V_k_{k}")));
    out.write_record(&header)?;
    for row in &traj.metrics {
        let m = &row.metrics;
        let mut rec: Vec<String> = [row.t, m.v_r, m.v_l, m.v_tr, m.v_tl].into_iter().map(fmt_f64).collect();
        rec.extend(m.v_k.iter().map(|&v| fmt_f64(v)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub group: GroupKind,
    pub controller: String,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
    pub samples: usize,
    #[serde(default)]
    pub events: Vec<Event>,
    pub config: ScenarioConfig,
}

impl Manifest {
    pub fn new(cfg: &ScenarioConfig, run: &RunOutput) -> Self {
        let (outcome, aborted_at, abort_reason) = match run.outcome() {
            Outcome::Completed => ("completed".to_string(), None, None),
            Outcome::Aborted { t, reason } => ("aborted".to_string(), Some(*t), Some(reason.clone())),
        };
        Manifest {
            config_sha256: config_hash(cfg),
            seed: cfg.seed,
            group: cfg.group,
            controller: run.controller().to_string(),
            outcome,
            aborted_at,
            abort_reason,
            samples: run.samples(),
            events: run.events().to_vec(),
            config: cfg.clone(),
        }
    }
}

/// Writes `trajectory.csv`, `metrics.csv` and `manifest.toml` into `dir`, creating it.
pub fn write_run(dir: &Path, cfg: &ScenarioConfig, run: &RunOutput) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(dir)?;
    let paths = [TRAJECTORY_FILE, METRICS_FILE, MANIFEST_FILE].map(|f| dir.join(f));
    let traj_file = fs::File::create(&paths[0])?;
    let metrics_file = fs::File::create(&paths[1])?;
    match run {
        RunOutput::So3(t) => {
            write_trajectory(t, traj_file)?;
            write_metrics(t, metrics_file)?;
        }
        RunOutput::Se2(t) => {
            write_trajectory(t, traj_file)?;
            write_metrics(t, metrics_file)?;
        }
        RunOutput::Se3(t) => {
            write_trajectory(t, traj_file)?;
            write_metrics(t, metrics_file)?;
        }
    }
    let manifest = toml::to_string(&Manifest::new(cfg, run)).expect("manifest serializes");
    fs::write(&paths[2], manifest)?;
    Ok(paths.to_vec())
}

fn parse_err(file: &str, what: impl std::fmt::Display) -> SimError {
    SimError::Parse(format!("{file}: {what}"))
}

fn parse_num(file: &str, s: &str) -> Result<f64, SimError> {
    s.trim().parse().map_err(|_| parse_err(file, format!("bad number `{s}`")))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, SimError> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    toml::from_str(&text).map_err(|e| parse_err(MANIFEST_FILE, e))
}

/// Reads samples back from a trajectory CSV.
pub fn read_trajectory<G: LieGroup>(dir: &Path, controller: &str) -> Result<Vec<Sample<G>>, SimError> {
    let mut rdr = csv::Reader::from_path(dir.join(TRAJECTORY_FILE))?;
    let width = rdr.headers()?.len();
    let p = G::payload_labels().len();
    if width < 2 + p + G::DIM {
        return Err(parse_err(TRAJECTORY_FILE, format!("expected at least {} columns, got {width}", 2 + p + G::DIM)));
    }
    let mut samples: Vec<Sample<G>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| parse_num(TRAJECTORY_FILE, s))
            .collect::<Result<Vec<f64>, _>>()?;
        let t = vals[0];
        let g = G::from_payload(&vals[2..2 + p])?;
        let xi = AlgebraVector::from_slice(&vals[2 + p..2 + p + G::DIM]);
        let aux = aux_from_values(controller, &vals[2 + p + G::DIM..]);
        match samples.last_mut() {
            Some(s) if s.t == t => {
                s.g.push(g);
                s.xi.push(xi);
                s.aux.push(aux);
            }
            _ => samples.push(Sample {
                t,
                g: vec![g],
                xi: vec![xi],
                aux: vec![aux],
            }),
        }
    }
    Ok(samples)
}

pub fn read_metrics(dir: &Path) -> Result<Vec<MetricRow>, SimError> {
    let mut rdr = csv::Reader::from_path(dir.join(METRICS_FILE))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| parse_num(METRICS_FILE, s))
            .collect::<Result<Vec<f64>, _>>()?;
        if vals.len() < 5 {
            return Err(parse_err(METRICS_FILE, "expected at least 5 columns"));
        }
        out.push(MetricRow {
            t: vals[0],
            metrics: Metrics {
                v_r: vals[1],
                v_l: vals[2],
                v_tr: vals[3],
                v_tl: vals[4],
                v_k: vals[5..].to_vec(),
            },
        });
    }
    Ok(out)
}

fn load<G: LieGroup>(dir: &Path, manifest: &Manifest) -> Result<Trajectory<G>, SimError> {
    let outcome = match (manifest.outcome.as_str(), manifest.aborted_at) {
        ("completed", _) => Outcome::Completed,
        (_, t) => Outcome::Aborted {
            t: t.unwrap_or(f64::NAN),
            reason: manifest.abort_reason.clone().unwrap_or_default(),
        },
    };
    Ok(Trajectory {
        controller: manifest.controller.clone(),
        samples: read_trajectory(dir, &manifest.controller)?,
        metrics: read_metrics(dir)?,
        events: manifest.events.clone(),
        outcome,
    })
}

/// Loads a run directory written by [`write_run`].
pub fn read_run(dir: &Path) -> Result<(Manifest, RunOutput), SimError> {
    let manifest = read_manifest(dir)?;
    let run = match manifest.group {
        GroupKind::So3 => RunOutput::So3(load::<So3>(dir, &manifest)?),
        GroupKind::Se2 => RunOutput::Se2(load::<Se2>(dir, &manifest)?),
        GroupKind::Se3 => RunOutput::Se3(load::<Se3>(dir, &manifest)?),
    };
    Ok((manifest, run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::{run, ControllerKind};

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for (group, kind) in [
            (GroupKind::Se2, ControllerKind::LicConsensus),
            (GroupKind::Se3, ControllerKind::Se3SteeringHelical),
            (GroupKind::So3, ControllerKind::TcLeftCascade),
        ] {
            let mut cfg = ScenarioConfig::new(group, 3, kind);
            cfg.integrator.t_end = 0.3;
            cfg.seed = 5;
            let out = run(&cfg).unwrap();
            write_run(dir.path(), &cfg, &out).unwrap();
            let (manifest, back) = read_run(dir.path()).unwrap();
            assert_eq!(manifest.config, cfg);
            assert_eq!(manifest.config_sha256, config_hash(&cfg));
            match (out, back) {
                (RunOutput::Se2(a), RunOutput::Se2(b)) => {
                    assert_eq!(a.samples, b.samples);
                    assert_eq!(a.metrics, b.metrics);
                }
                (RunOutput::Se3(a), RunOutput::Se3(b)) => assert_eq!(a.samples, b.samples),
                (RunOutput::So3(a), RunOutput::So3(b)) => assert_eq!(a.samples, b.samples),
                _ => panic!("group changed"),
            }
        }
    }
}
