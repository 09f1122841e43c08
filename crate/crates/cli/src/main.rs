//! `lieswarm`: run scenarios, check coordination of recorded runs, and sweep parameters.
//!
//! Exit codes: 0 on success, 1 when a run aborts or a check fails, 2 on invalid input.

mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use lieswarm::analysis::{CoordinationMode, DEFAULT_DRIFT_TOL};
use lieswarm::sim::io::{read_run, write_run};
use lieswarm::sim::scenario::{run, ScenarioConfig};
use lieswarm::sim::Outcome;

/// Environment variable naming the base directory for run outputs.
const OUT_ENV: &str = "LIESWARM_OUT";

#[derive(Parser)]
#[command(name = "lieswarm", version, about = "Coordinated swarms on Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write trajectory.csv, metrics.csv and manifest.toml.
    ///
    /// Output goes to --out, else $LIESWARM_OUT/<scenario name>, else the scenario's
    /// output.dir, else runs/<scenario name>.
    Run {
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a recorded run for coordination. Exits 0 iff it is achieved.
    Check {
        dir: PathBuf,
        #[arg(long)]
        mode: CoordinationMode,
        #[arg(long, default_value_t = DEFAULT_DRIFT_TOL)]
        tol: f64,
        /// Trailing window in time units; defaults to min(1, recorded span).
        #[arg(long)]
        window: Option<f64>,
    },
    /// Run a scenario over a parameter grid and seed range; prints a CSV summary.
    Sweep {
        file: PathBuf,
        /// `key=v1,v2;key2=...` with dotted scenario keys; `h` and `t_end` are shorthands.
        #[arg(long, default_value = "")]
        grid: String,
        /// Inclusive range `a..b`, or a comma list. Defaults to the scenario seed.
        #[arg(long)]
        seeds: Option<String>,
        /// Terminal objective below this counts as reached.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            file,
            seed,
            h,
            t_end,
            out,
        } => cmd_run(&file, seed, h, t_end, out),
        Command::Check { dir, mode, tol, window } => cmd_check(&dir, mode, tol, window),
        Command::Sweep {
            file,
            grid,
            seeds,
            tol,
            out,
        } => sweep::cmd_sweep(&file, &grid, seeds.as_deref(), tol, out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

pub(crate) fn load_scenario(file: &Path) -> Result<ScenarioConfig> {
    ScenarioConfig::from_path(file).with_context(|| format!("loading {}", file.display()))
}

fn output_dir(file: &Path, cfg: &ScenarioConfig, out: Option<PathBuf>) -> PathBuf {
    let stem = file.file_stem().map(PathBuf::from).unwrap_or_else(|| "run".into());
    out.or_else(|| std::env::var_os(OUT_ENV).map(|base| PathBuf::from(base).join(&stem)))
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("runs").join(stem))
}

fn cmd_run(file: &Path, seed: Option<u64>, h: Option<f64>, t_end: Option<f64>, out: Option<PathBuf>) -> Result<bool> {
    let mut cfg = load_scenario(file)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(h) = h {
        cfg.integrator.h = h;
    }
    if let Some(t) = t_end {
        cfg.integrator.t_end = t;
    }
    let dir = output_dir(file, &cfg, out);
    let result = run(&cfg)?;
    write_run(&dir, &cfg, &result).with_context(|| format!("writing {}", dir.display()))?;

    let m = result.final_metrics();
    println!("wrote {}", dir.display());
    println!(
        "{} on {} with {} agents, {} samples",
        result.controller(),
        cfg.group,
        cfg.agents,
        result.samples()
    );
    println!("final V_r={:e} V_l={:e} V_tr={:e} V_tl={:e} max V_k={:e}", m.v_r, m.v_l, m.v_tr, m.v_tl, m.max_vk());
    for e in result.events() {
        eprintln!(
            "event {}: {} times in [{}, {}], worst {:e}",
            e.kind, e.count, e.t_first, e.t_last, e.worst
        );
    }
    match result.outcome() {
        Outcome::Completed => Ok(true),
        Outcome::Aborted { t, reason } => {
            eprintln!("run aborted at t={t}: {reason}");
            Ok(false)
        }
    }
}

/// File name of the report `check` writes next to the run.
pub fn report_file(mode: CoordinationMode) -> String {
    format!("coordination-{mode}.toml")
}

fn cmd_check(dir: &Path, mode: CoordinationMode, tol: f64, window: Option<f64>) -> Result<bool> {
    if tol.is_nan() || tol <= 0.0 {
        bail!("--tol must be positive, got {tol}");
    }
    let (_, result) = read_run(dir).with_context(|| format!("reading run in {}", dir.display()))?;
    let window = window.unwrap_or_else(|| result.span().min(1.0));
    let report = result.check_coordination(mode, window, tol)?;
    let text = toml::to_string(&report)?;
    std::fs::write(dir.join(report_file(mode)), &text)?;
    print!("{text}");
    Ok(report.achieved)
}
