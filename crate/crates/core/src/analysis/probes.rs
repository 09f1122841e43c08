//! Closed-loop experiments: the SE(2) steering equivalence check and the SO(3) basin probes.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::AlgebraVector;
use crate::analysis::{check_coordination, CoordinationMode};
use crate::control::{AuxVar, Controller, TcLeftCascade};
use crate::error::{AnalysisError, SimError};
use crate::graph::CommGraph;
use crate::groups::{random_algebra, rotation_about, Se2, Se3, So3};
use crate::lie::LieGroup;
use crate::sim::{simulate, IntegratorConfig, SwarmState, Trajectory};

/// `|α(g,u) · Bu|` for SE(2) steering, where `Ad_g(a + Bu) = α(g,u) + Bu` with `a = e₁`, `B = e₃`.
/// Vanishes identically because `α` has no rotational component.
pub fn se2_alpha_bu(g: &Se2, u: f64) -> f64 {
    let bu = AlgebraVector::from_slice(&[0.0, 0.0, u]);
    let spatial = g.adjoint(&AlgebraVector::from_slice(&[1.0, 0.0, u]));
    let alpha = spatial - bu;
    alpha.dot(&bu).abs()
}

/// SE(3) analogue: `(Qu)·(Qe₁) = u·e₁`, nonzero whenever the steering input has a component
/// along the forward axis.
pub fn se3_alpha_bu(g: &Se3, u: &Vector3<f64>) -> f64 {
    let q = g.rotation();
    (q * u).dot(&(q * Vector3::x())).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Se2EquivalenceReport {
    /// Max `|α·Bu|` over every recorded state and agent.
    pub max_alpha_bu: f64,
    pub lic: bool,
    pub ric: bool,
    /// Perpendicularity holds and LIC implies RIC.
    pub holds: bool,
}

/// Verifies on an SE(2) steering trajectory that the spatial velocity splits orthogonally and
/// that reaching LIC also means RIC.
pub fn check_se2_lic_tc_equivalence(
    traj: &Trajectory<Se2>,
    window: f64,
    tol: f64,
) -> Result<Se2EquivalenceReport, AnalysisError> {
    let mut max_alpha_bu: f64 = 0.0;
    for s in &traj.samples {
        for (g, xi) in s.g.iter().zip(&s.xi) {
            max_alpha_bu = max_alpha_bu.max(se2_alpha_bu(g, xi[2]));
        }
    }
    let lic = check_coordination(traj, CoordinationMode::Lic, window, tol)?.achieved;
    let ric = check_coordination(traj, CoordinationMode::Ric, window, tol)?.achieved;
    Ok(Se2EquivalenceReport {
        max_alpha_bu,
        lic,
        ric,
        holds: max_alpha_bu < 1e-12 && (!lic || ric),
    })
}

/// Settings shared by the SO(3) basin experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub integrator: IntegratorConfig,
    /// Terminal `V_tl` below this counts as reaching TC.
    pub tol: f64,
    /// Standard deviation of the random initial `η`.
    pub aux_scale: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            integrator: IntegratorConfig {
                h: 1e-3,
                t_end: 20.0,
                record_every: 1000,
                ..Default::default()
            },
            tol: 1e-6,
            aux_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinReport {
    pub trials: usize,
    pub reached: usize,
    pub fraction: f64,
    /// Terminal `V_tl` per trial, in seed order.
    pub terminal: Vec<f64>,
}

/// Runs the left-cascade TC controller on SO(3) from `trials` random initial conditions
/// (seeds `seed, seed + 1, ...`) and counts terminal `V_tl < tol`. Trials run in parallel.
pub fn prop4_basin_probe(graph: &CommGraph, trials: usize, seed: u64, cfg: &ProbeConfig) -> Result<BasinReport, SimError> {
    let ctrl = TcLeftCascade::default();
    let terminal = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
            let g: Vec<So3> = (0..graph.n()).map(|_| So3::random(&mut rng, 1.0)).collect();
            let aux = (0..graph.n())
                .map(|_| Controller::<So3>::initial_aux(&ctrl, &mut rng, cfg.aux_scale))
                .collect();
            let traj = simulate(SwarmState::new(g, aux), &ctrl, graph, &cfg.integrator)?;
            Ok(terminal_vtl(&traj))
        })
        .collect::<Result<Vec<f64>, SimError>>()?;
    let reached = terminal.iter().filter(|&&v| v < cfg.tol).count();
    Ok(BasinReport {
        trials,
        reached,
        fraction: if trials == 0 { 0.0 } else { reached as f64 / trials as f64 },
        terminal,
    })
}

fn terminal_vtl(traj: &Trajectory<So3>) -> f64 {
    if traj.outcome.is_completed() {
        traj.final_metrics().v_tl
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleReport {
    /// `max ‖ξ_k − η_k‖` at the exact anti-aligned configuration; zero at an equilibrium.
    pub saddle_correction: f64,
    pub initial_vtl: f64,
    pub terminal_vtl: f64,
    pub escaped: bool,
}

/// Starts from two anti-aligned groups (`η_k = e₃`, half the agents turned by π about `e₁`),
/// perturbs every attitude by a rotation of angle `eps` about a random axis and integrates.
pub fn saddle_escape(graph: &CommGraph, eps: f64, seed: u64, cfg: &ProbeConfig) -> Result<SaddleReport, SimError> {
    let n = graph.n();
    let ctrl = TcLeftCascade::default();
    let flip = So3::from_matrix_unchecked(rotation_about(&Vector3::x(), std::f64::consts::PI));
    let g0: Vec<So3> = (0..n)
        .map(|k| if k < n / 2 { So3::identity() } else { flip.clone() })
        .collect();
    let eta = AlgebraVector::basis(3, 2);
    let aux = vec![AuxVar::Algebra(eta); n];

    let out = Controller::<So3>::evaluate(&ctrl, 0.0, &g0, &aux, graph)?;
    let saddle_correction = out.xi.iter().map(|x| (*x - eta).norm()).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<So3> = g0
        .iter()
        .map(|q| {
            let dir = random_algebra::<So3, _>(&mut rng, 1.0);
            q.compose(&So3::exp(&(dir * (eps / dir.norm()))))
        })
        .collect();
    let traj = simulate(SwarmState::new(g, aux), &ctrl, graph, &cfg.integrator)?;
    let initial_vtl = traj.metrics[0].metrics.v_tl;
    let terminal_vtl = terminal_vtl(&traj);
    Ok(SaddleReport {
        saddle_correction,
        initial_vtl,
        terminal_vtl,
        escaped: terminal_vtl < cfg.tol,
    })
}
