//! Time integration of the closed loop on the group manifold.

pub mod io;
pub mod metrics;
pub mod scenario;

use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraVector;
use crate::control::{AuxFrame, AuxVar, ControlOutput, Controller};
use crate::error::SimError;
use crate::graph::CommGraph;
use crate::lie::{GroupKind, LieGroup};

pub use metrics::{metrics, Metrics};

/// How auxiliary variables advance over one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AuxScheme {
    /// Explicit Euler in algebra coordinates.
    #[default]
    Euler,
    /// Classical RK4 in algebra coordinates with the group positions frozen over the step.
    Rk4,
    /// Euler on the spatial image of body-frame variables, pulled back through the exact step.
    /// Falls back to Euler for controllers whose auxiliary state is not body-frame.
    Transported,
}

impl AuxScheme {
    pub const NAMES: [&'static str; 3] = ["euler", "rk4", "transported"];
}

/// Positions and auxiliary variables at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState<G> {
    pub t: f64,
    pub g: Vec<G>,
    pub aux: Vec<AuxVar>,
}

impl<G: LieGroup> SwarmState<G> {
    pub fn new(g: Vec<G>, aux: Vec<AuxVar>) -> Self {
        SwarmState { t: 0.0, g, aux }
    }

    /// Common left translation `g_k ↦ h g_k`.
    pub fn left_translated(&self, h: &G) -> Self {
        SwarmState {
            t: self.t,
            g: self.g.iter().map(|gk| h.compose(gk)).collect(),
            aux: self.aux.clone(),
        }
    }
}

/// One integration step. Positions take the Lie–Euler update `g_k ← g_k exp(h ξ_k)`.
pub fn step<G: LieGroup>(
    state: &SwarmState<G>,
    controller: &dyn Controller<G>,
    graph: &CommGraph,
    h: f64,
    scheme: AuxScheme,
) -> Result<(SwarmState<G>, ControlOutput), SimError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SimError::config("integrator.h", "step must be positive and finite"));
    }
    let out = controller.evaluate(state.t, &state.g, &state.aux, graph)?;
    for (agent, xi) in out.xi.iter().enumerate() {
        if !xi.is_finite() {
            return Err(SimError::NonFiniteVelocity { agent, t: state.t });
        }
    }
    let steps: Vec<G> = out.xi.iter().map(|xi| G::exp(&(*xi * h))).collect();
    let g: Vec<G> = state.g.iter().zip(&steps).map(|(gk, s)| gk.compose(s)).collect();

    let aux = match scheme {
        AuxScheme::Euler => euler(&state.aux, &out.aux_rate, h),
        AuxScheme::Transported if controller.aux_frame() == AuxFrame::Body => (0..g.len())
            .map(|k| controller.transport(&steps[k], &out.xi[k], &state.aux[k], &out.aux_rate[k], h))
            .collect(),
        AuxScheme::Transported => euler(&state.aux, &out.aux_rate, h),
        AuxScheme::Rk4 => {
            let t = state.t;
            let rate = |aux: &[AuxVar], t: f64| -> Result<Vec<AuxVar>, SimError> {
                Ok(controller.evaluate(t, &state.g, aux, graph)?.aux_rate)
            };
            let k1 = out.aux_rate.clone();
            let k2 = rate(&euler(&state.aux, &k1, 0.5 * h), t + 0.5 * h)?;
            let k3 = rate(&euler(&state.aux, &k2, 0.5 * h), t + 0.5 * h)?;
            let k4 = rate(&euler(&state.aux, &k3, h), t + h)?;
            (0..state.aux.len())
                .map(|i| {
                    state.aux[i]
                        .axpy(&k1[i], h / 6.0)
                        .axpy(&k2[i], h / 3.0)
                        .axpy(&k3[i], h / 3.0)
                        .axpy(&k4[i], h / 6.0)
                })
                .collect()
        }
    };
    Ok((
        SwarmState {
            t: state.t + h,
            g,
            aux,
        },
        out,
    ))
}

fn euler(aux: &[AuxVar], rate: &[AuxVar], h: f64) -> Vec<AuxVar> {
    aux.iter().zip(rate).map(|(a, r)| a.axpy(r, h)).collect()
}

/// Integration settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub h: f64,
    pub t_end: f64,
    pub aux_scheme: AuxScheme,
    /// Reproject positions onto the manifold every this many steps (0 disables).
    pub reproject_every: usize,
    /// Record a sample every this many steps; the final state is always recorded.
    pub record_every: usize,
    /// Abort once any position or auxiliary entry exceeds this magnitude.
    pub blowup: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            h: 1e-3,
            t_end: 10.0,
            aux_scheme: AuxScheme::Euler,
            reproject_every: 100,
            record_every: 10,
            blowup: 1e12,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(SimError::config("integrator.h", "must be positive and finite"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(SimError::config("integrator.t_end", "must be positive and finite"));
        }
        if self.record_every == 0 {
            return Err(SimError::config("integrator.record_every", "must be at least 1"));
        }
        if !(self.blowup > 0.0) {
            return Err(SimError::config("integrator.blowup", "must be positive"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }
}

/// A recorded swarm state together with the velocities applied from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<G> {
    pub t: f64,
    pub g: Vec<G>,
    pub xi: Vec<AlgebraVector>,
    pub aux: Vec<AuxVar>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub t: f64,
    pub metrics: Metrics,
}

/// Aggregated log entry: one per kind, with first/last occurrence and the worst value seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: String,
    pub count: usize,
    pub t_first: f64,
    pub t_last: f64,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    Aborted { t: f64, reason: String },
}

impl Outcome {
    pub fn is_completed(&self) -> bool {
        matches!(self, Outcome::Completed)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<G> {
    pub controller: String,
    pub samples: Vec<Sample<G>>,
    pub metrics: Vec<MetricRow>,
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

impl<G: LieGroup> Trajectory<G> {
    pub fn group(&self) -> GroupKind {
        G::KIND
    }

    pub fn last(&self) -> &Sample<G> {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn final_metrics(&self) -> &Metrics {
        &self.metrics.last().expect("trajectory has at least one sample").metrics
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    fn log(&mut self, kind: &str, t: f64, value: f64) {
        match self.events.iter_mut().find(|e| e.kind == kind) {
            Some(e) => {
                e.count += 1;
                e.t_last = t;
                e.worst = e.worst.max(value);
            }
            None => self.events.push(Event {
                kind: kind.to_string(),
                count: 1,
                t_first: t,
                t_last: t,
                worst: value,
            }),
        }
    }
}

/// Metrics of a state given the controller output at that state.
pub fn evaluate_metrics<G: LieGroup>(
    controller: &dyn Controller<G>,
    graph: &CommGraph,
    state: &SwarmState<G>,
    xi: &[AlgebraVector],
) -> Metrics {
    let eta: Vec<AlgebraVector> = state
        .g
        .iter()
        .zip(&state.aux)
        .zip(xi)
        .map(|((g, a), x)| controller.reference(g, a).unwrap_or(*x))
        .collect();
    let v_k = state
        .g
        .iter()
        .zip(&state.aux)
        .zip(&eta)
        .map(|((g, a), e)| {
            controller.lyapunov(g, a).unwrap_or_else(|| match controller.setting() {
                Some(cs) if cs.dim() == e.dim() => crate::control::rhs::lyapunov_vk(e, cs),
                _ => 0.0,
            })
        })
        .collect();
    metrics(&state.g, xi, &eta, graph, state.t, v_k)
}

/// Scheduled reprojection leaves elements whose constraint error is at most this untouched,
/// so exactly representable states (e.g. a swarm at rest) are preserved bit for bit.
pub const REPROJECT_THRESHOLD: f64 = 1e-13;

/// Tolerance above which a positive sign-condition value is logged.
pub const ASSUMPTION_EVENT_TOL: f64 = 1e-9;

/// Integrates from `initial` and records every `record_every` steps plus the final state.
///
/// Numeric failures (non-finite velocity, blow-up, degenerate reprojection) end the run early
/// and are reported through [`Trajectory::outcome`] with the samples gathered so far.
pub fn simulate<G: LieGroup>(
    initial: SwarmState<G>,
    controller: &dyn Controller<G>,
    graph: &CommGraph,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<G>, SimError> {
    cfg.validate()?;
    if initial.g.len() != graph.n() {
        return Err(SimError::config(
            "agents",
            format!("graph has {} agents, state has {}", graph.n(), initial.g.len()),
        ));
    }
    controller.validate(&initial.g, &initial.aux)?;

    let n_steps = cfg.steps();
    let mut traj = Trajectory {
        controller: controller.name().to_string(),
        samples: Vec::new(),
        metrics: Vec::new(),
        events: Vec::new(),
        outcome: Outcome::Completed,
    };
    let mut state = initial;
    for i in 0..=n_steps {
        state.t = i as f64 * cfg.h;
        let last = i == n_steps;
        if i % cfg.record_every == 0 || last {
            match controller.evaluate(state.t, &state.g, &state.aux, graph) {
                Ok(out) => record(&mut traj, controller, graph, &state, out.xi),
                Err(e) => {
                    traj.outcome = Outcome::Aborted {
                        t: state.t,
                        reason: e.to_string(),
                    };
                    return Ok(traj);
                }
            }
        }
        if last {
            break;
        }
        let (next, out) = match step(&state, controller, graph, cfg.h, cfg.aux_scheme) {
            Ok(r) => r,
            Err(e @ (SimError::NonFiniteVelocity { .. } | SimError::Control(_) | SimError::Lie(_))) => {
                traj.outcome = Outcome::Aborted {
                    t: state.t,
                    reason: e.to_string(),
                };
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        if let Some(m) = out.assumption_margin {
            if m > ASSUMPTION_EVENT_TOL {
                traj.log("assumption-violated", state.t, m);
            }
        }
        state = next;

        let size = state
            .g
            .iter()
            .map(|g| g.payload_norm())
            .chain(state.aux.iter().map(|a| a.max_abs()))
            .fold(0.0, |m: f64, x| if x.is_nan() { f64::INFINITY } else { m.max(x) });
        if !(size <= cfg.blowup) {
            let t = (i + 1) as f64 * cfg.h;
            traj.outcome = Outcome::Aborted {
                t,
                reason: SimError::BlowUp { t, norm: size }.to_string(),
            };
            return Ok(traj);
        }

        if cfg.reproject_every > 0 && (i + 1) % cfg.reproject_every == 0 {
            let t = (i + 1) as f64 * cfg.h;
            for k in 0..state.g.len() {
                let err = state.g[k].manifold_error();
                if err <= REPROJECT_THRESHOLD {
                    continue;
                }
                match state.g[k].reproject() {
                    Ok(g) => state.g[k] = g,
                    Err(e) => {
                        traj.outcome = Outcome::Aborted {
                            t,
                            reason: e.to_string(),
                        };
                        return Ok(traj);
                    }
                }
                traj.log("reprojection", t, err);
            }
        }
    }
    Ok(traj)
}

fn record<G: LieGroup>(
    traj: &mut Trajectory<G>,
    controller: &dyn Controller<G>,
    graph: &CommGraph,
    state: &SwarmState<G>,
    xi: Vec<AlgebraVector>,
) {
    let m = evaluate_metrics(controller, graph, state, &xi);
    traj.metrics.push(MetricRow { t: state.t, metrics: m });
    traj.samples.push(Sample {
        t: state.t,
        g: state.g.clone(),
        xi,
        aux: state.aux.clone(),
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{OpenLoop, ZeroController};
    use crate::groups::{Se2, So3};
    use nalgebra::{Vector2, Vector3};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_velocity_leaves_state() {
        let g = vec![So3::exp(&AlgebraVector::from_slice(&[0.1, 0.2, 0.3]))];
        let state = SwarmState::new(g.clone(), vec![AuxVar::None]);
        let (next, _) = step(&state, &ZeroController, &CommGraph::empty(1), 0.1, AuxScheme::Euler).unwrap();
        assert_eq!(next.g, g);
    }

    #[test]
    fn se2_forward_step() {
        let g0 = Se2::new(Vector2::new(0.5, 0.0), FRAC_PI_2);
        let state = SwarmState::new(vec![g0], vec![AuxVar::Algebra(AlgebraVector::basis(3, 0))]);
        let (next, _) = step(&state, &OpenLoop, &CommGraph::empty(1), 1.0, AuxScheme::Euler).unwrap();
        assert!((next.g[0].position() - Vector2::new(0.5, 1.0)).norm() < 1e-15);
        assert_eq!(next.g[0].angle(), FRAC_PI_2);
    }

    #[test]
    fn so3_body_quarter_turn() {
        let q0 = So3::exp(&AlgebraVector::from_slice(&[0.4, 0.0, 0.0]));
        let xi = AlgebraVector::from_slice(&[0.0, 0.0, FRAC_PI_2]);
        let state = SwarmState::new(vec![q0.clone()], vec![AuxVar::Algebra(xi)]);
        let (next, _) = step(&state, &OpenLoop, &CommGraph::empty(1), 1.0, AuxScheme::Euler).unwrap();
        let rz = crate::groups::rotation_about(&Vector3::z(), FRAC_PI_2);
        assert!((next.g[0].matrix() - q0.matrix() * rz).norm() < 1e-15);
    }

    #[test]
    fn non_finite_velocity_names_agent() {
        let state = SwarmState::new(
            vec![So3::identity(), So3::identity()],
            vec![
                AuxVar::Algebra(AlgebraVector::zeros(3)),
                AuxVar::Algebra(AlgebraVector::from_slice(&[f64::NAN, 0.0, 0.0])),
            ],
        );
        let err = step(&state, &OpenLoop, &CommGraph::empty(2), 0.1, AuxScheme::Euler).unwrap_err();
        assert!(matches!(err, SimError::NonFiniteVelocity { agent: 1, .. }));
    }

    #[test]
    fn blow_up_aborts_with_partial_trajectory() {
        let state = SwarmState::new(
            vec![Se2::identity()],
            vec![AuxVar::Algebra(AlgebraVector::from_slice(&[1e6, 0.0, 0.0]))],
        );
        let cfg = IntegratorConfig {
            h: 1.0,
            t_end: 1e7,
            blowup: 1e9,
            record_every: 1,
            ..Default::default()
        };
        let traj = simulate(state, &OpenLoop, &CommGraph::empty(1), &cfg).unwrap();
        assert!(matches!(traj.outcome, Outcome::Aborted { .. }));
        assert!(!traj.samples.is_empty());
        assert!(traj.samples.len() < 2000);
    }

    #[test]
    fn records_final_state() {
        let cfg = IntegratorConfig {
            h: 0.1,
            t_end: 1.0,
            record_every: 4,
            ..Default::default()
        };
        let state = SwarmState::new(vec![So3::identity()], vec![AuxVar::None]);
        let traj = simulate(state, &ZeroController, &CommGraph::empty(1), &cfg).unwrap();
        let times = traj.times();
        assert_eq!(times.len(), 4);
        assert!((times[3] - 1.0).abs() < 1e-12);
    }
}
