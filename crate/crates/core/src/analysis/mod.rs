//! Post-hoc verification of coordination conditions on recorded trajectories.

pub mod geometry;
pub mod probes;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::lie::{left_relative, right_relative, LieGroup};
use crate::sim::Trajectory;

pub use geometry::{
    cm_algebra_basis, cm_algebra_dimension, cm_membership, common_velocities, fit_circle, fit_helix,
    generate_tc_configuration, isotropy_dimension_fd, tc_residuals, CircleFit, HelixFit, TcResiduals,
};
pub use probes::{
    check_se2_lic_tc_equivalence, prop4_basin_probe, saddle_escape, se2_alpha_bu, se3_alpha_bu, BasinReport,
    ProbeConfig, SaddleReport, Se2EquivalenceReport,
};

/// Default tolerance on drift rates.
pub const DEFAULT_DRIFT_TOL: f64 = 1e-4;
/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinationMode {
    Lic,
    Ric,
    Tc,
}

impl fmt::Display for CoordinationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoordinationMode::Lic => "lic",
            CoordinationMode::Ric => "ric",
            CoordinationMode::Tc => "tc",
        })
    }
}

impl FromStr for CoordinationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lic" => Ok(CoordinationMode::Lic),
            "ric" => Ok(CoordinationMode::Ric),
            "tc" => Ok(CoordinationMode::Tc),
            other => Err(format!("unknown mode `{other}`, expected one of lic, ric, tc")),
        }
    }
}

/// Result of [`check_coordination`]. All four measurements are reported whatever the mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinationReport {
    pub mode: CoordinationMode,
    pub achieved: bool,
    /// The quantity compared against `tol` for this mode.
    pub drift: f64,
    pub tol: f64,
    pub window: f64,
    pub samples: usize,
    /// Max over pairs and window of the central-difference rate `‖dλ_jk/dt‖_F`.
    pub lambda_drift: f64,
    /// Max over pairs and window of `‖dρ_jk/dt‖_F`.
    pub rho_drift: f64,
    /// Max pairwise `‖ξ_j^l − ξ_k^l‖` over the window.
    pub left_spread: f64,
    /// Max pairwise `‖ξ_j^r − ξ_k^r‖` over the window.
    pub right_spread: f64,
}

impl CoordinationReport {
    /// Position criterion for LIC (`λ` constant).
    pub fn lic_by_position(&self) -> bool {
        self.lambda_drift < self.tol
    }

    /// Velocity criterion for LIC (equal `ξ^r`).
    pub fn lic_by_velocity(&self) -> bool {
        self.right_spread < self.tol
    }

    /// Position criterion for RIC (`ρ` constant).
    pub fn ric_by_position(&self) -> bool {
        self.rho_drift < self.tol
    }

    /// Velocity criterion for RIC (equal `ξ^l`).
    pub fn ric_by_velocity(&self) -> bool {
        self.left_spread < self.tol
    }
}

/// Checks coordination over the final `window` seconds of a trajectory.
///
/// LIC is decided on the measured `λ` drift, RIC on the `ξ^l` spread, TC on both.
pub fn check_coordination<G: LieGroup>(
    traj: &Trajectory<G>,
    mode: CoordinationMode,
    window: f64,
    tol: f64,
) -> Result<CoordinationReport, AnalysisError> {
    let samples = &traj.samples;
    let t_last = samples.last().map(|s| s.t).unwrap_or(0.0);
    let start = t_last - window;
    let in_window: Vec<usize> = (0..samples.len())
        .filter(|&i| samples[i].t >= start - 1e-9 * window.abs().max(1.0))
        .collect();
    let span = t_last - samples.first().map(|s| s.t).unwrap_or(0.0);
    if !(window > 0.0) || window > span * (1.0 + 1e-9) + 1e-12 || in_window.len() < 3 {
        return Err(AnalysisError::WindowTooShort {
            window,
            samples: in_window.len(),
        });
    }
    let n = samples[0].g.len();

    let mut lambda_drift: f64 = 0.0;
    let mut rho_drift: f64 = 0.0;
    for w in in_window.windows(3) {
        let (a, b) = (&samples[w[0]], &samples[w[2]]);
        let dt = b.t - a.t;
        for k in 0..n {
            for j in 0..n {
                if j == k {
                    continue;
                }
                let dl = left_relative(&b.g[k], &b.g[j]).homogeneous() - left_relative(&a.g[k], &a.g[j]).homogeneous();
                lambda_drift = lambda_drift.max(dl.norm() / dt);
                if j > k {
                    let dr =
                        right_relative(&b.g[k], &b.g[j]).homogeneous() - right_relative(&a.g[k], &a.g[j]).homogeneous();
                    rho_drift = rho_drift.max(dr.norm() / dt);
                }
            }
        }
    }

    let mut left_spread: f64 = 0.0;
    let mut right_spread: f64 = 0.0;
    for &i in &in_window {
        let s = &samples[i];
        let xr: Vec<_> = s.g.iter().zip(&s.xi).map(|(g, x)| g.adjoint(x)).collect();
        for k in 0..n {
            for j in (k + 1)..n {
                left_spread = left_spread.max((s.xi[j] - s.xi[k]).norm());
                right_spread = right_spread.max((xr[j] - xr[k]).norm());
            }
        }
    }

    let (achieved, drift) = match mode {
        CoordinationMode::Lic => (lambda_drift < tol, lambda_drift),
        CoordinationMode::Ric => (left_spread < tol, left_spread),
        CoordinationMode::Tc => (lambda_drift < tol && left_spread < tol, lambda_drift.max(left_spread)),
    };
    Ok(CoordinationReport {
        mode,
        achieved,
        drift,
        tol,
        window,
        samples: in_window.len(),
        lambda_drift,
        rho_drift,
        left_spread,
        right_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraVector;
    use crate::control::{AuxVar, OpenLoop, ZeroController};
    use crate::graph::CommGraph;
    use crate::groups::{Se2, So3};
    use crate::sim::{simulate, IntegratorConfig, SwarmState};
    use nalgebra::Vector2;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig {
            h: 1e-2,
            t_end: 2.0,
            record_every: 5,
            ..Default::default()
        }
    }

    #[test]
    fn frozen_swarm_is_totally_coordinated() {
        let g = vec![So3::exp(&AlgebraVector::from_slice(&[0.3, 0.0, 0.1])), So3::identity()];
        let traj = simulate(SwarmState::new(g, vec![AuxVar::None; 2]), &ZeroController, &CommGraph::empty(2), &cfg())
            .unwrap();
        let rep = check_coordination(&traj, CoordinationMode::Tc, 1.0, 1e-4).unwrap();
        assert!(rep.achieved);
        assert_eq!(rep.drift, 0.0);
    }

    #[test]
    fn equal_body_velocities_different_headings() {
        let g = vec![Se2::new(Vector2::new(0.0, 0.0), 0.0), Se2::new(Vector2::new(1.0, 2.0), 1.0)];
        let xi = AlgebraVector::from_slice(&[1.0, 0.0, 0.0]);
        let traj = simulate(
            SwarmState::new(g, vec![AuxVar::Algebra(xi); 2]),
            &OpenLoop,
            &CommGraph::empty(2),
            &cfg(),
        )
        .unwrap();
        assert!(check_coordination(&traj, CoordinationMode::Ric, 1.0, 1e-4).unwrap().achieved);
        let lic = check_coordination(&traj, CoordinationMode::Lic, 1.0, 1e-4).unwrap();
        assert!(!lic.achieved);
        assert!(lic.lambda_drift > 0.1);
    }

    #[test]
    fn window_too_short() {
        let traj = simulate(
            SwarmState::new(vec![So3::identity()], vec![AuxVar::None]),
            &ZeroController,
            &CommGraph::empty(1),
            &cfg(),
        )
        .unwrap();
        assert!(matches!(
            check_coordination(&traj, CoordinationMode::Lic, 0.05, 1e-4),
            Err(AnalysisError::WindowTooShort { .. })
        ));
        assert!(check_coordination(&traj, CoordinationMode::Lic, 10.0, 1e-4).is_err());
    }
}
