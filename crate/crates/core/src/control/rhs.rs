//! Control laws as pure right-hand sides.
//!
//! Every function takes per-agent arrays indexed by agent id and sums over
//! in-neighbors in ascending id order, so results are bit-reproducible.

use nalgebra::Vector3;

use crate::algebra::AlgebraVector;
use crate::control::setting::ControlSetting;
use crate::error::ControlError;
use crate::graph::CommGraph;
use crate::groups::Se3;
use crate::lie::{left_relative, LieGroup};

fn check_count(graph: &CommGraph, got: usize) -> Result<(), ControlError> {
    if graph.n() != got {
        return Err(ControlError::AgentCount {
            expected: graph.n(),
            got,
        });
    }
    Ok(())
}

fn check_dims<G: LieGroup>(values: &[AlgebraVector]) -> Result<(), ControlError> {
    for v in values {
        crate::lie::check_algebra::<G>(v)?;
    }
    Ok(())
}

/// `Ad_{λ_jk} η_j` for every in-neighbor `j` of `k`, the neighbor's variable seen from `k`'s frame.
fn transported<G: LieGroup>(g: &[G], eta: &[AlgebraVector], k: usize, nbrs: &[usize]) -> Vec<AlgebraVector> {
    nbrs.iter()
        .map(|&j| left_relative(&g[k], &g[j]).adjoint(&eta[j]))
        .collect()
}

/// `Σ_{j⇝k} (x_j − x_k)` over a list of neighbor values.
fn disagreement(own: &AlgebraVector, others: &[AlgebraVector]) -> AlgebraVector {
    others
        .iter()
        .fold(AlgebraVector::zeros(own.dim()), |acc, x| acc + (*x - *own))
}

/// Vector-space consensus `dξ_k/dt = Σ_{j⇝k}(ξ_j − ξ_k)`.
pub fn ric_consensus_rhs(xi: &[AlgebraVector], graph: &CommGraph, t: f64) -> Result<Vec<AlgebraVector>, ControlError> {
    check_count(graph, xi.len())?;
    let nbrs = graph.neighbor_lists(t);
    Ok((0..xi.len())
        .map(|k| {
            let others: Vec<_> = nbrs[k].iter().map(|&j| xi[j]).collect();
            disagreement(&xi[k], &others)
        })
        .collect())
}

/// Consensus on `ξ^r` written in left-invariant variables: `dξ_k^l/dt = Σ(Ad_{λ_jk} ξ_j^l − ξ_k^l)`.
pub fn lic_consensus_rhs<G: LieGroup>(
    g: &[G],
    xi: &[AlgebraVector],
    graph: &CommGraph,
    t: f64,
) -> Result<Vec<AlgebraVector>, ControlError> {
    check_count(graph, g.len())?;
    check_count(graph, xi.len())?;
    check_dims::<G>(xi)?;
    let nbrs = graph.neighbor_lists(t);
    Ok((0..g.len())
        .map(|k| disagreement(&xi[k], &transported(g, xi, k, &nbrs[k])))
        .collect())
}

/// Cascade for total coordination with a right-invariant reference.
///
/// `ξ_k = η_k + q_k`, `q_k = −⟨η_k, Σ(η_k − η_j)⟩` and
/// `dη_k/dt = Σ(Ad_{λ_jk} η_j − η_k) − [ξ_k, η_k]`, the body-frame form of plain consensus on `η^r`.
pub fn tc_right_cascade_rhs<G: LieGroup>(
    g: &[G],
    eta: &[AlgebraVector],
    graph: &CommGraph,
    t: f64,
) -> Result<(Vec<AlgebraVector>, Vec<AlgebraVector>), ControlError> {
    check_count(graph, g.len())?;
    check_count(graph, eta.len())?;
    check_dims::<G>(eta)?;
    let nbrs = graph.neighbor_lists(t);
    let mut xi = Vec::with_capacity(g.len());
    let mut rate = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let plain: Vec<_> = nbrs[k].iter().map(|&j| eta[j]).collect();
        // Σ(η_k − η_j) is minus the disagreement
        let q = G::pairing(&eta[k], &disagreement(&eta[k], &plain));
        let xi_k = eta[k] + q;
        let cons = disagreement(&eta[k], &transported(g, eta, k, &nbrs[k]));
        rate.push(cons - G::bracket(&xi_k, &eta[k]));
        xi.push(xi_k);
    }
    Ok((xi, rate))
}

/// Cascade for total coordination with a left-invariant reference.
///
/// `dη_k/dt = Σ(η_j − η_k)`, `q_k = ⟨η_k, Σ(η_k − Ad_{λ_jk} η_j)⟩`. Fully actuated agents use
/// `ξ_k = η_k + q_k`; with an underactuated setting the correction is projected,
/// `ξ_k = η_k + BBᵀ q_k`, which stays in `C` as long as `η_k` does.
pub fn tc_left_cascade_rhs<G: LieGroup>(
    g: &[G],
    eta: &[AlgebraVector],
    graph: &CommGraph,
    t: f64,
    setting: Option<&ControlSetting>,
) -> Result<(Vec<AlgebraVector>, Vec<AlgebraVector>), ControlError> {
    check_count(graph, g.len())?;
    check_count(graph, eta.len())?;
    check_dims::<G>(eta)?;
    let nbrs = graph.neighbor_lists(t);
    let mut xi = Vec::with_capacity(g.len());
    let mut rate = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let plain: Vec<_> = nbrs[k].iter().map(|&j| eta[j]).collect();
        let q = -G::pairing(&eta[k], &disagreement(&eta[k], &transported(g, eta, k, &nbrs[k])));
        let q = match setting {
            Some(cs) if !cs.is_fully_actuated() => cs.project_range(&q),
            _ => q,
        };
        xi.push(eta[k] + q);
        rate.push(disagreement(&eta[k], &plain));
    }
    Ok((xi, rate))
}

/// `[η_k, [η_k, Σ_{j⇝k}(η_k − η_j)]]`
pub fn double_bracket_rhs<G: LieGroup>(eta_k: &AlgebraVector, neighbors: &[AlgebraVector]) -> AlgebraVector {
    let s = -disagreement(eta_k, neighbors);
    G::bracket(eta_k, &G::bracket(eta_k, &s))
}

/// `f(η)` with `f_i = (η − Π_C(η))·[η, b_i]`, the linear representer of the controllable part of `dV_k/dt`.
pub fn underactuated_f<G: LieGroup>(eta: &AlgebraVector, setting: &ControlSetting) -> Vec<f64> {
    let residual = *eta - setting.project(eta);
    setting
        .columns()
        .iter()
        .map(|b| residual.dot(&G::bracket(eta, b)))
        .collect()
}

/// `V_k = ½‖η − Π_C(η)‖²`
pub fn lyapunov_vk(eta: &AlgebraVector, setting: &ControlSetting) -> f64 {
    0.5 * (*eta - setting.project(eta)).norm_squared()
}

/// The sign condition `(η − Π_C(η))·[η, Π_C(η)]`; the design needs it `≤ 0`.
pub fn assumption_margin<G: LieGroup>(eta: &AlgebraVector, setting: &ControlSetting) -> f64 {
    let p = setting.project(eta);
    (*eta - p).dot(&G::bracket(eta, &p))
}

/// Velocity of the underactuated design: `ξ = Π_C(η) − B f(η)`.
pub fn underactuated_velocity<G: LieGroup>(eta: &AlgebraVector, setting: &ControlSetting) -> AlgebraVector {
    let f = underactuated_f::<G>(eta, setting);
    setting
        .columns()
        .iter()
        .zip(&f)
        .fold(setting.project(eta), |acc, (b, fi)| acc.add_scaled(b, -fi))
}

/// Underactuated left-invariant coordination. Returns `ξ_k ∈ C` and the body-frame consensus
/// `dη_k/dt = Σ(Ad_{λ_jk} η_j − η_k) − [ξ_k, η_k]`.
pub fn underactuated_lic_rhs<G: LieGroup>(
    g: &[G],
    eta: &[AlgebraVector],
    graph: &CommGraph,
    t: f64,
    setting: &ControlSetting,
) -> Result<(Vec<AlgebraVector>, Vec<AlgebraVector>), ControlError> {
    check_count(graph, g.len())?;
    check_count(graph, eta.len())?;
    check_dims::<G>(eta)?;
    if setting.dim() != G::DIM {
        return Err(ControlError::Lie(crate::error::LieError::DimensionMismatch {
            expected: G::DIM,
            got: setting.dim(),
        }));
    }
    let nbrs = graph.neighbor_lists(t);
    let mut xi = Vec::with_capacity(g.len());
    let mut rate = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let xi_k = underactuated_velocity::<G>(&eta[k], setting);
        let cons = disagreement(&eta[k], &transported(g, eta, k, &nbrs[k]));
        rate.push(cons - G::bracket(&xi_k, &eta[k]));
        xi.push(xi_k);
    }
    Ok((xi, rate))
}

/// Steering input `u = η_ω + e₁ × η_v`.
pub fn se3_steering_input(eta_v: &Vector3<f64>, eta_w: &Vector3<f64>) -> Vector3<f64> {
    eta_w + Vector3::x().cross(eta_v)
}

/// Straight-line consensus for steering on SE(3):
/// `dη_{v,k}/dt = Σ(Q_kᵀQ_j η_{v,j} − η_{v,k}) − u_k × η_{v,k}`.
pub fn se3_steering_consensus_linear_rhs(
    g: &[Se3],
    eta_v: &[Vector3<f64>],
    graph: &CommGraph,
    t: f64,
    u: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>, ControlError> {
    check_count(graph, g.len())?;
    check_count(graph, eta_v.len())?;
    check_count(graph, u.len())?;
    let nbrs = graph.neighbor_lists(t);
    Ok((0..g.len())
        .map(|k| {
            let qk_t = g[k].rotation().transpose();
            let cons = nbrs[k]
                .iter()
                .fold(Vector3::zeros(), |acc, &j| acc + (qk_t * g[j].rotation() * eta_v[j] - eta_v[k]));
            cons - u[k].cross(&eta_v[k])
        })
        .collect())
}

/// Helical-motion auxiliary variables of the SE(3) steering design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Helical {
    pub alpha: Vector3<f64>,
    pub beta: Vector3<f64>,
    pub gamma: Vector3<f64>,
}

impl Helical {
    /// `η^l = (γ + β × α, α)`
    pub fn reconstruct(&self) -> AlgebraVector {
        AlgebraVector::from_parts(&(self.gamma + self.beta.cross(&self.alpha)), &self.alpha)
    }

    /// Spatial images `(Qα, Qβ + r, Qγ)`; each obeys plain consensus under the helical law.
    pub fn spatial(&self, g: &Se3) -> Helical {
        let q = g.rotation();
        Helical {
            alpha: q * self.alpha,
            beta: q * self.beta + g.position(),
            gamma: q * self.gamma,
        }
    }
}

/// Consensus part of the helical law, i.e. the terms without `−u × (·)` and `−e₁`.
pub(crate) fn helical_consensus_terms(g: &[Se3], aux: &[Helical], k: usize, nbrs: &[usize]) -> Helical {
    let qk_t = g[k].rotation().transpose();
    let mut out = Helical {
        alpha: Vector3::zeros(),
        beta: Vector3::zeros(),
        gamma: Vector3::zeros(),
    };
    for &j in nbrs {
        let rot = qk_t * g[j].rotation();
        out.alpha += rot * aux[j].alpha - aux[k].alpha;
        out.beta += rot * aux[j].beta - aux[k].beta + qk_t * (g[j].position() - g[k].position());
        out.gamma += rot * aux[j].gamma - aux[k].gamma;
    }
    out
}

/// Helical consensus for steering on SE(3):
///
/// `dα_k = Σ(Q_kᵀQ_j α_j − α_k) − u_k × α_k`,
/// `dβ_k = Σ(Q_kᵀQ_j β_j − β_k + Q_kᵀ(r_j − r_k)) − u_k × β_k − e₁`,
/// `dγ_k = Σ(Q_kᵀQ_j γ_j − γ_k) − u_k × γ_k`.
pub fn se3_steering_consensus_helical_rhs(
    g: &[Se3],
    aux: &[Helical],
    graph: &CommGraph,
    t: f64,
    u: &[Vector3<f64>],
) -> Result<Vec<Helical>, ControlError> {
    check_count(graph, g.len())?;
    check_count(graph, aux.len())?;
    check_count(graph, u.len())?;
    let nbrs = graph.neighbor_lists(t);
    Ok((0..g.len())
        .map(|k| {
            let c = helical_consensus_terms(g, aux, k, &nbrs[k]);
            Helical {
                alpha: c.alpha - u[k].cross(&aux[k].alpha),
                beta: c.beta - u[k].cross(&aux[k].beta) - Vector3::x(),
                gamma: c.gamma - u[k].cross(&aux[k].gamma),
            }
        })
        .collect())
}

/// Experimental: gradient of `V_l + V_r` on left-invariant velocities,
/// `dξ_k/dt = Σ(ξ_j − ξ_k) + Σ(Ad_{λ_jk} ξ_j − ξ_k)`.
pub fn combined_gradient_rhs<G: LieGroup>(
    g: &[G],
    xi: &[AlgebraVector],
    graph: &CommGraph,
    t: f64,
) -> Result<Vec<AlgebraVector>, ControlError> {
    let a = ric_consensus_rhs(xi, graph, t)?;
    let b = lic_consensus_rhs(g, xi, graph, t)?;
    Ok(a.into_iter().zip(b).map(|(x, y)| x + y).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{rotation_about, So3};
    use crate::lie::GroupKind;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn v3(x: f64, y: f64, z: f64) -> AlgebraVector {
        AlgebraVector::from_slice(&[x, y, z])
    }

    #[test]
    fn ric_examples() {
        let g = CommGraph::complete(2);
        let out = ric_consensus_rhs(&[v3(1.0, 0.0, 0.0), v3(0.0, 0.0, 0.0)], &g, 0.0).unwrap();
        assert_eq!(out[0].as_slice(), &[-1.0, 0.0, 0.0]);
        assert_eq!(out[1].as_slice(), &[1.0, 0.0, 0.0]);
        let same = ric_consensus_rhs(&[v3(1.0, 2.0, 3.0); 3], &CommGraph::complete(3), 0.0).unwrap();
        assert!(same.iter().all(|d| d.max_abs() == 0.0));
    }

    #[test]
    fn lic_reduces_to_ric_at_common_position() {
        let g = vec![So3::identity(); 3];
        let xi = vec![v3(1.0, 0.0, 0.0), v3(0.0, 2.0, 0.0), v3(0.0, 0.0, 3.0)];
        let graph = CommGraph::ring(3);
        assert_eq!(
            lic_consensus_rhs(&g, &xi, &graph, 0.0).unwrap(),
            ric_consensus_rhs(&xi, &graph, 0.0).unwrap()
        );
    }

    #[test]
    fn right_cascade_so3_example() {
        let g = vec![So3::identity(); 2];
        let eta = vec![v3(1.0, 0.0, 0.0), v3(0.0, 1.0, 0.0)];
        let (xi, _) = tc_right_cascade_rhs(&g, &eta, &CommGraph::complete(2), 0.0).unwrap();
        // q₁ = e₁ × (e₁ − e₂) = −e₃
        assert_relative_eq!((xi[0] - eta[0]).as_slice(), [0.0, 0.0, -1.0].as_slice());
    }

    #[test]
    fn left_cascade_matches_so3_closed_form() {
        let g = vec![
            So3::identity(),
            So3::from_matrix_unchecked(rotation_about(&Vector3::z(), FRAC_PI_2)),
        ];
        let eta = vec![v3(1.0, 0.0, 0.0), v3(1.0, 0.0, 0.0)];
        let (xi, rate) = tc_left_cascade_rhs(&g, &eta, &CommGraph::complete(2), 0.0, None).unwrap();
        for k in 0..2 {
            let j = 1 - k;
            let qkqj = g[k].matrix().transpose() * g[j].matrix();
            let closed = eta[k].head3() + eta[k].head3().cross(&(qkqj * eta[j].head3()));
            assert_relative_eq!(xi[k].head3(), closed, epsilon = 1e-15);
            assert_eq!(rate[k].max_abs(), 0.0);
        }
    }

    #[test]
    fn double_bracket_example() {
        let out = double_bracket_rhs::<So3>(&v3(1.0, 0.0, 0.0), &[v3(0.0, 1.0, 0.0)]);
        assert_relative_eq!(out.as_slice(), [0.0, 1.0, 0.0].as_slice());
    }

    #[test]
    fn steering_f_matches_cross_product() {
        let cs = ControlSetting::steering(GroupKind::Se3).unwrap();
        let eta = AlgebraVector::from_slice(&[0.2, 1.0, -0.4, 0.3, 0.1, 0.8]);
        let f = underactuated_f::<Se3>(&eta, &cs);
        let expected = eta.head3().cross(&Vector3::x());
        assert_relative_eq!(Vector3::from_column_slice(&f), expected, epsilon = 1e-15);

        // η_v = e₂: correction e₁ × e₂ = e₃
        let eta = AlgebraVector::from_slice(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let xi = underactuated_velocity::<Se3>(&eta, &cs);
        assert_relative_eq!(xi.as_slice(), [1.0, 0.0, 0.0, 0.0, 0.0, 1.0].as_slice());
        assert_relative_eq!(
            se3_steering_input(&eta.head3(), &eta.tail3()),
            Vector3::z()
        );
    }

    #[test]
    fn underactuated_vanishes_on_c() {
        let cs = ControlSetting::steering(GroupKind::Se3).unwrap();
        let eta = cs.apply(&[0.4, -0.2, 0.9]);
        assert_eq!(lyapunov_vk(&eta, &cs), 0.0);
        assert!(underactuated_f::<Se3>(&eta, &cs).iter().all(|&f| f == 0.0));
        assert_eq!(underactuated_velocity::<Se3>(&eta, &cs), eta);
    }

    #[test]
    fn linear_single_agent() {
        let g = vec![Se3::identity()];
        let out = se3_steering_consensus_linear_rhs(&g, &[Vector3::x()], &CommGraph::empty(1), 0.0, &[Vector3::z()])
            .unwrap();
        assert_relative_eq!(out[0], -Vector3::y());
    }

    #[test]
    fn helical_single_agent() {
        let g = vec![Se3::identity()];
        let aux = [Helical {
            alpha: Vector3::z(),
            beta: Vector3::zeros(),
            gamma: Vector3::x(),
        }];
        let out =
            se3_steering_consensus_helical_rhs(&g, &aux, &CommGraph::empty(1), 0.0, &[Vector3::zeros()]).unwrap();
        assert_eq!(out[0].alpha, Vector3::zeros());
        assert_eq!(out[0].gamma, Vector3::zeros());
        assert_eq!(out[0].beta, -Vector3::x());
    }

    #[test]
    fn agent_count_checked() {
        let err = ric_consensus_rhs(&[v3(0.0, 0.0, 0.0)], &CommGraph::complete(2), 0.0);
        assert!(matches!(err, Err(ControlError::AgentCount { expected: 2, got: 1 })));
    }
}
