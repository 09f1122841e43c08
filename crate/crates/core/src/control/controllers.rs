//! Closed-loop controllers: each wraps one of the right-hand sides together with
//! the bookkeeping the simulator needs (auxiliary state layout, frame, metrics).

use nalgebra::Vector3;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::AlgebraVector;
use crate::control::rhs::{self, Helical};
use crate::control::setting::ControlSetting;
use crate::error::ControlError;
use crate::graph::CommGraph;
use crate::groups::{Se2, Se3, So3};
use crate::lie::{GroupKind, LieGroup};

/// Feasibility tolerance for `η(0) ∈ C`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Per-agent auxiliary state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuxVar {
    None,
    Algebra(AlgebraVector),
    Helical(Helical),
}

impl AuxVar {
    /// `self + h · rate`
    pub fn axpy(&self, rate: &AuxVar, h: f64) -> AuxVar {
        match (self, rate) {
            (AuxVar::None, _) => AuxVar::None,
            (AuxVar::Algebra(x), AuxVar::Algebra(r)) => AuxVar::Algebra(x.add_scaled(r, h)),
            (AuxVar::Helical(x), AuxVar::Helical(r)) => AuxVar::Helical(Helical {
                alpha: x.alpha + r.alpha * h,
                beta: x.beta + r.beta * h,
                gamma: x.gamma + r.gamma * h,
            }),
            _ => panic!("auxiliary variable and rate have different layouts"),
        }
    }

    pub fn zero_like(&self) -> AuxVar {
        match self {
            AuxVar::None => AuxVar::None,
            AuxVar::Algebra(x) => AuxVar::Algebra(AlgebraVector::zeros(x.dim())),
            AuxVar::Helical(_) => AuxVar::Helical(Helical {
                alpha: Vector3::zeros(),
                beta: Vector3::zeros(),
                gamma: Vector3::zeros(),
            }),
        }
    }

    /// Flat values, as written to trajectory files.
    pub fn values(&self) -> Vec<f64> {
        match self {
            AuxVar::None => Vec::new(),
            AuxVar::Algebra(x) => x.as_slice().to_vec(),
            AuxVar::Helical(h) => h
                .alpha
                .iter()
                .chain(h.beta.iter())
                .chain(h.gamma.iter())
                .copied()
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn algebra(&self) -> Option<&AlgebraVector> {
        match self {
            AuxVar::Algebra(x) => Some(x),
            _ => None,
        }
    }

    pub fn helical(&self) -> Option<&Helical> {
        match self {
            AuxVar::Helical(h) => Some(h),
            _ => None,
        }
    }
}

/// How the auxiliary variable relates to the agent frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxFrame {
    /// Evolves as a plain ODE in a fixed vector space.
    Invariant,
    /// Body-frame image of a spatial variable; `η̇ + [ξ, η]` is the spatial rate pulled back.
    Body,
}

/// Metric a controller is designed to drive to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    None,
    Vr,
    Vl,
    Vtr,
    Vtl,
    /// Largest per-agent `V_k`.
    Vk,
}

/// One evaluation of the closed loop.
#[derive(Debug, Clone)]
pub struct ControlOutput {
    pub xi: Vec<AlgebraVector>,
    pub aux_rate: Vec<AuxVar>,
    /// Largest value of the underactuated sign condition across agents, when monitored.
    pub assumption_margin: Option<f64>,
}

pub trait Controller<G: LieGroup>: Send + Sync {
    fn name(&self) -> &'static str;

    fn aux_frame(&self) -> AuxFrame {
        AuxFrame::Invariant
    }

    /// False for modes whose feedback uses absolute positions.
    fn is_left_invariant(&self) -> bool {
        true
    }

    fn setting(&self) -> Option<&ControlSetting> {
        None
    }

    fn objective(&self) -> Objective {
        Objective::None
    }

    /// Seeded random auxiliary state for one agent.
    fn initial_aux(&self, rng: &mut dyn RngCore, scale: f64) -> AuxVar;

    fn validate(&self, g: &[G], aux: &[AuxVar]) -> Result<(), ControlError>;

    fn evaluate(&self, t: f64, g: &[G], aux: &[AuxVar], graph: &CommGraph) -> Result<ControlOutput, ControlError>;

    /// Left-invariant reference `η_k^l` entering `V_tr` and `V_tl`.
    fn reference(&self, _g: &G, aux: &AuxVar) -> Option<AlgebraVector> {
        aux.algebra().copied()
    }

    /// `V_k` for one agent, when the design defines it.
    fn lyapunov(&self, _g: &G, _aux: &AuxVar) -> Option<f64> {
        None
    }

    /// One step of a body-frame auxiliary variable that applies the spatial Euler update exactly:
    /// `η⁺ = Ad_{exp(hξ)}⁻¹ (η + h(η̇ + [ξ, η]))`.
    fn transport(&self, step: &G, xi: &AlgebraVector, aux: &AuxVar, rate: &AuxVar, h: f64) -> AuxVar {
        match (aux, rate) {
            (AuxVar::Algebra(eta), AuxVar::Algebra(r)) => {
                let spatial_rate = *r + G::bracket(xi, eta);
                AuxVar::Algebra(step.adjoint_inv(&eta.add_scaled(&spatial_rate, h)))
            }
            _ => aux.axpy(rate, h),
        }
    }
}

fn gaussian(rng: &mut dyn RngCore, dim: usize, scale: f64) -> AlgebraVector {
    AlgebraVector::from_fn(dim, |_| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

fn aux_algebra<G: LieGroup>(name: &'static str, aux: &[AuxVar]) -> Result<Vec<AlgebraVector>, ControlError> {
    aux.iter()
        .map(|a| match a {
            AuxVar::Algebra(x) if x.dim() == G::DIM => Ok(*x),
            AuxVar::Algebra(x) => Err(ControlError::AuxShape {
                controller: name,
                expected: G::DIM,
                got: x.dim(),
            }),
            other => Err(ControlError::AuxShape {
                controller: name,
                expected: G::DIM,
                got: other.values().len(),
            }),
        })
        .collect()
}

fn check_lengths(n: usize, aux: usize) -> Result<(), ControlError> {
    if n != aux {
        return Err(ControlError::AgentCount { expected: n, got: aux });
    }
    Ok(())
}

fn wrap(xi: Vec<AlgebraVector>, rate: Vec<AlgebraVector>) -> ControlOutput {
    ControlOutput {
        xi,
        aux_rate: rate.into_iter().map(AuxVar::Algebra).collect(),
        assumption_margin: None,
    }
}

/// `ξ ≡ 0`.
#[derive(Debug, Clone, Default)]
pub struct ZeroController;

impl<G: LieGroup> Controller<G> for ZeroController {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn initial_aux(&self, _rng: &mut dyn RngCore, _scale: f64) -> AuxVar {
        AuxVar::None
    }

    fn validate(&self, g: &[G], aux: &[AuxVar]) -> Result<(), ControlError> {
        check_lengths(g.len(), aux.len())
    }

    fn evaluate(&self, _t: f64, g: &[G], _aux: &[AuxVar], _graph: &CommGraph) -> Result<ControlOutput, ControlError> {
        Ok(ControlOutput {
            xi: vec![G::zero_algebra(); g.len()],
            aux_rate: vec![AuxVar::None; g.len()],
            assumption_margin: None,
        })
    }
}

/// Constant body velocities, stored as the auxiliary variable.
#[derive(Debug, Clone, Default)]
pub struct OpenLoop;

impl<G: LieGroup> Controller<G> for OpenLoop {
    fn name(&self) -> &'static str {
        "open-loop"
    }

    fn initial_aux(&self, rng: &mut dyn RngCore, scale: f64) -> AuxVar {
        AuxVar::Algebra(gaussian(rng, G::DIM, scale))
    }

    fn validate(&self, g: &[G], aux: &[AuxVar]) -> Result<(), ControlError> {
        check_lengths(g.len(), aux.len())?;
        aux_algebra::<G>("open-loop", aux).map(|_| ())
    }

    fn evaluate(&self, _t: f64, _g: &[G], aux: &[AuxVar], _graph: &CommGraph) -> Result<ControlOutput, ControlError> {
        let xi = aux_algebra::<G>("open-loop", aux)?;
        let zeros = vec![G::zero_algebra(); xi.len()];
        Ok(wrap(xi, zeros))
    }
}

/// Consensus on left-invariant velocities (right-invariant coordination).
#[derive(Debug, Clone, Default)]
pub struct RicConsensus;

impl<G: LieGroup> Controller<G> for RicConsensus {
    fn name(&self) -> &'static str {
        "ric-consensus"
    }

    fn objective(&self) -> Objective {
        Objective::Vr
    }

    fn initial_aux(&self, rng: &mut dyn RngCore, scale: f64) -> AuxVar {
        AuxVar::Algebra(gaussian(rng, G::DIM, scale))
    }

    fn validate(&self, g: &[G], aux: &[AuxVar]) -> Result<(), ControlError> {
        check_lengths(g.len(), aux.len())?;
        aux_algebra::<G>(<Self as Controller<G>>::name(self), aux).map(|_| ())
    }

    fn evaluate(&self, t: f64, _g: &[G], aux: &[AuxVar], graph: &CommGraph) -> Result<ControlOutput, ControlError> {
        let xi = aux_algebra::<G>("ric-consensus", aux)?;
        let rate = rhs::ric_consensus_rhs(&xi, graph, t)?;
        Ok(wrap(xi, rate))
    }
}

/// Consensus on right-invariant velocities written with left-invariant variables.
#[derive(Debug, Clone, Default)]
pub struct LicConsensus;

impl<G: LieGroup> Controller<G> for LicConsensus {
    fn name(&self) -> &'static str {
        "lic-consensus"
    }

    fn aux_frame(&self) -> AuxFrame {
        AuxFrame::Body
    }

    fn objective(&self) -> Objective {
        Objective::Vl
    }

    fn initial_aux(&self, rng: &mut dyn RngCore, scale: f64) -> AuxVar {
        AuxVar::Algebra(gaussian(rng, G::DIM, scale))
    }

    fn validate(&self, g: &[G], aux: &[AuxVar]) -> Result<(), ControlError> {
        check_lengths(g.len(), aux.len())?;
        aux_algebra::<G>("lic-consensus", aux).map(|_| ())
    }

    fn evaluate(&self, t: f64, g: &[G], aux: &[AuxVar], graph: &CommGraph) -> Result<ControlOutput, ControlError> {
        let xi = aux_algebra::<G>("lic-consensus", aux)?;
        let rate = rhs::lic_consensus_rhs(g, &xi, graph, t)?;
        Ok(wrap(xi, rate))
    }
}

/// Experimental gradient of `V_l + V_r`; carries no convergence claim.
#[derive(Debug, Clone, Default)]
pub struct CombinedGradient;

impl<G: LieGroup> Controller<G> for CombinedGradient {
    fn name(&self) -> &'static str {
        "combined-gradient"
    }

    fn objective(&self) -> Objective {
        Objective::Vr
    }

    fn initial_aux(&self, rng: &mut dyn RngCore, scale: f64) -> AuxVar {
        AuxVar::Algebra(gaussian(rng, G::DIM, scale))
    }

    fn validate(&self, g: &[G], aux: &[AuxVar]) -> Result<(), ControlError> {
        check_lengths(g.len(), aux.len())?;
        aux_algebra::<G>("combined-gradient", aux).map(|_| ())
    }

    fn evaluate(&self, t: f64, g: &[G], aux: &[AuxVar], graph: &CommGraph) -> Result<ControlOutput, ControlError> {
        let xi = aux_algebra::<G>("combined-gradient", aux)?;
        let rate = rhs::combined_gradient_rhs(g, &xi, graph, t)?;
        Ok(wrap(xi, rate))
    }
}

/// Total coordination through consensus on a right-invariant reference `η^r`.
///
/// With `frozen = Some(ξ^r)` every agent uses `η_k = Ad_{g_k}⁻¹ ξ^r` instead of its auxiliary
/// variable. That mode reads absolute positions, so it is a verification harness rather than a
/// left-invariant law.
#[derive(Debug, Clone, Default)]
pub struct TcRightCascade {
    pub frozen: Option<AlgebraVector>,
}

impl TcRightCascade {
    fn etas<G: LieGroup>(&self, g: &[G], aux: &[AuxVar]) -> Result<Vec<AlgebraVector>, ControlError> {
        match &self.frozen {
            Some(xr) => Ok(g.iter().map(|gk| gk.adjoint_inv(xr)).collect()),
            None => aux_algebra::<G>("tc-right-cascade", aux),
        }
    }
}

impl<G: LieGroup> Controller<G> for TcRightCascade {
    fn name(&self) -> &'static str {
        "tc-right-cascade"
    }

    fn aux_frame(&self) -> AuxFrame {
        AuxFrame::Body
    }

    fn is_left_invariant(&self) -> bool {
        self.frozen.is_none()
    }

    fn objective(&self) -> Objective {
        Objective::Vtr
    }

    fn initial_aux(&self, rng: &mut dyn RngCore, scale: f64) -> AuxVar {
        match self.frozen {
            Some(_) => AuxVar::None,
            None => AuxVar::Algebra(gaussian(rng, G::DIM, scale)),
        }
    }

    fn validate(&self, g: &[G], aux: &[AuxVar]) -> Result<(), ControlError> {
        check_lengths(g.len(), aux.len())?;
        if let Some(xr) = &self.frozen {
            crate::lie::check_algebra::<G>(xr)?;
            return Ok(());
        }
        aux_algebra::<G>("tc-right-cascade", aux).map(|_| ())
    }

    fn evaluate(&self, t: f64, g: &[G], aux: &[AuxVar], graph: &CommGraph) -> Result<ControlOutput, ControlError> {
        let eta = self.etas(g, aux)?;
        let (xi, rate) = rhs::tc_right_cascade_rhs(g, &eta, graph, t)?;
        if self.frozen.is_some() {
            return Ok(ControlOutput {
                xi,
                aux_rate: vec![AuxVar::None; g.len()],
                assumption_margin: None,
            });
        }
        Ok(wrap(xi, rate))
    }

    fn reference(&self, g: &G, aux: &AuxVar) -> Option<AlgebraVector> {
        match &self.frozen {
            Some(xr) => Some(g.adjoint_inv(xr)),
            None => aux.algebra().copied(),
        }
    }
}

/// Total coordination through consensus on a left-invariant reference `η^l`, optionally with
/// the correction projected on the actuated directions.
#[derive(Debug, Clone, Default)]
pub struct TcLeftCascade {
    pub setting: Option<ControlSetting>,
}

impl TcLeftCascade {
    fn underactuated(&self) -> Option<&ControlSetting> {
        self.setting.as_ref().filter(|cs| !cs.is_fully_actuated())
    }
}

impl<G: LieGroup> Controller<G> for TcLeftCascade {
    fn name(&self) -> &'static str {
        "tc-left-cascade"
    }

    fn setting(&self) -> Option<&ControlSetting> {
        self.setting.as_ref()
    }

    fn objective(&self) -> Objective {
        Objective::Vtl
    }

    fn initial_aux(&self, rng: &mut dyn RngCore, scale: f64) -> AuxVar {
        let eta = gaussian(rng, G::DIM, scale);
        match self.underactuated() {
            Some(cs) => AuxVar::Algebra(cs.project(&eta)),
            None => AuxVar::Algebra(eta),
        }
    }

    fn validate(&self, g: &[G], aux: &[AuxVar]) -> Result<(), ControlError> {
        check_lengths(g.len(), aux.len())?;
        let eta = aux_algebra::<G>("tc-left-cascade", aux)?;
        if let Some(cs) = &self.setting {
            if cs.dim() != G::DIM {
                return Err(crate::error::LieError::DimensionMismatch {
                    expected: G::DIM,
                    got: cs.dim(),
                }
                .into());
            }
        }
        if let Some(cs) = self.underactuated() {
            for (agent, e) in eta.iter().enumerate() {
                let distance = cs.distance(e);
                if distance > FEASIBILITY_TOL * e.norm().max(1.0) {
                    return Err(ControlError::InfeasibleInitial { agent, distance });
                }
            }
        }
        Ok(())
    }

    fn evaluate(&self, t: f64, g: &[G], aux: &[AuxVar], graph: &CommGraph) -> Result<ControlOutput, ControlError> {
        let eta = aux_algebra::<G>("tc-left-cascade", aux)?;
        let (xi, rate) = rhs::tc_left_cascade_rhs(g, &eta, graph, t, self.setting.as_ref())?;
        Ok(wrap(xi, rate))
    }
}

/// Underactuated left-invariant coordination: `ξ = Π_C(η) − B f(η)` with body-frame consensus on `η`.
///
/// The sign condition `(η − Π_C(η))·[η, Π_C(η)] ≤ 0` is monitored at every evaluation.
#[derive(Debug, Clone)]
pub struct UnderactuatedLic {
    pub setting: ControlSetting,
}

impl<G: LieGroup> Controller<G> for UnderactuatedLic {
    fn name(&self) -> &'static str {
        "underactuated-lic"
    }

    fn aux_frame(&self) -> AuxFrame {
        AuxFrame::Body
    }

    fn setting(&self) -> Option<&ControlSetting> {
        Some(&self.setting)
    }

    fn objective(&self) -> Objective {
        Objective::Vk
    }

    fn initial_aux(&self, rng: &mut dyn RngCore, scale: f64) -> AuxVar {
        AuxVar::Algebra(gaussian(rng, G::DIM, scale))
    }

    fn validate(&self, g: &[G], aux: &[AuxVar]) -> Result<(), ControlError> {
        check_lengths(g.len(), aux.len())?;
        if self.setting.dim() != G::DIM {
            return Err(crate::error::LieError::DimensionMismatch {
                expected: G::DIM,
                got: self.setting.dim(),
            }
            .into());
        }
        aux_algebra::<G>("underactuated-lic", aux).map(|_| ())
    }

    fn evaluate(&self, t: f64, g: &[G], aux: &[AuxVar], graph: &CommGraph) -> Result<ControlOutput, ControlError> {
        let eta = aux_algebra::<G>("underactuated-lic", aux)?;
        let (xi, rate) = rhs::underactuated_lic_rhs(g, &eta, graph, t, &self.setting)?;
        let margin = eta
            .iter()
            .map(|e| rhs::assumption_margin::<G>(e, &self.setting))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut out = wrap(xi, rate);
        out.assumption_margin = Some(margin);
        Ok(out)
    }

    fn lyapunov(&self, _g: &G, aux: &AuxVar) -> Option<f64> {
        aux.algebra().map(|e| rhs::lyapunov_vk(e, &self.setting))
    }
}

/// Steering on SE(3) toward straight-line formation motion.
///
/// The auxiliary variable is `η = (η_v, 0)`. Only the direction of `η_v` matters for steering,
/// so the position controller and `V_k` use `η_v / ‖η_v‖`; the consensus acts on `η_v` itself.
#[derive(Debug, Clone)]
pub struct Se3SteeringLinear {
    setting: ControlSetting,
}

impl Default for Se3SteeringLinear {
    fn default() -> Self {
        Se3SteeringLinear {
            setting: ControlSetting::steering(GroupKind::Se3).expect("steering preset"),
        }
    }
}

impl Se3SteeringLinear {
    fn unit(eta_v: &Vector3<f64>) -> Vector3<f64> {
        let n = eta_v.norm();
        if n > 0.0 {
            eta_v / n
        } else {
            *eta_v
        }
    }
}

impl Controller<Se3> for Se3SteeringLinear {
    fn name(&self) -> &'static str {
        "se3-steering-linear"
    }

    fn aux_frame(&self) -> AuxFrame {
        AuxFrame::Body
    }

    fn setting(&self) -> Option<&ControlSetting> {
        Some(&self.setting)
    }

    fn objective(&self) -> Objective {
        Objective::Vk
    }

    fn initial_aux(&self, rng: &mut dyn RngCore, scale: f64) -> AuxVar {
        let v = gaussian(rng, 3, scale).head3();
        AuxVar::Algebra(AlgebraVector::from_parts(&v, &Vector3::zeros()))
    }

    fn validate(&self, g: &[Se3], aux: &[AuxVar]) -> Result<(), ControlError> {
        check_lengths(g.len(), aux.len())?;
        for (agent, e) in aux_algebra::<Se3>("se3-steering-linear", aux)?.iter().enumerate() {
            let w = e.tail3().norm();
            if w > 0.0 || e.head3().norm() == 0.0 {
                return Err(ControlError::InfeasibleInitial { agent, distance: w });
            }
        }
        Ok(())
    }

    fn evaluate(&self, t: f64, g: &[Se3], aux: &[AuxVar], graph: &CommGraph) -> Result<ControlOutput, ControlError> {
        let eta = aux_algebra::<Se3>("se3-steering-linear", aux)?;
        let eta_v: Vec<_> = eta.iter().map(|e| e.head3()).collect();
        let u: Vec<_> = eta_v
            .iter()
            .map(|v| rhs::se3_steering_input(&Self::unit(v), &Vector3::zeros()))
            .collect();
        let rate = rhs::se3_steering_consensus_linear_rhs(g, &eta_v, graph, t, &u)?;
        let xi = u
            .iter()
            .map(|uk| AlgebraVector::from_parts(&Vector3::x(), uk))
            .collect();
        let rate = rate
            .iter()
            .map(|r| AlgebraVector::from_parts(r, &Vector3::zeros()))
            .collect();
        Ok(wrap(xi, rate))
    }

    fn lyapunov(&self, _g: &Se3, aux: &AuxVar) -> Option<f64> {
        aux.algebra()
            .map(|e| 0.5 * (Self::unit(&e.head3()) - Vector3::x()).norm_squared())
    }
}

/// Steering on SE(3) toward helical formation motion with auxiliary variables `(α, β, γ)`.
#[derive(Debug, Clone)]
pub struct Se3SteeringHelical {
    setting: ControlSetting,
}

impl Default for Se3SteeringHelical {
    fn default() -> Self {
        Se3SteeringHelical {
            setting: ControlSetting::steering(GroupKind::Se3).expect("steering preset"),
        }
    }
}

impl Se3SteeringHelical {
    fn triples(aux: &[AuxVar]) -> Result<Vec<Helical>, ControlError> {
        aux.iter()
            .map(|a| {
                a.helical().copied().ok_or(ControlError::AuxShape {
                    controller: "se3-steering-helical",
                    expected: 9,
                    got: a.values().len(),
                })
            })
            .collect()
    }

    fn input(h: &Helical) -> Vector3<f64> {
        let eta = h.reconstruct();
        rhs::se3_steering_input(&eta.head3(), &eta.tail3())
    }
}

impl Controller<Se3> for Se3SteeringHelical {
    fn name(&self) -> &'static str {
        "se3-steering-helical"
    }

    fn aux_frame(&self) -> AuxFrame {
        AuxFrame::Body
    }

    fn setting(&self) -> Option<&ControlSetting> {
        Some(&self.setting)
    }

    fn objective(&self) -> Objective {
        Objective::Vk
    }

    /// `α, β` Gaussian; `γ` uniform in the unit ball, so the consensus limit of `Qγ` stays
    /// inside the ball and the agreed velocity is realizable.
    fn initial_aux(&self, rng: &mut dyn RngCore, scale: f64) -> AuxVar {
        let alpha = gaussian(rng, 3, scale).head3();
        let beta = gaussian(rng, 3, scale).head3();
        let gamma = loop {
            let c = Vector3::from_fn(|_, _| rand::Rng::random_range(&mut *rng, -1.0..=1.0));
            if c.norm() <= 1.0 {
                break c;
            }
        };
        AuxVar::Helical(Helical { alpha, beta, gamma })
    }

    fn validate(&self, g: &[Se3], aux: &[AuxVar]) -> Result<(), ControlError> {
        check_lengths(g.len(), aux.len())?;
        Self::triples(aux).map(|_| ())
    }

    fn evaluate(&self, t: f64, g: &[Se3], aux: &[AuxVar], graph: &CommGraph) -> Result<ControlOutput, ControlError> {
        let trip = Self::triples(aux)?;
        let u: Vec<_> = trip.iter().map(Self::input).collect();
        let rate = rhs::se3_steering_consensus_helical_rhs(g, &trip, graph, t, &u)?;
        Ok(ControlOutput {
            xi: u
                .iter()
                .map(|uk| AlgebraVector::from_parts(&Vector3::x(), uk))
                .collect(),
            aux_rate: rate.into_iter().map(AuxVar::Helical).collect(),
            assumption_margin: None,
        })
    }

    fn reference(&self, _g: &Se3, aux: &AuxVar) -> Option<AlgebraVector> {
        aux.helical().map(Helical::reconstruct)
    }

    fn lyapunov(&self, _g: &Se3, aux: &AuxVar) -> Option<f64> {
        aux.helical()
            .map(|h| 0.5 * (h.reconstruct().head3() - Vector3::x()).norm_squared())
    }

    /// Exact spatial Euler step of `(Qα, Qβ + r, Qγ)`: with `exp(hξ) = (p, R)`,
    /// `α⁺ = Rᵀ(α + h S_α)`, `β⁺ = Rᵀ(β + h S_β − p)`, `γ⁺ = Rᵀ(γ + h S_γ)`,
    /// where `S` are the consensus terms.
    fn transport(&self, step: &Se3, xi: &AlgebraVector, aux: &AuxVar, rate: &AuxVar, h: f64) -> AuxVar {
        let (Some(x), Some(r)) = (aux.helical(), rate.helical()) else {
            return aux.axpy(rate, h);
        };
        let u = xi.tail3();
        let s_alpha = r.alpha + u.cross(&x.alpha);
        let s_beta = r.beta + u.cross(&x.beta) + Vector3::x();
        let s_gamma = r.gamma + u.cross(&x.gamma);
        let rt = step.rotation().transpose();
        AuxVar::Helical(Helical {
            alpha: rt * (x.alpha + s_alpha * h),
            beta: rt * (x.beta + s_beta * h - step.position()),
            gamma: rt * (x.gamma + s_gamma * h),
        })
    }
}

/// Groups the simulator can run, with access to the group-specific controllers.
pub trait SimGroup: LieGroup {
    fn steering_linear() -> Result<Box<dyn Controller<Self>>, ControlError> {
        Err(ControlError::WrongGroup {
            controller: "se3-steering-linear",
            required: GroupKind::Se3,
        })
    }

    fn steering_helical() -> Result<Box<dyn Controller<Self>>, ControlError> {
        Err(ControlError::WrongGroup {
            controller: "se3-steering-helical",
            required: GroupKind::Se3,
        })
    }
}

impl SimGroup for So3 {}
impl SimGroup for Se2 {}

impl SimGroup for Se3 {
    fn steering_linear() -> Result<Box<dyn Controller<Self>>, ControlError> {
        Ok(Box::new(Se3SteeringLinear::default()))
    }

    fn steering_helical() -> Result<Box<dyn Controller<Self>>, ControlError> {
        Ok(Box::new(Se3SteeringHelical::default()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::random_algebra;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn body_transport_applies_spatial_update() {
        // Ad_{g⁺} η⁺ = Ad_g η + h Ad_g (η̇ + [ξ, η]) for every group element g
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let ctrl = LicConsensus;
        for _ in 0..50 {
            let g = Se3::random(&mut rng, 2.0);
            let xi = random_algebra::<Se3, _>(&mut rng, 1.0);
            let eta = random_algebra::<Se3, _>(&mut rng, 1.0);
            let rate = random_algebra::<Se3, _>(&mut rng, 1.0);
            let h = 0.05;
            let step = Se3::exp(&(xi * h));
            let next = Controller::<Se3>::transport(&ctrl, &step, &xi, &AuxVar::Algebra(eta), &AuxVar::Algebra(rate), h);
            let lhs = g.compose(&step).adjoint(next.algebra().unwrap());
            let rhs = g.adjoint(&eta) + g.adjoint(&(rate + Se3::bracket(&xi, &eta))) * h;
            assert!((lhs - rhs).max_abs() < 1e-12);
        }
    }

    #[test]
    fn helical_transport_applies_spatial_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let ctrl = Se3SteeringHelical::default();
        for _ in 0..50 {
            let g = Se3::random(&mut rng, 2.0);
            let aux = ctrl.initial_aux(&mut rng, 1.0);
            let rate = ctrl.initial_aux(&mut rng, 1.0);
            let u = random_algebra::<So3, _>(&mut rng, 1.0).head3();
            let xi = AlgebraVector::from_parts(&Vector3::x(), &u);
            let h = 0.05;
            let step = Se3::exp(&(xi * h));
            let next = ctrl.transport(&step, &xi, &aux, &rate, h);
            let (x, r) = (aux.helical().unwrap(), rate.helical().unwrap());
            let before = x.spatial(&g);
            let after = next.helical().unwrap().spatial(&g.compose(&step));
            let q = g.rotation();
            let expected_alpha = before.alpha + q * (r.alpha + u.cross(&x.alpha)) * h;
            let expected_beta = before.beta + q * (r.beta + u.cross(&x.beta) + Vector3::x()) * h;
            assert!((after.alpha - expected_alpha).norm() < 1e-12);
            assert!((after.beta - expected_beta).norm() < 1e-12);
        }
    }

    #[test]
    fn underactuated_left_cascade_rejects_infeasible_start() {
        let cs = ControlSetting::steering(GroupKind::Se2).unwrap();
        let ctrl = TcLeftCascade { setting: Some(cs) };
        let g = vec![Se2::identity(); 2];
        let aux = vec![
            AuxVar::Algebra(AlgebraVector::from_slice(&[1.0, 0.0, 0.3])),
            AuxVar::Algebra(AlgebraVector::from_slice(&[0.5, 0.0, 0.3])),
        ];
        assert!(matches!(
            Controller::<Se2>::validate(&ctrl, &g, &aux),
            Err(ControlError::InfeasibleInitial { agent: 1, .. })
        ));
    }

    #[test]
    fn underactuated_output_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let cs = ControlSetting::steering(GroupKind::Se3).unwrap();
        let ctrl = UnderactuatedLic { setting: cs.clone() };
        let g: Vec<_> = (0..4).map(|_| Se3::random(&mut rng, 2.0)).collect();
        let aux: Vec<_> = (0..4).map(|_| Controller::<Se3>::initial_aux(&ctrl, &mut rng, 1.0)).collect();
        let out = ctrl.evaluate(0.0, &g, &aux, &CommGraph::ring(4)).unwrap();
        for xi in &out.xi {
            assert!(cs.distance(xi) < 1e-12);
        }
        assert!(out.assumption_margin.unwrap().abs() < 1e-12);
    }
}
