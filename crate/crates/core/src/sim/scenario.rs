//! Scenario files: a versioned TOML schema describing one simulation run.
//!
//! ```toml
//! version = 1
//! group = "so3"
//! agents = 4
//! seed = 7
//!
//! [integrator]
//! h = 1e-3
//! t_end = 20.0
//!
//! [controller]
//! kind = "ric-consensus"
//!
//! [graph]
//! kind = "ring"
//! ```
//!
//! Every table except `[controller]` is optional; unknown keys are rejected.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraVector;
use crate::analysis::generate_tc_configuration;
use crate::control::{
    AuxVar, CombinedGradient, ControlSetting, Controller, Helical, LicConsensus, Objective, OpenLoop, RicConsensus, SimGroup,
    TcLeftCascade, TcRightCascade, UnderactuatedLic, ZeroController,
};
use crate::error::SimError;
use crate::graph::{CommGraph, Edge};
use crate::groups::{Se2, Se3, So3};
use crate::lie::GroupKind;
use crate::sim::{simulate, IntegratorConfig, Metrics, Outcome, SwarmState, Trajectory};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Schema version; must equal [`SCHEMA_VERSION`].
    pub version: u32,
    pub group: GroupKind,
    pub agents: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub controller: ControllerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_setting: Option<SettingConfig>,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Zero,
    OpenLoop,
    RicConsensus,
    LicConsensus,
    TcRightCascade,
    TcLeftCascade,
    UnderactuatedLic,
    Se3SteeringLinear,
    Se3SteeringHelical,
    CombinedGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    /// `tc-right-cascade` only: fixed spatial reference `ξ^r` replacing the auxiliary state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_reference: Option<Vec<f64>>,
    /// Required to enable controllers without a convergence guarantee (`combined-gradient`).
    #[serde(default)]
    pub experimental: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingPreset {
    Full,
    Steering,
}

/// Either a preset or an explicit drift `a` with orthonormal columns of `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<SettingPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<Vec<f64>>>,
}

impl SettingConfig {
    pub fn build(&self, group: GroupKind) -> Result<ControlSetting, SimError> {
        match (&self.preset, &self.drift, &self.columns) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(SimError::config(
                "control_setting",
                "give either `preset` or `drift` and `columns`, not both",
            )),
            (Some(SettingPreset::Full), None, None) => Ok(ControlSetting::full(group.dim())),
            (Some(SettingPreset::Steering), None, None) => Ok(ControlSetting::steering(group)?),
            (None, Some(a), Some(cols)) => {
                let a = algebra_field("control_setting.drift", a, group)?;
                let cols = cols
                    .iter()
                    .map(|c| algebra_field("control_setting.columns", c, group))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ControlSetting::new(a, cols)?)
            }
            _ => Err(SimError::config(
                "control_setting",
                "needs `preset` (full, steering) or both `drift` and `columns`",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub start: f64,
    pub edges: Vec<[usize; 2]>,
}

/// Communication topology. Parameterless kinds are empty struct variants so that stray keys
/// are rejected like everywhere else.
/// Edge pairs `[j, k]` mean "j sends to k"; undirected kinds add
/// both directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphConfig {
    Complete {},
    Empty {},
    Ring {},
    Path {},
    Star {},
    DirectedChain {},
    Tree {
        edges: Vec<[usize; 2]>,
    },
    Undirected {
        edges: Vec<[usize; 2]>,
    },
    Directed {
        edges: Vec<[usize; 2]>,
    },
    /// Cycles through `sets`, each active for `dwell` seconds.
    Alternating {
        sets: Vec<Vec<[usize; 2]>>,
        dwell: f64,
    },
    Schedule {
        segments: Vec<SegmentConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
        #[serde(default)]
        undirected: bool,
    },
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig::Complete {}
    }
}

fn pairs(edges: &[[usize; 2]]) -> Vec<Edge> {
    edges.iter().map(|e| (e[0], e[1])).collect()
}

impl GraphConfig {
    pub fn build(&self, n: usize) -> Result<CommGraph, SimError> {
        Ok(match self {
            GraphConfig::Complete {} => CommGraph::complete(n),
            GraphConfig::Empty {} => CommGraph::empty(n),
            GraphConfig::Ring {} => CommGraph::ring(n),
            GraphConfig::Path {} => CommGraph::path(n),
            GraphConfig::Star {} => CommGraph::star(n),
            GraphConfig::DirectedChain {} => CommGraph::directed_chain(n),
            GraphConfig::Tree { edges } => CommGraph::tree(n, &pairs(edges))?,
            GraphConfig::Undirected { edges } => CommGraph::undirected(n, &pairs(edges))?,
            GraphConfig::Directed { edges } => CommGraph::directed(n, pairs(edges))?,
            GraphConfig::Alternating { sets, dwell } => {
                CommGraph::alternating(n, sets.iter().map(|s| pairs(s)).collect(), *dwell)?
            }
            GraphConfig::Schedule {
                segments,
                period,
                undirected,
            } => CommGraph::scheduled(
                n,
                segments.iter().map(|s| (s.start, pairs(&s.edges))).collect(),
                *period,
                *undirected,
            )?,
        })
    }
}

fn one() -> f64 {
    1.0
}

/// Initial conditions. Random draws use a ChaCha8 stream seeded from `seed`: positions first,
/// then auxiliary variables, agent by agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitConfig {
    /// Uniform rotations, positions uniform in `[-position_scale, position_scale]`,
    /// auxiliary variables Gaussian with deviation `aux_scale`.
    Random {
        #[serde(default = "one")]
        position_scale: f64,
        #[serde(default = "one")]
        aux_scale: f64,
    },
    /// Poses as group payloads; `aux` rows as flat auxiliary values (random when absent).
    Explicit {
        poses: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        aux: Option<Vec<Vec<f64>>>,
        #[serde(default = "one")]
        aux_scale: f64,
    },
    /// Totally coordinated placement for the common body velocity `xi` along `tree`
    /// (a path when absent). Algebra-valued auxiliary variables start at `xi`. Both positions
    /// and auxiliary variables then receive Gaussian noise of deviation `perturbation`.
    Tc {
        xi: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tree: Option<Vec<[usize; 2]>>,
        #[serde(default)]
        perturbation: f64,
        #[serde(default = "one")]
        position_scale: f64,
        #[serde(default = "one")]
        aux_scale: f64,
    },
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig::Random {
            position_scale: 1.0,
            aux_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; the command line and the environment take precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

fn algebra_field(field: &str, values: &[f64], group: GroupKind) -> Result<AlgebraVector, SimError> {
    if values.len() != group.dim() {
        return Err(SimError::config(
            field,
            format!("{group} velocities have {} entries, got {}", group.dim(), values.len()),
        ));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(SimError::config(field, "entries must be finite"));
    }
    Ok(AlgebraVector::from_slice(values))
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig = toml::from_str(s).map_err(|e| SimError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, SimError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Copy with the dotted `path` (e.g. `integrator.h`) set to `value`, which is read as a
    /// TOML value and otherwise taken as a bare string. The result is re-validated.
    pub fn with_override(&self, path: &str, value: &str) -> Result<Self, SimError> {
        let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        let mut root = toml::Table::try_from(self).expect("scenario serializes");
        let keys: Vec<&str> = path.split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return Err(SimError::config(path, "empty key in path"));
        }
        let mut table = &mut root;
        for key in &keys[..keys.len() - 1] {
            table = table
                .entry(key.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| SimError::config(path, format!("`{key}` is not a table")))?;
        }
        table.insert(keys[keys.len() - 1].to_string(), parsed);
        Self::from_toml_str(&toml::to_string(&root).expect("table serializes"))
    }

    /// Minimal scenario with defaults for everything but the group, size and controller.
    pub fn new(group: GroupKind, agents: usize, kind: ControllerKind) -> Self {
        ScenarioConfig {
            version: SCHEMA_VERSION,
            group,
            agents,
            seed: 0,
            integrator: IntegratorConfig::default(),
            controller: ControllerConfig {
                kind,
                frozen_reference: None,
                experimental: false,
            },
            control_setting: None,
            graph: GraphConfig::default(),
            init: InitConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Checks ranges and cross-field consistency without building anything.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.version != SCHEMA_VERSION {
            return Err(SimError::config(
                "version",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version),
            ));
        }
        if self.agents == 0 {
            return Err(SimError::config("agents", "must be at least 1"));
        }
        self.integrator.validate()?;
        let kind = self.controller.kind;
        if self.controller.frozen_reference.is_some() && kind != ControllerKind::TcRightCascade {
            return Err(SimError::config(
                "controller.frozen_reference",
                "only valid for kind = \"tc-right-cascade\"",
            ));
        }
        if let Some(x) = &self.controller.frozen_reference {
            algebra_field("controller.frozen_reference", x, self.group)?;
        }
        if kind == ControllerKind::CombinedGradient && !self.controller.experimental {
            return Err(SimError::config(
                "controller.experimental",
                "combined-gradient has no convergence guarantee; set experimental = true to run it",
            ));
        }
        let se3_only = matches!(kind, ControllerKind::Se3SteeringLinear | ControllerKind::Se3SteeringHelical);
        if se3_only && self.group != GroupKind::Se3 {
            return Err(SimError::config("controller.kind", format!("{kind:?} requires group = \"se3\"")));
        }
        match (kind, &self.control_setting) {
            (ControllerKind::UnderactuatedLic, None) => {
                return Err(SimError::config(
                    "control_setting",
                    "underactuated-lic needs a control setting",
                ))
            }
            (ControllerKind::TcLeftCascade | ControllerKind::UnderactuatedLic, Some(cs)) => {
                cs.build(self.group)?;
            }
            (_, Some(_)) => {
                return Err(SimError::config(
                    "control_setting",
                    "only used by tc-left-cascade and underactuated-lic",
                ))
            }
            _ => {}
        }
        if let InitConfig::Tc { xi, tree, .. } = &self.init {
            algebra_field("init.xi", xi, self.group)?;
            if let Some(t) = tree {
                if !crate::graph::is_spanning_tree(self.agents, &pairs(t)) {
                    return Err(SimError::config("init.tree", "edges must form a spanning tree"));
                }
            }
        }
        if let InitConfig::Explicit { poses, aux, .. } = &self.init {
            if poses.len() != self.agents {
                return Err(SimError::config(
                    "init.poses",
                    format!("expected {} poses, got {}", self.agents, poses.len()),
                ));
            }
            if let Some(a) = aux {
                if a.len() != self.agents {
                    return Err(SimError::config(
                        "init.aux",
                        format!("expected {} rows, got {}", self.agents, a.len()),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Builds the controller named in the scenario.
pub fn build_controller<G: SimGroup>(cfg: &ScenarioConfig) -> Result<Box<dyn Controller<G>>, SimError> {
    let setting = cfg.control_setting.as_ref().map(|s| s.build(cfg.group)).transpose()?;
    Ok(match cfg.controller.kind {
        ControllerKind::Zero => Box::new(ZeroController),
        ControllerKind::OpenLoop => Box::new(OpenLoop),
        ControllerKind::RicConsensus => Box::new(RicConsensus),
        ControllerKind::LicConsensus => Box::new(LicConsensus),
        ControllerKind::CombinedGradient => Box::new(CombinedGradient),
        ControllerKind::TcRightCascade => Box::new(TcRightCascade {
            frozen: cfg
                .controller
                .frozen_reference
                .as_ref()
                .map(|x| AlgebraVector::from_slice(x)),
        }),
        ControllerKind::TcLeftCascade => Box::new(TcLeftCascade { setting }),
        ControllerKind::UnderactuatedLic => Box::new(UnderactuatedLic {
            setting: setting.expect("validated"),
        }),
        ControllerKind::Se3SteeringLinear => G::steering_linear()?,
        ControllerKind::Se3SteeringHelical => G::steering_helical()?,
    })
}

/// Objective of the configured controller.
pub fn scenario_objective(cfg: &ScenarioConfig) -> Result<Objective, SimError> {
    Ok(match cfg.group {
        GroupKind::So3 => build_controller::<So3>(cfg)?.objective(),
        GroupKind::Se2 => build_controller::<Se2>(cfg)?.objective(),
        GroupKind::Se3 => build_controller::<Se3>(cfg)?.objective(),
    })
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> AlgebraVector {
    AlgebraVector::from_fn(dim, |_| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

/// Rebuilds an auxiliary variable from flat values, using the layout `controller` expects.
pub fn aux_from_values(controller: &str, values: &[f64]) -> AuxVar {
    use nalgebra::Vector3;
    match values.len() {
        0 => AuxVar::None,
        9 if controller == "se3-steering-helical" => AuxVar::Helical(Helical {
            alpha: Vector3::from_column_slice(&values[0..3]),
            beta: Vector3::from_column_slice(&values[3..6]),
            gamma: Vector3::from_column_slice(&values[6..9]),
        }),
        _ => AuxVar::Algebra(AlgebraVector::from_slice(values)),
    }
}

/// Draws or reads the initial swarm state.
pub fn initial_state<G: SimGroup>(cfg: &ScenarioConfig, ctrl: &dyn Controller<G>) -> Result<SwarmState<G>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.agents;
    let random_aux = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<AuxVar> { (0..n).map(|_| ctrl.initial_aux(rng, scale)).collect() };
    match &cfg.init {
        InitConfig::Random {
            position_scale,
            aux_scale,
        } => {
            let g = (0..n).map(|_| G::random(&mut rng, *position_scale)).collect();
            let aux = random_aux(&mut rng, *aux_scale);
            Ok(SwarmState::new(g, aux))
        }
        InitConfig::Explicit { poses, aux, aux_scale } => {
            let g = poses
                .iter()
                .enumerate()
                .map(|(k, p)| G::from_payload(p).map_err(|e| SimError::config(format!("init.poses[{k}]"), e.to_string())))
                .collect::<Result<Vec<G>, _>>()?;
            let aux = match aux {
                Some(rows) => rows.iter().map(|r| aux_from_values(ctrl.name(), r)).collect(),
                None => random_aux(&mut rng, *aux_scale),
            };
            Ok(SwarmState::new(g, aux))
        }
        InitConfig::Tc {
            xi,
            tree,
            perturbation,
            position_scale,
            aux_scale,
        } => {
            let xi = AlgebraVector::from_slice(xi);
            let tree: Vec<Edge> = match tree {
                Some(t) => pairs(t),
                None => (1..n).map(|k| (k - 1, k)).collect(),
            };
            let mut g = generate_tc_configuration::<G, _>(&xi, n, &tree, &mut rng, *position_scale)
                .map_err(|e| SimError::config("init", e.to_string()))?;
            let mut aux = random_aux(&mut rng, *aux_scale);
            for a in aux.iter_mut() {
                if let AuxVar::Algebra(x) = a {
                    if x.dim() == G::DIM && ctrl.name() != "se3-steering-linear" {
                        *a = AuxVar::Algebra(xi);
                    }
                }
            }
            if *perturbation > 0.0 {
                for gk in g.iter_mut() {
                    *gk = gk.compose(&G::exp(&gaussian(&mut rng, G::DIM, *perturbation)));
                }
                for a in aux.iter_mut() {
                    if let AuxVar::Algebra(x) = a {
                        *x += gaussian(&mut rng, x.dim(), *perturbation);
                    }
                }
            }
            Ok(SwarmState::new(g, aux))
        }
    }
}

/// Trajectory of any supported group.
#[derive(Debug, Clone)]
pub enum RunOutput {
    So3(Trajectory<So3>),
    Se2(Trajectory<Se2>),
    Se3(Trajectory<Se3>),
}

macro_rules! with_traj {
    ($self:expr, $t:ident => $body:expr) => {
        match $self {
            RunOutput::So3($t) => $body,
            RunOutput::Se2($t) => $body,
            RunOutput::Se3($t) => $body,
        }
    };
}

impl RunOutput {
    pub fn group(&self) -> GroupKind {
        match self {
            RunOutput::So3(_) => GroupKind::So3,
            RunOutput::Se2(_) => GroupKind::Se2,
            RunOutput::Se3(_) => GroupKind::Se3,
        }
    }

    pub fn outcome(&self) -> &Outcome {
        with_traj!(self, t => &t.outcome)
    }

    pub fn controller(&self) -> &str {
        with_traj!(self, t => &t.controller)
    }

    pub fn final_metrics(&self) -> &Metrics {
        with_traj!(self, t => t.final_metrics())
    }

    pub fn events(&self) -> &[crate::sim::Event] {
        with_traj!(self, t => &t.events)
    }

    pub fn samples(&self) -> usize {
        with_traj!(self, t => t.samples.len())
    }

    /// Coordination check dispatched on the group.
    pub fn check_coordination(
        &self,
        mode: crate::analysis::CoordinationMode,
        window: f64,
        tol: f64,
    ) -> Result<crate::analysis::CoordinationReport, crate::error::AnalysisError> {
        with_traj!(self, t => crate::analysis::check_coordination(t, mode, window, tol))
    }

    /// Duration covered by the recorded samples.
    pub fn span(&self) -> f64 {
        with_traj!(self, t => match (t.samples.first(), t.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        })
    }
}

fn run_group<G: SimGroup>(cfg: &ScenarioConfig) -> Result<Trajectory<G>, SimError> {
    let ctrl = build_controller::<G>(cfg)?;
    let graph = cfg.graph.build(cfg.agents)?;
    let state = initial_state(cfg, ctrl.as_ref())?;
    simulate(state, ctrl.as_ref(), &graph, &cfg.integrator)
}

/// Validates and runs a scenario. Deterministic given the configuration.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    Ok(match cfg.group {
        GroupKind::So3 => RunOutput::So3(run_group(cfg)?),
        GroupKind::Se2 => RunOutput::Se2(run_group(cfg)?),
        GroupKind::Se3 => RunOutput::Se3(run_group(cfg)?),
    })
}
