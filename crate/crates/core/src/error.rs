use thiserror::Error;

use crate::lie::GroupKind;

/// Errors raised by group-level operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("group mismatch: {left} vs {right}")]
    GroupMismatch { left: GroupKind, right: GroupKind },
    #[error("algebra dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not skew-symmetric (asymmetry {0:e})")]
    NotSkew(f64),
    #[error("rotation block is rank deficient (singular values {0:?})")]
    Degenerate([f64; 3]),
    #[error("matrix is {0:e} away from the rotation group")]
    OffManifold(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("expected {expected} payload values for {group}, got {got}")]
    Payload {
        group: GroupKind,
        expected: usize,
        got: usize,
    },
}

/// Errors raised while building or querying a communication graph.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("agent {agent} out of range for a graph of {n} agents")]
    AgentOutOfRange { agent: usize, n: usize },
    #[error("self-loop on agent {0}")]
    SelfLoop(usize),
    #[error("schedule breakpoints must start at 0 and be strictly increasing")]
    Breakpoints,
    #[error("undirected graph has asymmetric edge ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("invalid durations: need 0 < delta <= window <= horizon (got delta={delta}, window={window}, horizon={horizon})")]
    Durations { delta: f64, window: f64, horizon: f64 },
    #[error("operation requires a static undirected graph")]
    NotStaticUndirected,
    #[error("edge list does not span all {0} agents as a tree")]
    NotSpanningTree(usize),
}

/// Errors raised by controllers and control settings.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("actuation columns are not orthonormal (max |B^T B - I| = {0:e})")]
    NotOrthonormal(f64),
    #[error("control setting needs between 1 and {n} actuation columns, got {m}")]
    ActuationShape { n: usize, m: usize },
    #[error("agent {agent}: initial auxiliary variable is not in the feasible set (distance {distance:e})")]
    InfeasibleInitial { agent: usize, distance: f64 },
    #[error("controller {controller} expects {expected} auxiliary variables per swarm, got {got}")]
    AuxShape {
        controller: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("controller {controller} requires group {required}")]
    WrongGroup {
        controller: &'static str,
        required: GroupKind,
    },
    #[error("expected {expected} agents, got {got}")]
    AgentCount { expected: usize, got: usize },
    #[error("controller {0} requires a fully actuated setting")]
    NeedsFullActuation(&'static str),
}

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("agent {agent}: non-finite velocity at t={t}")]
    NonFiniteVelocity { agent: usize, t: f64 },
    #[error("numeric blow-up at t={t}: norm {norm:e} exceeds limit")]
    BlowUp { t: f64, norm: f64 },
    #[error("invalid scenario: field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl SimError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Errors raised by trajectory analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("window of {window}s needs at least 3 samples, trajectory provides {samples}")]
    WindowTooShort { window: f64, samples: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("{0}")]
    Unsupported(&'static str),
}
