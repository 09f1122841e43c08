//! Control settings, control laws and their assumption checkers.

pub mod assumptions;
pub mod controllers;
pub mod rhs;
pub mod setting;

pub use assumptions::{check_theorem3_assumption, compatibility_check, CompatibilityMode, PairCompatibility, SignCondition};
pub use controllers::{
    AuxFrame, AuxVar, CombinedGradient, ControlOutput, Controller, LicConsensus, Objective, OpenLoop, RicConsensus,
    Se3SteeringHelical, Se3SteeringLinear, SimGroup, TcLeftCascade, TcRightCascade, UnderactuatedLic, ZeroController,
};
pub use rhs::Helical;
pub use setting::ControlSetting;
