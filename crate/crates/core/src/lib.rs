//! Coordinated motion of multi-agent swarms on matrix Lie groups.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod analysis;
pub mod control;
pub mod error;
pub mod graph;
pub mod groups;
pub mod lie;
pub mod sim;

pub use algebra::AlgebraVector;
pub use graph::CommGraph;
pub use lie::{GroupKind, LieGroup};
