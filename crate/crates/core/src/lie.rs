//! Group-agnostic Lie group interface.
//!
//! A [`LieGroup`] implementation carries every per-group formula (composition,
//! inverse, adjoint action, bracket, exponential). The generic functions here
//! build relative positions, the bracket pairing and matrix forms of `ad` and
//! `Ad` on top of those primitives.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix4};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraVector;
use crate::error::LieError;
use crate::groups::{Se2, Se3, So3};

/// Tolerance for manifold-constraint checks (`QᵀQ = I`, `det Q = 1`).
pub const MANIFOLD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    So3,
    Se2,
    Se3,
}

impl GroupKind {
    pub const ALL: [GroupKind; 3] = [GroupKind::So3, GroupKind::Se2, GroupKind::Se3];

    pub fn dim(self) -> usize {
        match self {
            GroupKind::So3 | GroupKind::Se2 => 3,
            GroupKind::Se3 => 6,
        }
    }

    /// Lower-case identifier used in scenario files and manifests.
    pub fn id(self) -> &'static str {
        match self {
            GroupKind::So3 => "so3",
            GroupKind::Se2 => "se2",
            GroupKind::Se3 => "se3",
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKind::So3 => "SO(3)",
            GroupKind::Se2 => "SE(2)",
            GroupKind::Se3 => "SE(3)",
        })
    }
}

impl FromStr for GroupKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "so3" | "so(3)" => Ok(GroupKind::So3),
            "se2" | "se(2)" => Ok(GroupKind::Se2),
            "se3" | "se(3)" => Ok(GroupKind::Se3),
            other => Err(format!(
                "unknown group `{other}` (valid: so3, se2, se3)"
            )),
        }
    }
}

/// A matrix Lie group with its algebra identified with `R^DIM`.
pub trait LieGroup: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    const KIND: GroupKind;
    const DIM: usize;

    fn identity() -> Self;
    fn compose(&self, other: &Self) -> Self;
    fn inverse(&self) -> Self;
    /// `Ad_g ξ`
    fn adjoint(&self, xi: &AlgebraVector) -> AlgebraVector;
    /// `[ξ, η]`
    fn bracket(xi: &AlgebraVector, eta: &AlgebraVector) -> AlgebraVector;
    fn exp(xi: &AlgebraVector) -> Self;

    /// Nearest element on the manifold (rotation blocks re-orthonormalized).
    fn reproject(&self) -> Result<Self, LieError>;
    /// Deviation of the payload from the manifold constraint.
    fn manifold_error(&self) -> f64;
    /// Homogeneous matrix embedding, padded to 4×4 with the identity.
    fn homogeneous(&self) -> Matrix4<f64>;

    /// Flat payload used by the trajectory files.
    fn payload(&self) -> Vec<f64>;
    fn from_payload(values: &[f64]) -> Result<Self, LieError>;
    fn payload_labels() -> &'static [&'static str];

    /// Random element: uniform rotation, position uniform in `[-position_scale, position_scale]`.
    fn random<R: Rng + ?Sized>(rng: &mut R, position_scale: f64) -> Self;

    /// `Ad_g⁻¹ ξ`; groups override this when a direct formula avoids the inverse.
    fn adjoint_inv(&self, xi: &AlgebraVector) -> AlgebraVector {
        self.inverse().adjoint(xi)
    }

    /// `⟨ξ, η⟩ = (ad_ξ)ᵀ η`, defined by `ζ·⟨ξ, η⟩ + [ζ, ξ]·η = 0` for all ζ.
    fn pairing(xi: &AlgebraVector, eta: &AlgebraVector) -> AlgebraVector {
        AlgebraVector::from_fn(Self::DIM, |i| {
            Self::bracket(xi, &AlgebraVector::basis(Self::DIM, i)).dot(eta)
        })
    }

    fn zero_algebra() -> AlgebraVector {
        AlgebraVector::zeros(Self::DIM)
    }

    fn payload_norm(&self) -> f64 {
        self.payload().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `λ_jk = g_k⁻¹ g_j`, invariant under common left translations.
pub fn left_relative<G: LieGroup>(g_k: &G, g_j: &G) -> G {
    g_k.inverse().compose(g_j)
}

/// `ρ_jk = g_j g_k⁻¹`, invariant under common right translations.
pub fn right_relative<G: LieGroup>(g_k: &G, g_j: &G) -> G {
    g_j.compose(&g_k.inverse())
}

/// Matrix of `η ↦ [ξ, η]` in algebra coordinates.
pub fn ad_matrix<G: LieGroup>(xi: &AlgebraVector) -> DMatrix<f64> {
    DMatrix::from_fn(G::DIM, G::DIM, |r, c| {
        G::bracket(xi, &AlgebraVector::basis(G::DIM, c))[r]
    })
}

/// Matrix of `ξ ↦ Ad_g ξ` in algebra coordinates.
pub fn adjoint_matrix<G: LieGroup>(g: &G) -> DMatrix<f64> {
    DMatrix::from_fn(G::DIM, G::DIM, |r, c| {
        g.adjoint(&AlgebraVector::basis(G::DIM, c))[r]
    })
}

/// Frobenius distance between homogeneous embeddings.
pub fn embedding_distance<G: LieGroup>(a: &G, b: &G) -> f64 {
    (a.homogeneous() - b.homogeneous()).norm()
}

/// Checks that a velocity has the group's algebra dimension and finite entries.
pub fn check_algebra<G: LieGroup>(xi: &AlgebraVector) -> Result<(), LieError> {
    if xi.dim() != G::DIM {
        return Err(LieError::DimensionMismatch {
            expected: G::DIM,
            got: xi.dim(),
        });
    }
    if !xi.is_finite() {
        return Err(LieError::NonFinite("algebra vector"));
    }
    Ok(())
}

/// A group element tagged with its group, for callers that choose the group at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    So3(So3),
    Se2(Se2),
    Se3(Se3),
}

impl GroupElement {
    pub fn kind(&self) -> GroupKind {
        match self {
            GroupElement::So3(_) => GroupKind::So3,
            GroupElement::Se2(_) => GroupKind::Se2,
            GroupElement::Se3(_) => GroupKind::Se3,
        }
    }

    pub fn identity(kind: GroupKind) -> Self {
        match kind {
            GroupKind::So3 => GroupElement::So3(So3::identity()),
            GroupKind::Se2 => GroupElement::Se2(Se2::identity()),
            GroupKind::Se3 => GroupElement::Se3(Se3::identity()),
        }
    }

    pub fn exp(kind: GroupKind, xi: &AlgebraVector) -> Result<Self, LieError> {
        Ok(match kind {
            GroupKind::So3 => {
                check_algebra::<So3>(xi)?;
                GroupElement::So3(So3::exp(xi))
            }
            GroupKind::Se2 => {
                check_algebra::<Se2>(xi)?;
                GroupElement::Se2(Se2::exp(xi))
            }
            GroupKind::Se3 => {
                check_algebra::<Se3>(xi)?;
                GroupElement::Se3(Se3::exp(xi))
            }
        })
    }

    pub fn compose(&self, other: &Self) -> Result<Self, LieError> {
        match (self, other) {
            (GroupElement::So3(a), GroupElement::So3(b)) => Ok(GroupElement::So3(a.compose(b))),
            (GroupElement::Se2(a), GroupElement::Se2(b)) => Ok(GroupElement::Se2(a.compose(b))),
            (GroupElement::Se3(a), GroupElement::Se3(b)) => Ok(GroupElement::Se3(a.compose(b))),
            (a, b) => Err(LieError::GroupMismatch {
                left: a.kind(),
                right: b.kind(),
            }),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            GroupElement::So3(g) => GroupElement::So3(g.inverse()),
            GroupElement::Se2(g) => GroupElement::Se2(g.inverse()),
            GroupElement::Se3(g) => GroupElement::Se3(g.inverse()),
        }
    }

    pub fn left_relative(&self, g_j: &Self) -> Result<Self, LieError> {
        self.inverse().compose(g_j)
    }

    pub fn right_relative(&self, g_j: &Self) -> Result<Self, LieError> {
        g_j.compose(&self.inverse())
    }

    pub fn adjoint(&self, xi: &AlgebraVector) -> Result<AlgebraVector, LieError> {
        match self {
            GroupElement::So3(g) => check_algebra::<So3>(xi).map(|_| g.adjoint(xi)),
            GroupElement::Se2(g) => check_algebra::<Se2>(xi).map(|_| g.adjoint(xi)),
            GroupElement::Se3(g) => check_algebra::<Se3>(xi).map(|_| g.adjoint(xi)),
        }
    }

}
