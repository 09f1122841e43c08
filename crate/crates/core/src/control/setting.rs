use crate::algebra::AlgebraVector;
use crate::error::ControlError;
use crate::lie::GroupKind;

/// Tolerance on `BᵀB = I`.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// Affine actuation `ξ^l = a + B u` with orthonormal columns `b_i` of `B`.
///
/// The feasible set `C = {a + Bu}` is affine, so the projection onto it is
/// `Π_C(η) = a + BBᵀ(η − a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSetting {
    drift: AlgebraVector,
    columns: Vec<AlgebraVector>,
}

impl ControlSetting {
    pub fn new(drift: AlgebraVector, columns: Vec<AlgebraVector>) -> Result<Self, ControlError> {
        let n = drift.dim();
        let m = columns.len();
        if m == 0 || m > n {
            return Err(ControlError::ActuationShape { n, m });
        }
        for c in &columns {
            if c.dim() != n {
                return Err(ControlError::Lie(crate::error::LieError::DimensionMismatch {
                    expected: n,
                    got: c.dim(),
                }));
            }
        }
        if !drift.is_finite() || columns.iter().any(|c| !c.is_finite()) {
            return Err(ControlError::Lie(crate::error::LieError::NonFinite("control setting")));
        }
        let mut worst: f64 = 0.0;
        for (i, bi) in columns.iter().enumerate() {
            for (j, bj) in columns.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((bi.dot(bj) - target).abs());
            }
        }
        if worst > ORTHONORMAL_TOL {
            return Err(ControlError::NotOrthonormal(worst));
        }
        Ok(ControlSetting { drift, columns })
    }

    /// `a = 0`, `B = I`.
    pub fn full(dim: usize) -> Self {
        ControlSetting {
            drift: AlgebraVector::zeros(dim),
            columns: (0..dim).map(|i| AlgebraVector::basis(dim, i)).collect(),
        }
    }

    /// Steering control: unit forward speed along the body `e₁` axis, angular velocity free.
    pub fn steering(kind: GroupKind) -> Result<Self, ControlError> {
        match kind {
            GroupKind::Se2 => Self::new(
                AlgebraVector::basis(3, 0),
                vec![AlgebraVector::basis(3, 2)],
            ),
            GroupKind::Se3 => Self::new(
                AlgebraVector::basis(6, 0),
                (3..6).map(|i| AlgebraVector::basis(6, i)).collect(),
            ),
            GroupKind::So3 => Err(ControlError::WrongGroup {
                controller: "steering",
                required: GroupKind::Se3,
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    /// Number of inputs `m`.
    pub fn inputs(&self) -> usize {
        self.columns.len()
    }

    pub fn drift(&self) -> &AlgebraVector {
        &self.drift
    }

    pub fn columns(&self) -> &[AlgebraVector] {
        &self.columns
    }

    pub fn is_fully_actuated(&self) -> bool {
        self.columns.len() == self.dim()
    }

    /// `a + B u`
    pub fn apply(&self, u: &[f64]) -> AlgebraVector {
        assert_eq!(u.len(), self.inputs(), "control input length");
        self.columns
            .iter()
            .zip(u)
            .fold(self.drift, |acc, (b, &ui)| acc.add_scaled(b, ui))
    }

    /// `Bᵀ v`
    pub fn input_coordinates(&self, v: &AlgebraVector) -> Vec<f64> {
        self.columns.iter().map(|b| b.dot(v)).collect()
    }

    /// `B Bᵀ v`
    pub fn project_range(&self, v: &AlgebraVector) -> AlgebraVector {
        self.columns
            .iter()
            .fold(AlgebraVector::zeros(self.dim()), |acc, b| acc.add_scaled(b, b.dot(v)))
    }

    /// `Π_C(η) = a + BBᵀ(η − a)`
    pub fn project(&self, eta: &AlgebraVector) -> AlgebraVector {
        self.drift + self.project_range(&(*eta - self.drift))
    }

    /// `‖η − Π_C(η)‖`
    pub fn distance(&self, eta: &AlgebraVector) -> f64 {
        (*eta - self.project(eta)).norm()
    }

    /// Inputs realizing `ξ = a + Bu`, if `ξ ∈ C`.
    pub fn inputs_of(&self, xi: &AlgebraVector) -> Vec<f64> {
        self.input_coordinates(&(*xi - self.drift))
    }
}
