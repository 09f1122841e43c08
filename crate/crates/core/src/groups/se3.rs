use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::Rng;

use crate::algebra::AlgebraVector;
use crate::error::LieError;
use crate::groups::so3::{hat, nearest_rotation, random_rotation, rodrigues, rotation_manifold_error, SMALL_ANGLE};
use crate::lie::{GroupKind, LieGroup};

/// Rigid motion `g = (r, Q)` in space. Algebra coordinates are `(v, ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Se3 {
    r: Vector3<f64>,
    q: Matrix3<f64>,
}

impl Se3 {
    pub fn new(r: Vector3<f64>, q: Matrix3<f64>) -> Self {
        Se3 { r, q }
    }

    pub fn position(&self) -> &Vector3<f64> {
        &self.r
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.q
    }

    /// `g · p = Q p + r`
    pub fn act_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.q * p + self.r
    }
}

impl LieGroup for Se3 {
    const KIND: GroupKind = GroupKind::Se3;
    const DIM: usize = 6;

    fn identity() -> Self {
        Se3 {
            r: Vector3::zeros(),
            q: Matrix3::identity(),
        }
    }

    fn compose(&self, other: &Self) -> Self {
        Se3 {
            r: self.r + self.q * other.r,
            q: self.q * other.q,
        }
    }

    fn inverse(&self) -> Self {
        let qt = self.q.transpose();
        Se3 {
            r: -(qt * self.r),
            q: qt,
        }
    }

    fn adjoint(&self, xi: &AlgebraVector) -> AlgebraVector {
        let qw = self.q * xi.tail3();
        let v = self.q * xi.head3() + self.r.cross(&qw);
        AlgebraVector::from_parts(&v, &qw)
    }

    fn adjoint_inv(&self, xi: &AlgebraVector) -> AlgebraVector {
        let qt = self.q.transpose();
        let w = xi.tail3();
        let v = qt * (xi.head3() - self.r.cross(&w));
        AlgebraVector::from_parts(&v, &(qt * w))
    }

    fn bracket(xi: &AlgebraVector, eta: &AlgebraVector) -> AlgebraVector {
        let (v1, w1) = (xi.head3(), xi.tail3());
        let (v2, w2) = (eta.head3(), eta.tail3());
        AlgebraVector::from_parts(&(w1.cross(&v2) - w2.cross(&v1)), &w1.cross(&w2))
    }

    fn exp(xi: &AlgebraVector) -> Self {
        let (v, w) = (xi.head3(), xi.tail3());
        let theta2 = w.norm_squared();
        let theta = theta2.sqrt();
        let (b, c) = if theta < SMALL_ANGLE {
            (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
        } else {
            (
                (1.0 - theta.cos()) / theta2,
                (theta - theta.sin()) / (theta2 * theta),
            )
        };
        let k = hat(&w);
        let jac = Matrix3::identity() + k * b + k * k * c;
        Se3 {
            r: jac * v,
            q: rodrigues(&w),
        }
    }

    fn reproject(&self) -> Result<Self, LieError> {
        if !self.r.iter().all(|x| x.is_finite()) {
            return Err(LieError::NonFinite("SE(3) position"));
        }
        Ok(Se3 {
            r: self.r,
            q: nearest_rotation(&self.q)?,
        })
    }

    fn manifold_error(&self) -> f64 {
        if !self.r.iter().all(|x| x.is_finite()) {
            return f64::INFINITY;
        }
        rotation_manifold_error(&self.q)
    }

    fn homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.q);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.r);
        m
    }

    fn payload(&self) -> Vec<f64> {
        let mut out = vec![self.r.x, self.r.y, self.r.z];
        out.extend(self.q.transpose().iter().copied());
        out
    }

    fn from_payload(values: &[f64]) -> Result<Self, LieError> {
        if values.len() != 12 {
            return Err(LieError::Payload {
                group: GroupKind::Se3,
                expected: 12,
                got: values.len(),
            });
        }
        if !values.iter().all(|x| x.is_finite()) {
            return Err(LieError::NonFinite("SE(3) payload"));
        }
        Ok(Se3 {
            r: Vector3::new(values[0], values[1], values[2]),
            q: Matrix3::from_row_slice(&values[3..]),
        })
    }

    fn payload_labels() -> &'static [&'static str] {
        &[
            "x", "y", "z", "q00", "q01", "q02", "q10", "q11", "q12", "q20", "q21", "q22",
        ]
    }

    fn random<R: Rng + ?Sized>(rng: &mut R, position_scale: f64) -> Self {
        let s = position_scale.abs();
        let r = Vector3::from_fn(|_, _| rng.random_range(-s..=s));
        Se3 {
            r,
            q: random_rotation(rng),
        }
    }
}
