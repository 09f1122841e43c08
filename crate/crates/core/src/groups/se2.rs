use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector2};
use rand::Rng;

use crate::algebra::AlgebraVector;
use crate::error::LieError;
use crate::groups::so3::SMALL_ANGLE;
use crate::lie::{GroupKind, LieGroup};

/// Planar rigid motion `g = (r, θ)`, with θ kept in `(-π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Se2 {
    r: Vector2<f64>,
    theta: f64,
}

/// Wraps an angle to `(-π, π]`; `π` and `-π` both map to `π`.
pub fn wrap_angle(theta: f64) -> f64 {
    // already canonical values pass through untouched so payloads round-trip bit for bit
    if theta > -PI && theta <= PI {
        return theta;
    }
    let w = theta.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// `Q_θ`
pub fn planar_rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// `Q_{π/2} v`
#[inline]
fn perp(v: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

impl Se2 {
    pub fn new(r: Vector2<f64>, theta: f64) -> Self {
        Se2 {
            r,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> &Vector2<f64> {
        &self.r
    }

    pub fn angle(&self) -> f64 {
        self.theta
    }

    pub fn rotation(&self) -> Matrix2<f64> {
        planar_rotation(self.theta)
    }
}

impl LieGroup for Se2 {
    const KIND: GroupKind = GroupKind::Se2;
    const DIM: usize = 3;

    fn identity() -> Self {
        Se2 {
            r: Vector2::zeros(),
            theta: 0.0,
        }
    }

    fn compose(&self, other: &Self) -> Self {
        Se2::new(self.r + self.rotation() * other.r, self.theta + other.theta)
    }

    fn inverse(&self) -> Self {
        Se2::new(-(planar_rotation(-self.theta) * self.r), -self.theta)
    }

    fn adjoint(&self, xi: &AlgebraVector) -> AlgebraVector {
        let v = Vector2::new(xi[0], xi[1]);
        let w = xi[2];
        let out = self.rotation() * v - perp(&self.r) * w;
        AlgebraVector::from_slice(&[out.x, out.y, w])
    }

    fn adjoint_inv(&self, xi: &AlgebraVector) -> AlgebraVector {
        let v = Vector2::new(xi[0], xi[1]);
        let w = xi[2];
        let out = planar_rotation(-self.theta) * (v + perp(&self.r) * w);
        AlgebraVector::from_slice(&[out.x, out.y, w])
    }

    fn bracket(xi: &AlgebraVector, eta: &AlgebraVector) -> AlgebraVector {
        let v1 = Vector2::new(xi[0], xi[1]);
        let v2 = Vector2::new(eta[0], eta[1]);
        let out = perp(&v2) * xi[2] - perp(&v1) * eta[2];
        AlgebraVector::from_slice(&[out.x, out.y, 0.0])
    }

    fn exp(xi: &AlgebraVector) -> Self {
        let v = Vector2::new(xi[0], xi[1]);
        let w = xi[2];
        let (s, c) = if w.abs() < SMALL_ANGLE {
            let w2 = w * w;
            (1.0 - w2 / 6.0, w / 2.0 - w * w2 / 24.0)
        } else {
            (w.sin() / w, (1.0 - w.cos()) / w)
        };
        let jac = Matrix2::new(s, -c, c, s);
        Se2::new(jac * v, w)
    }

    fn reproject(&self) -> Result<Self, LieError> {
        if !(self.r.iter().all(|x| x.is_finite()) && self.theta.is_finite()) {
            return Err(LieError::NonFinite("SE(2) element"));
        }
        Ok(Se2::new(self.r, self.theta))
    }

    fn manifold_error(&self) -> f64 {
        if self.theta.is_finite() && self.r.iter().all(|x| x.is_finite()) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn homogeneous(&self) -> Matrix4<f64> {
        // planar embedding: rotation about z, translation in the xy-plane
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.rotation());
        m[(0, 3)] = self.r.x;
        m[(1, 3)] = self.r.y;
        m
    }

    fn payload(&self) -> Vec<f64> {
        vec![self.r.x, self.r.y, self.theta]
    }

    fn from_payload(values: &[f64]) -> Result<Self, LieError> {
        if values.len() != 3 {
            return Err(LieError::Payload {
                group: GroupKind::Se2,
                expected: 3,
                got: values.len(),
            });
        }
        if !values.iter().all(|x| x.is_finite()) {
            return Err(LieError::NonFinite("SE(2) payload"));
        }
        Ok(Se2::new(Vector2::new(values[0], values[1]), values[2]))
    }

    fn payload_labels() -> &'static [&'static str] {
        &["x", "y", "theta"]
    }

    fn random<R: Rng + ?Sized>(rng: &mut R, position_scale: f64) -> Self {
        let s = position_scale.abs();
        let r = Vector2::new(rng.random_range(-s..=s), rng.random_range(-s..=s));
        Se2::new(r, rng.random_range(-PI..=PI))
    }
}
