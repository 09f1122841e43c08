use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::AlgebraVector;
use crate::error::LieError;
use crate::lie::{GroupKind, LieGroup, MANIFOLD_TOL};

/// Below this rotation angle the Rodrigues coefficients switch to their Taylor series.
pub(crate) const SMALL_ANGLE: f64 = 1e-6;

/// Rotation matrix `Q` with `QᵀQ = I`, `det Q = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct So3 {
    q: Matrix3<f64>,
}

impl So3 {
    /// Wraps a matrix without checking the manifold constraint.
    pub fn from_matrix_unchecked(q: Matrix3<f64>) -> Self {
        So3 { q }
    }

    /// Wraps a matrix, re-orthonormalizing it when it is within `1e-3` of SO(3).
    pub fn from_matrix(q: Matrix3<f64>) -> Result<Self, LieError> {
        let g = So3 { q };
        let err = g.manifold_error();
        if err <= MANIFOLD_TOL {
            return Ok(g);
        }
        if err > 1e-3 {
            return Err(LieError::OffManifold(err));
        }
        g.reproject()
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.q
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.q * v
    }
}

/// `[ω]^`: the skew matrix with `hat(ω) x = ω × x`.
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`hat`]; rejects matrices that are not skew within the manifold tolerance.
pub fn vee(s: &Matrix3<f64>) -> Result<Vector3<f64>, LieError> {
    let asym = (s + s.transpose()).norm();
    if asym > MANIFOLD_TOL {
        return Err(LieError::NotSkew(asym));
    }
    Ok(Vector3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)]))
}

/// Rodrigues formula `I + (sin θ/θ) Ω + ((1 − cos θ)/θ²) Ω²`.
pub(crate) fn rodrigues(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = hat(w);
    Matrix3::identity() + k * a + k * k * b
}

/// Rotation by `angle` about the (normalized) `axis`.
pub fn rotation_about(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    rodrigues(&(axis.normalize() * angle))
}

/// Nearest rotation in Frobenius norm (polar factor with `det = +1`).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Result<Matrix3<f64>, LieError> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(LieError::NonFinite("rotation block"));
    }
    let svd = m.svd(true, true);
    let sv = svd.singular_values;
    let largest = sv.max();
    if largest == 0.0 || sv.min() <= 1e-12 * largest {
        return Err(LieError::Degenerate([sv[0], sv[1], sv[2]]));
    }
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        // flip the direction of the smallest singular value
        let (idx, _) = sv.argmin();
        let mut d = Matrix3::identity();
        d[(idx, idx)] = -1.0;
        r = u * d * v_t;
    }
    Ok(r)
}

/// Haar-uniform rotation from the QR factorization of a Gaussian matrix.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let a = Matrix3::from_fn(|_, _| StandardNormal.sample(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..3 {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

pub(crate) fn rotation_manifold_error(q: &Matrix3<f64>) -> f64 {
    let ortho = (q.transpose() * q - Matrix3::identity()).norm();
    ortho.max((q.determinant() - 1.0).abs())
}

impl LieGroup for So3 {
    const KIND: GroupKind = GroupKind::So3;
    const DIM: usize = 3;

    fn identity() -> Self {
        So3 {
            q: Matrix3::identity(),
        }
    }

    fn compose(&self, other: &Self) -> Self {
        So3 { q: self.q * other.q }
    }

    fn inverse(&self) -> Self {
        So3 {
            q: self.q.transpose(),
        }
    }

    fn adjoint(&self, xi: &AlgebraVector) -> AlgebraVector {
        AlgebraVector::from_vector3(&(self.q * xi.head3()))
    }

    fn adjoint_inv(&self, xi: &AlgebraVector) -> AlgebraVector {
        AlgebraVector::from_vector3(&(self.q.transpose() * xi.head3()))
    }

    fn bracket(xi: &AlgebraVector, eta: &AlgebraVector) -> AlgebraVector {
        AlgebraVector::from_vector3(&xi.head3().cross(&eta.head3()))
    }

    fn pairing(xi: &AlgebraVector, eta: &AlgebraVector) -> AlgebraVector {
        // transpose of a skew matrix: ⟨ω, η⟩ = -ω × η
        AlgebraVector::from_vector3(&-xi.head3().cross(&eta.head3()))
    }

    fn exp(xi: &AlgebraVector) -> Self {
        So3 {
            q: rodrigues(&xi.head3()),
        }
    }

    fn reproject(&self) -> Result<Self, LieError> {
        nearest_rotation(&self.q).map(|q| So3 { q })
    }

    fn manifold_error(&self) -> f64 {
        rotation_manifold_error(&self.q)
    }

    fn homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.q);
        m
    }

    fn payload(&self) -> Vec<f64> {
        // row-major
        self.q.transpose().iter().copied().collect()
    }

    fn from_payload(values: &[f64]) -> Result<Self, LieError> {
        if values.len() != 9 {
            return Err(LieError::Payload {
                group: GroupKind::So3,
                expected: 9,
                got: values.len(),
            });
        }
        if !values.iter().all(|x| x.is_finite()) {
            return Err(LieError::NonFinite("SO(3) payload"));
        }
        Ok(So3 {
            q: Matrix3::from_row_slice(values),
        })
    }

    fn payload_labels() -> &'static [&'static str] {
        &["q00", "q01", "q02", "q10", "q11", "q12", "q20", "q21", "q22"]
    }

    fn random<R: Rng + ?Sized>(rng: &mut R, _position_scale: f64) -> Self {
        So3 {
            q: random_rotation(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn hat_vee() {
        assert_eq!(hat(&Vector3::zeros()), Matrix3::zeros());
        assert_relative_eq!(hat(&Vector3::z()) * Vector3::x(), Vector3::y());
        let w = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(&hat(&w)).unwrap(), w);
        let x = Vector3::new(-0.3, 0.7, 2.0);
        assert_relative_eq!(hat(&w) * x, w.cross(&x), epsilon = 1e-15);
    }

    #[test]
    fn vee_rejects_non_skew() {
        assert!(matches!(vee(&Matrix3::identity()), Err(LieError::NotSkew(_))));
    }

    #[test]
    fn exp_quarter_turn() {
        let g = So3::exp(&AlgebraVector::from_slice(&[0.0, 0.0, FRAC_PI_2]));
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(*g.matrix(), expected, epsilon = 1e-15);
    }

    #[test]
    fn small_angle_branch_is_continuous() {
        let w = Vector3::new(3e-7, -2e-7, 1e-7);
        let below = rodrigues(&w);
        let above = rodrigues(&(w * 10.0));
        // compare both branches against the series to second order
        let series = |w: &Vector3<f64>| Matrix3::identity() + hat(w) + hat(w) * hat(w) * 0.5;
        assert_relative_eq!(below, series(&w), epsilon = 1e-18);
        assert_relative_eq!(above, series(&(w * 10.0)), epsilon = 1e-15);
    }

    #[test]
    fn adjoint_quarter_turn() {
        let g = So3::from_matrix_unchecked(rotation_about(&Vector3::z(), FRAC_PI_2));
        let out = g.adjoint(&AlgebraVector::basis(3, 0));
        assert_relative_eq!(out.head3(), Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn right_relative_against_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = So3::random(&mut rng, 0.0);
        let rho = crate::lie::right_relative(&q, &So3::identity());
        assert_relative_eq!(*rho.matrix(), q.matrix().transpose(), epsilon = 1e-15);
    }

    #[test]
    fn reprojection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_rotation(&mut rng);
        let exact = So3::from_matrix_unchecked(q);
        assert_relative_eq!(*exact.reproject().unwrap().matrix(), q, epsilon = 1e-14);

        let noise = Matrix3::from_fn(|i, j| ((i * 3 + j) as f64 - 4.0) * 1e-6);
        let perturbed = So3::from_matrix_unchecked(q + noise);
        let once = perturbed.reproject().unwrap();
        assert!(once.manifold_error() < 1e-12);
        let twice = once.reproject().unwrap();
        assert_relative_eq!(*once.matrix(), *twice.matrix(), epsilon = 1e-14);

        // polar-decomposition oracle: R = M (MᵀM)^(-1/2) via the eigen-decomposition of MᵀM
        let m = q + noise;
        let sym = (m.transpose() * m).symmetric_eigen();
        let inv_sqrt = sym.eigenvectors
            * Matrix3::from_diagonal(&sym.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * sym.eigenvectors.transpose();
        assert_relative_eq!(*once.matrix(), m * inv_sqrt, epsilon = 1e-12);
    }

    #[test]
    fn reprojection_rejects_rank_deficient() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            So3::from_matrix_unchecked(m).reproject(),
            Err(LieError::Degenerate(_))
        ));
    }

    #[test]
    fn random_rotation_is_proper() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let q = random_rotation(&mut rng);
            assert!(rotation_manifold_error(&q) < 1e-13);
        }
    }
}
