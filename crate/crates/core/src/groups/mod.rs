//! Concrete groups: SO(3), SE(2) and SE(3), plus the shared rotation helpers.

mod se2;
mod se3;
mod so3;

pub use se2::{planar_rotation, wrap_angle, Se2};
pub use se3::Se3;
pub use so3::{hat, nearest_rotation, random_rotation, rotation_about, vee, So3};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::AlgebraVector;
use crate::lie::LieGroup;

/// Tolerance used by [`is_unitary_adjoint`].
pub const UNITARY_TOL: f64 = 1e-9;

/// Monte-Carlo check of `‖Ad_g ξ‖ = ‖ξ‖` over `samples` random pairs.
///
/// Groups passing this test admit a bi-invariant metric, which the
/// left-cascade total-coordination design relies on.
pub fn is_unitary_adjoint<G: LieGroup, R: Rng + ?Sized>(rng: &mut R, samples: usize) -> bool {
    (0..samples).all(|_| {
        let g = G::random(rng, 2.0);
        let xi = random_algebra::<G, _>(rng, 1.0);
        (g.adjoint(&xi).norm() - xi.norm()).abs() <= UNITARY_TOL * xi.norm().max(1.0)
    })
}

/// Algebra vector with i.i.d. Gaussian coordinates of standard deviation `scale`.
pub fn random_algebra<G: LieGroup, R: Rng + ?Sized>(rng: &mut R, scale: f64) -> AlgebraVector {
    AlgebraVector::from_fn(G::DIM, |_| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_adjoint_classification() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert!(is_unitary_adjoint::<So3, _>(&mut rng, 500));
        assert!(!is_unitary_adjoint::<Se2, _>(&mut rng, 500));
        assert!(!is_unitary_adjoint::<Se3, _>(&mut rng, 500));
    }

    #[test]
    fn se2_norm_change_witness() {
        // r = (1, 0), ω = 1: Ad adds -ω J r = (0, -1) to v.
        let g = Se2::new(nalgebra::Vector2::new(1.0, 0.0), 0.0);
        let xi = AlgebraVector::from_slice(&[0.0, 0.0, 1.0]);
        assert!((g.adjoint(&xi).norm() - 2f64.sqrt()).abs() < 1e-15);
    }
}
