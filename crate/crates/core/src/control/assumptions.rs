//! Checkers for the design assumptions: the underactuated sign condition and
//! position/velocity compatibility.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::AlgebraVector;
use crate::control::rhs::assumption_margin;
use crate::control::setting::ControlSetting;
use crate::lie::{left_relative, LieGroup};

/// Relative tolerance for classifying the sign condition as an equality.
pub const SIGN_TOL: f64 = 1e-9;

/// Outcome of sampling `(η − Π_C(η))·[η, Π_C(η)]` over `O_C`.
#[derive(Debug, Clone, PartialEq)]
pub enum SignCondition {
    /// Zero on every sample.
    Equality,
    /// Non-positive on every sample, strictly negative on some.
    Holds,
    /// Positive somewhere; `witness` is a sampled `η` and `value` the condition there.
    Violated { witness: AlgebraVector, value: f64 },
}

/// Monte-Carlo classification over `O_C = {Ad_g ξ : ξ ∈ C, g ∈ G}`.
///
/// Inputs `u` are Gaussian with standard deviation `input_scale`; group elements come from
/// [`LieGroup::random`] with positions in `[-position_scale, position_scale]`.
pub fn check_theorem3_assumption<G: LieGroup, R: Rng + ?Sized>(
    setting: &ControlSetting,
    rng: &mut R,
    samples: usize,
    input_scale: f64,
    position_scale: f64,
) -> SignCondition {
    assert_eq!(setting.dim(), G::DIM, "control setting dimension");
    let mut any_negative = false;
    let mut worst: Option<(AlgebraVector, f64)> = None;
    for _ in 0..samples {
        let u: Vec<f64> = (0..setting.inputs())
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                input_scale * z
            })
            .collect();
        let g = G::random(rng, position_scale);
        let eta = g.adjoint(&setting.apply(&u));
        let value = assumption_margin::<G>(&eta, setting);
        let scale = eta.norm().powi(3).max(1.0);
        if value > SIGN_TOL * scale {
            if worst.as_ref().is_none_or(|(_, v)| value > *v) {
                worst = Some((eta, value));
            }
        } else if value < -SIGN_TOL * scale {
            any_negative = true;
        }
    }
    match worst {
        Some((witness, value)) => SignCondition::Violated { witness, value },
        None if any_negative => SignCondition::Holds,
        None => SignCondition::Equality,
    }
}

/// Which compatibility condition to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompatibilityMode {
    /// Some `u_j, u_k` with `Ad_{λ_jk}(a + Bu_j) = a + Bu_k`.
    Lic,
    /// One common `u` with `Ad_{λ_jk}(a + Bu) = a + Bu`.
    Tc,
}

/// Verdict for one ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCompatibility {
    pub j: usize,
    pub k: usize,
    pub compatible: bool,
    /// Least-squares residual of the linear system.
    pub residual: f64,
    /// Minimizing inputs: `[u_j, u_k]` in LIC mode, `[u]` in TC mode.
    pub inputs: Vec<Vec<f64>>,
}

/// Solves the compatibility conditions by least squares for every pair `j < k`.
pub fn compatibility_check<G: LieGroup>(
    g: &[G],
    setting: &ControlSetting,
    mode: CompatibilityMode,
    tol: f64,
) -> Vec<PairCompatibility> {
    assert_eq!(setting.dim(), G::DIM, "control setting dimension");
    let n = G::DIM;
    let m = setting.inputs();
    let mut out = Vec::new();
    for k in 0..g.len() {
        for j in (k + 1)..g.len() {
            let lambda = left_relative(&g[k], &g[j]);
            let a = *setting.drift();
            let rhs_vec = a - lambda.adjoint(&a);
            let ad_b: Vec<AlgebraVector> = setting.columns().iter().map(|b| lambda.adjoint(b)).collect();
            let cols = match mode {
                CompatibilityMode::Lic => 2 * m,
                CompatibilityMode::Tc => m,
            };
            let mat = DMatrix::from_fn(n, cols, |r, c| match mode {
                CompatibilityMode::Lic if c < m => ad_b[c][r],
                CompatibilityMode::Lic => -setting.columns()[c - m][r],
                CompatibilityMode::Tc => ad_b[c][r] - setting.columns()[c][r],
            });
            let b = DVector::from_column_slice(rhs_vec.as_slice());
            let (x, residual) = least_squares(&mat, &b);
            let inputs = match mode {
                CompatibilityMode::Lic => vec![x[..m].to_vec(), x[m..].to_vec()],
                CompatibilityMode::Tc => vec![x.to_vec()],
            };
            out.push(PairCompatibility {
                j,
                k,
                compatible: residual < tol,
                residual,
                inputs,
            });
        }
    }
    out
}

/// Minimum-norm least-squares solution and residual norm.
fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (Vec<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let largest = svd.singular_values.max();
    let eps = if largest > 0.0 { 1e-12 * largest } else { 0.0 };
    let x = match svd.solve(b, eps) {
        Ok(x) => x,
        Err(_) => DVector::zeros(a.ncols()),
    };
    let residual = (a * &x - b).norm();
    (x.iter().copied().collect(), residual)
}
