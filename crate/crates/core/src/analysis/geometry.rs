//! Isotropy sets `CM_ξ = {g : Ad_g ξ = ξ}`, their algebras, generated totally coordinated
//! configurations and geometric fits used to verify them.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::AlgebraVector;
use crate::analysis::RANK_TOL;
use crate::error::{AnalysisError, GraphError};
use crate::graph::is_spanning_tree;
use crate::lie::{ad_matrix, left_relative, right_relative, LieGroup};

/// `‖Ad_g ξ − ξ‖ < tol`.
pub fn cm_membership<G: LieGroup>(g: &G, xi: &AlgebraVector, tol: f64) -> bool {
    (g.adjoint(xi) - *xi).norm() < tol
}

fn padded_svd(m: &DMatrix<f64>) -> nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let cols = m.ncols();
    let m = if m.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    m.svd(false, true)
}

/// Orthonormal basis of the null space, singular values below `rel · σ_max` counted as zero.
fn null_space(m: &DMatrix<f64>, rel: f64) -> Vec<DVector<f64>> {
    let cols = m.ncols();
    let svd = padded_svd(m);
    let largest = svd.singular_values.max();
    let v_t = svd.v_t.expect("requested V^T");
    (0..cols)
        .filter(|&i| largest == 0.0 || svd.singular_values[i] <= rel * largest)
        .map(|i| v_t.row(i).transpose())
        .collect()
}

fn rank(m: &DMatrix<f64>, rel: f64) -> usize {
    m.ncols() - null_space(m, rel).len()
}

/// `dim ker ad_ξ`, the dimension of the Lie algebra of `CM_ξ`.
pub fn cm_algebra_dimension<G: LieGroup>(xi: &AlgebraVector) -> usize {
    G::DIM - rank(&ad_matrix::<G>(xi), RANK_TOL)
}

/// Orthonormal basis of `ker ad_ξ`.
pub fn cm_algebra_basis<G: LieGroup>(xi: &AlgebraVector) -> Vec<AlgebraVector> {
    null_space(&ad_matrix::<G>(xi), RANK_TOL)
        .iter()
        .map(AlgebraVector::from_dvector)
        .collect()
}

/// Kernel dimension of the central-difference linearization of `g ↦ Ad_g ξ − ξ` at the identity.
pub fn isotropy_dimension_fd<G: LieGroup>(xi: &AlgebraVector, eps: f64) -> usize {
    let jac = DMatrix::from_fn(G::DIM, G::DIM, |r, c| {
        let e = AlgebraVector::basis(G::DIM, c) * eps;
        (G::exp(&e).adjoint(xi) - G::exp(&(-e)).adjoint(xi))[r] / (2.0 * eps)
    });
    G::DIM - rank(&jac, 1e-6)
}

/// Random element of `CM_ξ`: a product of three exponentials of random kernel directions.
/// For `ξ = 0` the isotropy set is the whole group.
fn random_cm_element<G: LieGroup, R: Rng + ?Sized>(
    xi: &AlgebraVector,
    basis: &[AlgebraVector],
    rng: &mut R,
    position_scale: f64,
) -> G {
    if xi.norm() == 0.0 {
        return G::random(rng, position_scale);
    }
    let mut m = G::identity();
    for _ in 0..3 {
        let mut eta = AlgebraVector::zeros(G::DIM);
        for b in basis {
            let c: f64 = StandardNormal.sample(rng);
            eta = eta.add_scaled(b, c);
        }
        m = m.compose(&G::exp(&eta));
    }
    m
}

/// Places `n` agents so that `λ_jk ∈ CM_ξ` along every edge of `tree`, hence for every pair.
///
/// The root is uniformly random; each child is its parent times a random isotropy element,
/// walked in breadth-first order from agent 0.
pub fn generate_tc_configuration<G: LieGroup, R: Rng + ?Sized>(
    xi: &AlgebraVector,
    n: usize,
    tree: &[(usize, usize)],
    rng: &mut R,
    position_scale: f64,
) -> Result<Vec<G>, AnalysisError> {
    crate::lie::check_algebra::<G>(xi)?;
    if !is_spanning_tree(n, tree) {
        return Err(GraphError::NotSpanningTree(n).into());
    }
    let basis = cm_algebra_basis::<G>(xi);
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in tree {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut out: Vec<Option<G>> = vec![None; n];
    out[0] = Some(G::random(rng, position_scale));
    let mut queue = VecDeque::from([0]);
    while let Some(p) = queue.pop_front() {
        for &c in &adj[p] {
            if out[c].is_none() {
                let m = random_cm_element::<G, R>(xi, &basis, rng, position_scale);
                out[c] = Some(out[p].as_ref().unwrap().compose(&m));
                queue.push_back(c);
            }
        }
    }
    Ok(out.into_iter().map(|g| g.expect("tree spans all agents")).collect())
}

/// How far a configuration is from total coordination at common body velocity `ξ^l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcResiduals {
    /// `max ‖Ad_{λ_jk} ξ^l − ξ^l‖`
    pub left: f64,
    /// `max ‖Ad_{ρ_jk} ξ^r − ξ^r‖` with `ξ^r = Ad_{g_0} ξ^l`
    pub right: f64,
    /// `max ‖Ad_{g_k} ξ^l − ξ^r‖`
    pub spatial_spread: f64,
}

pub fn tc_residuals<G: LieGroup>(g: &[G], xi_l: &AlgebraVector) -> TcResiduals {
    let xi_r = g.first().map(|g0| g0.adjoint(xi_l)).unwrap_or(*xi_l);
    let mut res = TcResiduals {
        left: 0.0,
        right: 0.0,
        spatial_spread: 0.0,
    };
    for k in 0..g.len() {
        res.spatial_spread = res.spatial_spread.max((g[k].adjoint(xi_l) - xi_r).norm());
        for j in 0..g.len() {
            if j != k {
                res.left = res.left.max((left_relative(&g[k], &g[j]).adjoint(xi_l) - *xi_l).norm());
                res.right = res.right.max((right_relative(&g[k], &g[j]).adjoint(&xi_r) - xi_r).norm());
            }
        }
    }
    res
}

/// Common body velocities compatible with fixed relative positions: a basis of
/// `∩_{j≠k} ker(Ad_{λ_jk} − Id)`. Generically empty for two or more agents.
pub fn common_velocities<G: LieGroup>(g: &[G]) -> Vec<AlgebraVector> {
    let n = G::DIM;
    let mut rows: Vec<f64> = Vec::new();
    let mut count = 0;
    for k in 0..g.len() {
        for j in (k + 1)..g.len() {
            let lam = left_relative(&g[k], &g[j]);
            for r in 0..n {
                for c in 0..n {
                    let delta = if r == c { 1.0 } else { 0.0 };
                    rows.push(lam.adjoint(&AlgebraVector::basis(n, c))[r] - delta);
                }
            }
            count += n;
        }
    }
    let m = DMatrix::from_row_slice(count, n, &rows);
    null_space(&m, RANK_TOL)
        .iter()
        .map(AlgebraVector::from_dvector)
        .collect()
}

/// Least-squares circle through planar points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleFit {
    pub center: Vector2<f64>,
    pub radius: f64,
    /// `max |‖p − c‖ − R|` over the points.
    pub max_residual: f64,
}

/// Algebraic circle fit on mean-centred data. `None` for fewer than three points or
/// collinear data.
pub fn fit_circle(points: &[Vector2<f64>]) -> Option<CircleFit> {
    if points.len() < 3 {
        return None;
    }
    let mean = points.iter().sum::<Vector2<f64>>() / points.len() as f64;
    let a = DMatrix::from_fn(points.len(), 3, |i, c| {
        let p = points[i] - mean;
        match c {
            0 => 2.0 * p.x,
            1 => 2.0 * p.y,
            _ => 1.0,
        }
    });
    let b = DVector::from_fn(points.len(), |i, _| (points[i] - mean).norm_squared());
    let svd = a.svd(true, true);
    if svd.singular_values.min() <= 1e-12 * svd.singular_values.max() {
        return None;
    }
    let x = svd.solve(&b, 0.0).ok()?;
    let c = Vector2::new(x[0], x[1]);
    let radius = (x[2] + c.norm_squared()).sqrt();
    let center = c + mean;
    let max_residual = points
        .iter()
        .map(|p| ((p - center).norm() - radius).abs())
        .fold(0.0, f64::max);
    Some(CircleFit {
        center,
        radius,
        max_residual,
    })
}

/// Helix parameters estimated from uniformly sampled positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelixFit {
    /// Unit axis, oriented so the motion turns counter-clockwise about it.
    pub axis: Vector3<f64>,
    pub angular_speed: f64,
    /// Signed speed along `axis`.
    pub axial_speed: f64,
    /// `axial_speed · angular_speed`
    pub pitch: f64,
    pub radius: f64,
}

/// Fits a helix to positions sampled every `dt`. Second differences lie in the plane normal
/// to the axis; consecutive chords projected on that plane turn by `ω dt`.
/// Straight lines yield zero angular speed and radius. `None` for fewer than four points.
pub fn fit_helix(points: &[Vector3<f64>], dt: f64) -> Option<HelixFit> {
    if points.len() < 4 || !(dt > 0.0) {
        return None;
    }
    let d1: Vec<Vector3<f64>> = points.windows(2).map(|w| w[1] - w[0]).collect();
    let d2: Vec<Vector3<f64>> = d1.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = d1.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let curv = d2.iter().map(|d| d.norm()).fold(0.0, f64::max);
    if curv <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        let axis = d1[0].try_normalize(0.0)?;
        return Some(HelixFit {
            axis,
            angular_speed: 0.0,
            axial_speed: d1.iter().map(|d| d.dot(&axis)).sum::<f64>() / (d1.len() as f64 * dt),
            pitch: 0.0,
            radius: 0.0,
        });
    }
    let scatter: Matrix3<f64> = d2.iter().map(|d| d * d.transpose()).sum();
    let eig = SymmetricEigen::new(scatter);
    let imin = eig.eigenvalues.imin();
    let mut axis: Vector3<f64> = eig.eigenvectors.column(imin).into_owned().normalize();
    let chords: Vec<Vector3<f64>> = d1.iter().map(|d| d - axis * d.dot(&axis)).collect();
    if chords[0].cross(&chords[1]).dot(&axis) < 0.0 {
        axis = -axis;
    }
    let mut turn = 0.0;
    let mut radius = 0.0;
    for w in chords.windows(2) {
        let ang = w[0].cross(&w[1]).dot(&axis).atan2(w[0].dot(&w[1]));
        turn += ang;
        radius += w[0].norm() / (2.0 * (0.5 * ang).sin());
    }
    let m = (chords.len() - 1) as f64;
    let angular_speed = turn / (m * dt);
    let axial_speed = d1.iter().map(|d| d.dot(&axis)).sum::<f64>() / (d1.len() as f64 * dt);
    Some(HelixFit {
        axis,
        angular_speed,
        axial_speed,
        pitch: axial_speed * angular_speed,
        radius: radius / m,
    })
}
