use crate::algebra::AlgebraVector;
use crate::control::Objective;
use crate::graph::CommGraph;
use crate::lie::LieGroup;

/// Disagreement and Lyapunov values of one swarm state.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// `Σ_k Σ_{j⇝k} ‖ξ_k − ξ_j‖²`
    pub v_r: f64,
    /// `Σ_k Σ_{j⇝k} ‖Ad_{g_k} ξ_k − Ad_{g_j} ξ_j‖²`
    pub v_l: f64,
    /// `½ Σ_k Σ_{j⇝k} ‖η_k − η_j‖²`
    pub v_tr: f64,
    /// `½ Σ_k Σ_{j⇝k} ‖Ad_{g_k} η_k − Ad_{g_j} η_j‖²`
    pub v_tl: f64,
    /// Per-agent `V_k`.
    pub v_k: Vec<f64>,
}

impl Metrics {
    pub fn max_vk(&self) -> f64 {
        self.v_k.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// The metric a controller drives to zero; `None` for [`Objective::None`].
    pub fn objective(&self, obj: Objective) -> Option<f64> {
        match obj {
            Objective::None => None,
            Objective::Vr => Some(self.v_r),
            Objective::Vl => Some(self.v_l),
            Objective::Vtr => Some(self.v_tr),
            Objective::Vtl => Some(self.v_tl),
            Objective::Vk => Some(self.max_vk()),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.v_r, self.v_l, self.v_tr, self.v_tl]
            .iter()
            .chain(&self.v_k)
            .all(|x| x.is_finite())
    }
}

fn edge_sum(graph: &CommGraph, t: f64, values: &[AlgebraVector]) -> f64 {
    let nbrs = graph.neighbor_lists(t);
    let mut total = 0.0;
    for (k, list) in nbrs.iter().enumerate() {
        for &j in list {
            total += (values[k] - values[j]).norm_squared();
        }
    }
    total
}

/// Evaluates every metric over the edges active at `t`. `eta` holds the left-invariant
/// references used by `V_tr`/`V_tl`; `v_k` is passed through.
pub fn metrics<G: LieGroup>(
    g: &[G],
    xi: &[AlgebraVector],
    eta: &[AlgebraVector],
    graph: &CommGraph,
    t: f64,
    v_k: Vec<f64>,
) -> Metrics {
    let xi_r: Vec<_> = g.iter().zip(xi).map(|(gk, x)| gk.adjoint(x)).collect();
    let eta_r: Vec<_> = g.iter().zip(eta).map(|(gk, e)| gk.adjoint(e)).collect();
    Metrics {
        v_r: edge_sum(graph, t, xi),
        v_l: edge_sum(graph, t, &xi_r),
        v_tr: 0.5 * edge_sum(graph, t, eta),
        v_tl: 0.5 * edge_sum(graph, t, &eta_r),
        v_k,
    }
}
