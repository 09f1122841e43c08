//! Communication topology: static or piecewise-constant schedules of directed
//! edges `j ⇝ k` ("j sends to k").

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;

use crate::error::GraphError;

/// Directed edge `(j, k)`: agent `j` sends information to agent `k`.
pub type Edge = (usize, usize);

const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    start: f64,
    edges: BTreeSet<Edge>,
    // in_nbrs[k] sorted ascending, so sums run in a fixed order
    in_nbrs: Vec<Vec<usize>>,
}

/// Piecewise-constant edge schedule. A static graph is a single segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    n: usize,
    segments: Vec<Segment>,
    period: Option<f64>,
    undirected: bool,
}

impl CommGraph {
    /// General constructor. `segments` holds `(start, edges)` with starts beginning at 0 and
    /// strictly increasing; with `period = Some(p)` the schedule repeats every `p` seconds.
    pub fn scheduled(
        n: usize,
        segments: Vec<(f64, Vec<Edge>)>,
        period: Option<f64>,
        undirected: bool,
    ) -> Result<Self, GraphError> {
        if segments.is_empty() || segments[0].0 != 0.0 {
            return Err(GraphError::Breakpoints);
        }
        if segments.windows(2).any(|w| !(w[1].0 > w[0].0)) || segments.iter().any(|s| !s.0.is_finite()) {
            return Err(GraphError::Breakpoints);
        }
        if let Some(p) = period {
            if !(p.is_finite() && p > segments.last().unwrap().0) {
                return Err(GraphError::Breakpoints);
            }
        }
        let mut out = Vec::with_capacity(segments.len());
        for (start, edges) in segments {
            let mut set = BTreeSet::new();
            for &(j, k) in &edges {
                for a in [j, k] {
                    if a >= n {
                        return Err(GraphError::AgentOutOfRange { agent: a, n });
                    }
                }
                if j == k {
                    return Err(GraphError::SelfLoop(j));
                }
                set.insert((j, k));
            }
            if undirected {
                if let Some(&(j, k)) = set.iter().find(|&&(j, k)| !set.contains(&(k, j))) {
                    return Err(GraphError::Asymmetric(j, k));
                }
            }
            let mut in_nbrs = vec![Vec::new(); n];
            for &(j, k) in &set {
                in_nbrs[k].push(j);
            }
            for list in &mut in_nbrs {
                list.sort_unstable();
            }
            out.push(Segment {
                start,
                edges: set,
                in_nbrs,
            });
        }
        Ok(CommGraph {
            n,
            segments: out,
            period,
            undirected,
        })
    }

    /// Static directed graph.
    pub fn directed(n: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        Self::scheduled(n, vec![(0.0, edges)], None, false)
    }

    /// Static undirected graph; each pair `{a, b}` becomes the two edges `a ⇝ b` and `b ⇝ a`.
    pub fn undirected(n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        Self::scheduled(n, vec![(0.0, symmetrize(pairs))], None, true)
    }

    pub fn complete(n: usize) -> Self {
        let pairs: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        Self::undirected(n, &pairs).expect("complete graph is valid")
    }

    pub fn empty(n: usize) -> Self {
        Self::scheduled(n, vec![(0.0, Vec::new())], None, true).expect("empty graph is valid")
    }

    /// Undirected cycle `0 - 1 - ... - (n-1) - 0`.
    pub fn ring(n: usize) -> Self {
        let pairs: Vec<_> = match n {
            0 | 1 => Vec::new(),
            2 => vec![(0, 1)],
            _ => (0..n).map(|a| (a, (a + 1) % n)).collect(),
        };
        Self::undirected(n, &pairs).expect("ring is valid")
    }

    /// Undirected path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        let pairs: Vec<_> = (1..n).map(|a| (a - 1, a)).collect();
        Self::undirected(n, &pairs).expect("path is valid")
    }

    /// Directed chain `0 ⇝ 1 ⇝ ... ⇝ n-1`.
    pub fn directed_chain(n: usize) -> Self {
        Self::directed(n, (1..n).map(|a| (a - 1, a)).collect()).expect("chain is valid")
    }

    /// Undirected star centred on agent 0.
    pub fn star(n: usize) -> Self {
        let pairs: Vec<_> = (1..n).map(|a| (0, a)).collect();
        Self::undirected(n, &pairs).expect("star is valid")
    }

    /// Undirected tree from an edge list; rejects lists that are not spanning trees.
    pub fn tree(n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        if !is_spanning_tree(n, pairs) {
            return Err(GraphError::NotSpanningTree(n));
        }
        Self::undirected(n, pairs)
    }

    /// Periodic schedule cycling through `edge_sets`, each active for `dwell` seconds.
    pub fn alternating(n: usize, edge_sets: Vec<Vec<Edge>>, dwell: f64) -> Result<Self, GraphError> {
        if !(dwell > 0.0 && dwell.is_finite()) || edge_sets.is_empty() {
            return Err(GraphError::Breakpoints);
        }
        let count = edge_sets.len();
        let segments = edge_sets
            .into_iter()
            .enumerate()
            .map(|(i, e)| (i as f64 * dwell, e))
            .collect();
        Self::scheduled(n, segments, Some(count as f64 * dwell), false)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    pub fn is_static(&self) -> bool {
        self.segments.len() == 1
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    fn segment_at(&self, t: f64) -> &Segment {
        let t = match self.period {
            Some(p) => t.rem_euclid(p),
            None => t,
        };
        let idx = self.segments.partition_point(|s| s.start <= t);
        &self.segments[idx.saturating_sub(1)]
    }

    /// Agents `j` with `j ⇝ k` active at time `t`, in ascending order.
    pub fn in_neighbors(&self, k: usize, t: f64) -> Result<&[usize], GraphError> {
        if k >= self.n {
            return Err(GraphError::AgentOutOfRange { agent: k, n: self.n });
        }
        Ok(&self.segment_at(t).in_nbrs[k])
    }

    /// In-neighbor lists of every agent at time `t`.
    pub fn neighbor_lists(&self, t: f64) -> &[Vec<usize>] {
        &self.segment_at(t).in_nbrs
    }

    /// Active edge set at time `t`.
    pub fn edges_at(&self, t: f64) -> &BTreeSet<Edge> {
        &self.segment_at(t).edges
    }

    /// Standard connectivity of a static undirected graph.
    pub fn is_connected_undirected(&self) -> Result<bool, GraphError> {
        if !(self.undirected && self.is_static()) {
            return Err(GraphError::NotStaticUndirected);
        }
        if self.n == 0 {
            return Ok(true);
        }
        Ok(reachable(self.n, 0, &self.segments[0].edges).iter().all(|&r| r))
    }

    /// Graph Laplacian `L = D - A` of a static undirected graph.
    pub fn laplacian(&self) -> Result<DMatrix<f64>, GraphError> {
        if !(self.undirected && self.is_static()) {
            return Err(GraphError::NotStaticUndirected);
        }
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(j, k) in &self.segments[0].edges {
            l[(k, j)] -= 1.0;
            l[(k, k)] += 1.0;
        }
        Ok(l)
    }

    /// Second-smallest Laplacian eigenvalue (the consensus rate on a static undirected graph).
    pub fn algebraic_connectivity(&self) -> Result<f64, GraphError> {
        let l = self.laplacian()?;
        if self.n < 2 {
            return Ok(0.0);
        }
        let mut eig: Vec<f64> = l.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.total_cmp(b));
        Ok(eig[1])
    }

    /// Uniform connectivity over `[0, horizon]`: some root reaches every agent through the
    /// edges that stay active for a contiguous `delta` inside each window of length `window`.
    pub fn is_uniformly_connected(&self, delta: f64, window: f64, horizon: f64) -> Result<bool, GraphError> {
        Ok(self.uniform_connectivity_root(delta, window, horizon)?.is_some())
    }

    /// Like [`Self::is_uniformly_connected`] but returns the smallest valid root.
    pub fn uniform_connectivity_root(
        &self,
        delta: f64,
        window: f64,
        horizon: f64,
    ) -> Result<Option<usize>, GraphError> {
        if !(delta > 0.0 && delta <= window && window <= horizon && horizon.is_finite()) {
            return Err(GraphError::Durations {
                delta,
                window,
                horizon,
            });
        }
        if self.n <= 1 {
            return Ok((self.n == 1).then_some(0));
        }
        let intervals = self.active_intervals(horizon);

        // Edge (j,k) qualifies for the window starting at t iff t ∈ [a + δ - T, b - δ] for one of
        // its intervals [a, b]. Qualifying sets are unions of closed intervals, so testing every
        // endpoint plus the midpoints between consecutive endpoints covers every case.
        let last = horizon - window;
        let mut marks = vec![0.0, last];
        for list in intervals.iter().map(|(_, l)| l) {
            for &(a, b) in list {
                for c in [a + delta - window, b - delta] {
                    if (0.0..=last).contains(&c) {
                        marks.push(c);
                    }
                }
            }
        }
        marks.sort_by(|a, b| a.total_cmp(b));
        marks.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS);
        let mut probes = marks.clone();
        probes.extend(marks.windows(2).map(|w| 0.5 * (w[0] + w[1])));

        let mut roots: Vec<bool> = vec![true; self.n];
        for &t in &probes {
            let edges: BTreeSet<Edge> = intervals
                .iter()
                .filter(|(_, list)| {
                    list.iter().any(|&(a, b)| {
                        b - a + TIME_EPS >= delta
                            && t + window + TIME_EPS >= a + delta
                            && t <= b - delta + TIME_EPS
                    })
                })
                .map(|(e, _)| *e)
                .collect();
            for (root, ok) in roots.iter_mut().enumerate() {
                if *ok && !reachable(self.n, root, &edges).iter().all(|&r| r) {
                    *ok = false;
                }
            }
            if !roots.iter().any(|&r| r) {
                return Ok(None);
            }
        }
        Ok(roots.iter().position(|&r| r))
    }

    /// Merged active intervals of every edge inside `[0, horizon]`.
    fn active_intervals(&self, horizon: f64) -> Vec<(Edge, Vec<(f64, f64)>)> {
        // unroll the schedule into absolute segments
        let mut absolute: Vec<(f64, f64, &BTreeSet<Edge>)> = Vec::new();
        let mut offset = 0.0;
        loop {
            for (i, seg) in self.segments.iter().enumerate() {
                let start = offset + seg.start;
                if start >= horizon {
                    break;
                }
                let end = match (self.segments.get(i + 1), self.period) {
                    (Some(next), _) => offset + next.start,
                    (None, Some(p)) => offset + p,
                    (None, None) => horizon,
                };
                absolute.push((start, end.min(horizon), &seg.edges));
            }
            match self.period {
                Some(p) if offset + p < horizon => offset += p,
                _ => break,
            }
        }
        let all: BTreeSet<Edge> = self.segments.iter().flat_map(|s| s.edges.iter().copied()).collect();
        all.into_iter()
            .map(|e| {
                let mut list: Vec<(f64, f64)> = Vec::new();
                for &(s, t, edges) in &absolute {
                    if !edges.contains(&e) {
                        continue;
                    }
                    match list.last_mut() {
                        Some(last) if (last.1 - s).abs() <= TIME_EPS => last.1 = t,
                        _ => list.push((s, t)),
                    }
                }
                (e, list)
            })
            .collect()
    }
}

fn symmetrize(pairs: &[(usize, usize)]) -> Vec<Edge> {
    pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect()
}

/// Agents reachable from `root` along directed edges.
fn reachable(n: usize, root: usize, edges: &BTreeSet<Edge>) -> Vec<bool> {
    let mut out = vec![Vec::new(); n];
    for &(j, k) in edges {
        out[j].push(k);
    }
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(j) = queue.pop_front() {
        for &k in &out[j] {
            if !seen[k] {
                seen[k] = true;
                queue.push_back(k);
            }
        }
    }
    seen
}

/// `n - 1` distinct pairs connecting all `n` agents.
pub fn is_spanning_tree(n: usize, pairs: &[(usize, usize)]) -> bool {
    if n == 0 || pairs.len() != n - 1 || pairs.iter().any(|&(a, b)| a >= n || b >= n || a == b) {
        return false;
    }
    let edges: BTreeSet<Edge> = symmetrize(pairs).into_iter().collect();
    reachable(n, 0, &edges).iter().all(|&r| r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbor_examples() {
        assert_eq!(CommGraph::complete(3).in_neighbors(0, 0.0).unwrap(), &[1, 2]);
        assert!(CommGraph::empty(3).in_neighbors(1, 5.0).unwrap().is_empty());
        assert_eq!(CommGraph::directed_chain(3).in_neighbors(2, 0.0).unwrap(), &[1]);
        assert!(matches!(
            CommGraph::complete(3).in_neighbors(3, 0.0),
            Err(GraphError::AgentOutOfRange { agent: 3, n: 3 })
        ));
    }

    #[test]
    fn construction_errors() {
        assert_eq!(CommGraph::directed(2, vec![(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert!(matches!(
            CommGraph::scheduled(2, vec![(0.0, vec![(0, 1)])], None, true),
            Err(GraphError::Asymmetric(0, 1))
        ));
        assert_eq!(
            CommGraph::scheduled(2, vec![(0.0, vec![]), (0.0, vec![])], None, false),
            Err(GraphError::Breakpoints)
        );
    }

    #[test]
    fn schedule_lookup() {
        let g = CommGraph::alternating(3, vec![vec![(0, 1)], vec![(1, 2)]], 0.5).unwrap();
        assert_eq!(g.in_neighbors(1, 0.2).unwrap(), &[0]);
        assert!(g.in_neighbors(2, 0.2).unwrap().is_empty());
        assert_eq!(g.in_neighbors(2, 0.7).unwrap(), &[1]);
        assert_eq!(g.in_neighbors(1, 1.2).unwrap(), &[0]);
    }

    #[test]
    fn uniform_connectivity_examples() {
        let ring = CommGraph::ring(5);
        assert!(ring.is_uniformly_connected(0.1, 1.0, 10.0).unwrap());
        assert!(!CommGraph::empty(2).is_uniformly_connected(0.1, 1.0, 10.0).unwrap());

        let alt = CommGraph::alternating(3, vec![vec![(0, 1)], vec![(1, 2)]], 0.5).unwrap();
        assert_eq!(alt.uniform_connectivity_root(0.5, 2.0, 10.0).unwrap(), Some(0));
        // the window cannot see a full dwell of both edges
        assert!(!alt.is_uniformly_connected(0.5, 1.2, 10.0).unwrap());
        // a longer dwell requirement than any edge provides fails
        assert!(!alt.is_uniformly_connected(0.6, 2.0, 10.0).unwrap());

        assert!(matches!(
            alt.is_uniformly_connected(2.0, 1.0, 10.0),
            Err(GraphError::Durations { .. })
        ));
    }

    #[test]
    fn contiguous_dwell_required() {
        // 0⇝1 is active in two 0.3 s pieces separated by a gap; each piece alone is below δ = 0.5
        let g = CommGraph::scheduled(
            2,
            vec![(0.0, vec![(0, 1)]), (0.3, vec![]), (0.4, vec![(0, 1)]), (0.7, vec![])],
            Some(1.0),
            false,
        )
        .unwrap();
        assert!(!g.is_uniformly_connected(0.5, 1.0, 5.0).unwrap());
        assert!(g.is_uniformly_connected(0.3, 1.0, 5.0).unwrap());
    }

    #[test]
    fn adjacent_segments_merge() {
        let g = CommGraph::scheduled(
            2,
            vec![(0.0, vec![(0, 1)]), (0.3, vec![(0, 1)]), (0.6, vec![])],
            Some(1.0),
            false,
        )
        .unwrap();
        // a window of period + δ always holds one merged 0.6 s interval
        assert!(g.is_uniformly_connected(0.6, 1.6, 5.0).unwrap());
        assert!(!g.is_uniformly_connected(0.6, 1.5, 5.0).unwrap());
    }

    #[test]
    fn undirected_connectivity() {
        assert!(CommGraph::complete(4).is_connected_undirected().unwrap());
        assert!(!CommGraph::empty(2).is_connected_undirected().unwrap());
        assert!(CommGraph::tree(4, &[(0, 1), (1, 2), (1, 3)]).unwrap().is_connected_undirected().unwrap());
        assert!(CommGraph::tree(4, &[(0, 1), (1, 2), (0, 2)]).is_err());
        assert_eq!(
            CommGraph::directed_chain(3).is_connected_undirected(),
            Err(GraphError::NotStaticUndirected)
        );
    }

    #[test]
    fn ring_connectivity_value() {
        // λ₂ of C_5 is 2 - 2cos(2π/5)
        let expected = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / 5.0).cos();
        assert!((CommGraph::ring(5).algebraic_connectivity().unwrap() - expected).abs() < 1e-12);
    }
}
