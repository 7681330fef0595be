//! Binary MRF over candidate regions, minimized exactly by s/t min-cut.
//!
//! Energy: `E(L) = Σ u_i(l_i) + Σ_{ij} ω_ij [l_i ≠ l_j]` with
//! `u_i(0) = p_i`, `u_i(1) = 1 − p_i` and `ω_ij = 1 − tanh(UD(r_i, r_j))`.
//!
//! Graph construction: `s → i` with capacity `u_i(0)`, `i → t` with
//! capacity `u_i(1)`, and `ω_ij` both ways between neighbours. A vertex on
//! the source side of the cut takes label 1, so the cut value is the energy.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::cues::{divergence_ud, lab_distance, mean_lab, stroke_width_samples, swd_between};
use crate::error::{Error, Result};
use crate::imgcore::ColorImage;
use crate::regions::Region;

/// Residual capacities at or below this are treated as saturated.
const EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct RegionGraph {
    /// `(u(0), u(1))` per vertex.
    unary: Vec<[f64; 2]>,
    /// `(i, j, ω)` with `i < j`.
    edges: Vec<(usize, usize, f64)>,
}

impl RegionGraph {
    pub fn new(unary: Vec<[f64; 2]>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if unary.iter().flatten().any(|u| !u.is_finite()) {
            return Err(Error::InvalidParameter("non-finite unary potential".into()));
        }
        let n = unary.len();
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidParameter(format!("self edge at vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!("edge ({a}, {b}) out of range")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite weight on ({a}, {b})")));
            }
            norm.push((a.min(b), a.max(b), w));
        }
        Ok(Self { unary, edges: norm })
    }

    /// Unaries `u(0) = p`, `u(1) = 1 − p` from characterness scores.
    pub fn from_scores(scores: &[f64], edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(p) = scores.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!("score {p} outside [0, 1]")));
        }
        Self::new(scores.iter().map(|&p| [p, 1.0 - p]).collect(), edges)
    }

    pub fn len(&self) -> usize {
        self.unary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unary.is_empty()
    }

    pub fn unary(&self) -> &[[f64; 2]] {
        &self.unary
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Plain-text dump: `vertices n`, then `v i u0 u1` lines, `edges m`, then
    /// `e i j w` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.unary.len());
        for (i, u) in self.unary.iter().enumerate() {
            let _ = writeln!(s, "v {i} {} {}", u[0], u[1]);
        }
        let _ = writeln!(s, "edges {}", self.edges.len());
        for (a, b, w) in &self.edges {
            let _ = writeln!(s, "e {a} {b} {w}");
        }
        s
    }
}

/// Settings for [`build_graph`].
#[derive(Clone, Debug, PartialEq)]
pub struct GraphParams {
    /// Weight of SWD against CD inside UD.
    pub beta: f64,
    pub swd_bins: usize,
    /// CD is divided by this before mixing, bringing LAB distances near `[0, 1]`.
    pub cd_scale: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            beta: 0.5,
            swd_bins: 16,
            cd_scale: 100.0,
        }
    }
}

/// Two regions are neighbours when their centroid distance is below the
/// smaller of their characteristic scales.
pub fn are_neighbors(a: &Region, b: &Region) -> bool {
    let (ax, ay) = a.centroid();
    let (bx, by) = b.centroid();
    let d = (ax - bx).hypot(ay - by);
    d < a.geometry().characteristic_scale().min(b.geometry().characteristic_scale())
}

/// Unaries from scores and pairwise weights `1 − tanh(UD)`. SWD is
/// symmetrized (mean of both KL directions) so the weight of an undirected
/// edge does not depend on vertex order.
pub fn build_graph(regions: &[Region], scores: &[f64], img: &ColorImage, params: &GraphParams) -> Result<RegionGraph> {
    if regions.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: (regions.len(), 1),
            actual: (scores.len(), 1),
        });
    }
    let widths: Vec<Vec<f64>> = regions.iter().map(stroke_width_samples).collect();
    let colors: Vec<[f64; 3]> = regions.iter().map(|r| mean_lab(img, r)).collect();
    let mut edges = Vec::new();
    for i in 0..regions.len() {
        for j in i + 1..regions.len() {
            if !are_neighbors(&regions[i], &regions[j]) {
                continue;
            }
            let swd = 0.5
                * (swd_between(&widths[i], &widths[j], params.swd_bins)
                    + swd_between(&widths[j], &widths[i], params.swd_bins));
            let cd = lab_distance(colors[i], colors[j]) / params.cd_scale;
            let ud = divergence_ud(swd, cd, params.beta);
            edges.push((i, j, 1.0 - ud.tanh()));
        }
    }
    RegionGraph::from_scores(scores, edges)
}

/// `Σ u_i(l_i) + Σ ω_ij [l_i ≠ l_j]`; `true` is label 1 (character).
pub fn energy(graph: &RegionGraph, labels: &[bool]) -> Result<f64> {
    if labels.len() != graph.len() {
        return Err(Error::DimensionMismatch {
            expected: (graph.len(), 1),
            actual: (labels.len(), 1),
        });
    }
    let u: f64 = graph
        .unary
        .iter()
        .zip(labels)
        .map(|(u, &l)| u[l as usize])
        .sum();
    Ok(u + pairwise_energy(graph, labels))
}

/// The pairwise part of [`energy`] alone.
pub fn pairwise_energy(graph: &RegionGraph, labels: &[bool]) -> f64 {
    graph
        .edges
        .iter()
        .filter(|(a, b, _)| labels[*a] != labels[*b])
        .map(|(_, _, w)| w)
        .sum()
}

/// Globally minimal labeling. Among minimal labelings the one with the
/// largest set of label-1 vertices is returned.
pub fn min_cut_label(graph: &RegionGraph) -> Result<Vec<bool>> {
    if let Some(&(a, b, weight)) = graph.edges.iter().find(|e| e.2 < 0.0) {
        return Err(Error::NegativeWeight { a, b, weight });
    }
    let n = graph.len();
    let (s, t) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2);
    for (i, u) in graph.unary.iter().enumerate() {
        net.add_edge(s, i, u[0], 0.0);
        net.add_edge(i, t, u[1], 0.0);
    }
    for &(a, b, w) in &graph.edges {
        net.add_edge(a, b, w, w);
    }
    net.max_flow(s, t);
    // Vertices that cannot reach t in the residual graph form the largest
    // source set of a minimum cut.
    let reaches_t = net.reaching(t);
    Ok((0..n).map(|i| !reaches_t[i]).collect())
}

struct Arc {
    to: usize,
    cap: f64,
}

/// Dinic max-flow on paired arcs (`2k` forward, `2k+1` reverse).
struct FlowNetwork {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        Self {
            arcs: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add_edge(&mut self, a: usize, b: usize, cap: f64, rev_cap: f64) {
        self.adj[a].push(self.arcs.len());
        self.arcs.push(Arc { to: b, cap });
        self.adj[b].push(self.arcs.len());
        self.arcs.push(Arc { to: a, cap: rev_cap });
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let n = self.adj.len();
        let mut total = 0.0;
        loop {
            let mut level = vec![usize::MAX; n];
            level[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &e in &self.adj[v] {
                    let to = self.arcs[e].to;
                    if self.arcs[e].cap > EPS && level[to] == usize::MAX {
                        level[to] = level[v] + 1;
                        q.push_back(to);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            let mut it = vec![0usize; n];
            loop {
                let f = self.augment(s, t, f64::INFINITY, &level, &mut it);
                if f <= EPS {
                    break;
                }
                total += f;
            }
        }
    }

    fn augment(&mut self, v: usize, t: usize, limit: f64, level: &[usize], it: &mut [usize]) -> f64 {
        if v == t {
            return limit;
        }
        while it[v] < self.adj[v].len() {
            let e = self.adj[v][it[v]];
            let to = self.arcs[e].to;
            if self.arcs[e].cap > EPS && level[to] == level[v] + 1 {
                let f = self.augment(to, t, limit.min(self.arcs[e].cap), level, it);
                if f > EPS {
                    self.arcs[e].cap -= f;
                    self.arcs[e ^ 1].cap += f;
                    return f;
                }
            }
            it[v] += 1;
        }
        0.0
    }

    /// Vertices with a residual path to `t`.
    fn reaching(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[t] = true;
        let mut q = VecDeque::from([t]);
        while let Some(v) = q.pop_front() {
            for &e in &self.adj[v] {
                // arc e leaves v; its partner e^1 enters v from `to`
                let from = self.arcs[e].to;
                if !seen[from] && self.arcs[e ^ 1].cap > EPS {
                    seen[from] = true;
                    q.push_back(from);
                }
            }
        }
        seen
    }
}
