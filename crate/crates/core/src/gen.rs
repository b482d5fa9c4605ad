//! Seeded random instance generators.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphKind, VertexId};
use crate::oracles::OracleBudget;
use crate::ratio::{from_u64s, Rational};
use crate::rng::Stream;
use crate::swfp::SwfpInstance;
use crate::walk::exact_pk;

fn pick(st: &mut Stream, n: usize) -> VertexId {
    st.below(n as u64) as usize
}

/// `m` edges with uniformly random endpoints; loops and multi-edges allowed.
pub fn erdos_directed(n: usize, m: usize, st: &mut Stream) -> Result<Graph> {
    random_edges(GraphKind::Directed, n, m, st)
}

pub fn erdos_undirected(n: usize, m: usize, st: &mut Stream) -> Result<Graph> {
    random_edges(GraphKind::Undirected, n, m, st)
}

fn random_edges(kind: GraphKind, n: usize, m: usize, st: &mut Stream) -> Result<Graph> {
    if n == 0 && m > 0 {
        return Err(Error::Generation("edges need at least one vertex".into()));
    }
    let edges = (0..m).map(|_| (pick(st, n), pick(st, n))).collect();
    Graph::new(kind, n, edges)
}

/// Connected undirected graph: a random spanning tree plus `m - (n - 1)`
/// random non-loop edges, with vertex labels and edge order shuffled.
pub fn connected_undirected(n: usize, m: usize, st: &mut Stream) -> Result<Graph> {
    if n == 0 || m + 1 < n {
        return Err(Error::Generation(format!(
            "a connected graph on {n} vertices needs at least {} edges",
            n.saturating_sub(1)
        )));
    }
    if n == 1 && m > 0 {
        return Err(Error::Generation("a single vertex only admits loops".into()));
    }
    let mut label: Vec<VertexId> = (0..n).collect();
    st.shuffle(&mut label);
    let mut edges = Vec::with_capacity(m);
    for i in 1..n {
        let parent = pick(st, i);
        edges.push((label[parent], label[i]));
    }
    while edges.len() < m {
        let u = pick(st, n);
        let v = pick(st, n);
        if u != v {
            edges.push((u, v));
        }
    }
    st.shuffle(&mut edges);
    Graph::new(GraphKind::Undirected, n, edges)
}

/// Connected Eulerian digraph with exactly `m >= n` edges: a random cycle
/// through every vertex plus short random closed walks.
pub fn eulerian_connected(n: usize, m: usize, st: &mut Stream) -> Result<Graph> {
    if n == 0 || m < n {
        return Err(Error::Generation(format!(
            "a connected eulerian graph on {n} vertices needs at least {n} edges"
        )));
    }
    let mut order: Vec<VertexId> = (0..n).collect();
    st.shuffle(&mut order);
    let mut edges: Vec<(VertexId, VertexId)> =
        (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
    add_closed_walks(&mut edges, n, m, st);
    st.shuffle(&mut edges);
    Graph::new(GraphKind::Eulerian, n, edges)
}

/// Union of random closed walks (each of length `1..=max_len`) with `m`
/// edges in total. Not necessarily connected.
pub fn eulerian_cycle_union(n: usize, m: usize, max_len: usize, st: &mut Stream) -> Result<Graph> {
    if (n == 0 && m > 0) || max_len == 0 {
        return Err(Error::Generation("need vertices and a positive walk length".into()));
    }
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let len = (1 + st.below(max_len as u64) as usize).min(m - edges.len());
        let walk: Vec<VertexId> = (0..len).map(|_| pick(st, n)).collect();
        for i in 0..len {
            edges.push((walk[i], walk[(i + 1) % len]));
        }
    }
    Graph::new(GraphKind::Eulerian, n, edges)
}

fn add_closed_walks(edges: &mut Vec<(VertexId, VertexId)>, n: usize, m: usize, st: &mut Stream) {
    while edges.len() < m {
        let len = (1 + st.below(4) as usize).min(m - edges.len());
        let walk: Vec<VertexId> = (0..len).map(|_| pick(st, n)).collect();
        for i in 0..len {
            edges.push((walk[i], walk[(i + 1) % len]));
        }
    }
}

/// Layered funnel for short-walk instances: `s = 0`, `t = n - 1`, inner
/// vertices spread over at most `k - 1` layers with forward edges, random
/// shortcuts, occasional inner loops and back edges, and a loop at `t`.
pub fn swfp_funnel(n: usize, k: usize, st: &mut Stream) -> Result<Graph> {
    if n < 2 || k == 0 {
        return Err(Error::Generation("funnel needs n >= 2 and k >= 1".into()));
    }
    let t = n - 1;
    let inner = n - 2;
    let layers = inner.min(k - 1);
    // layer[v] for inner vertices, 1-based; s is layer 0, t is layers + 1.
    let mut layer = vec![0usize; n];
    layer[t] = layers + 1;
    for (i, v) in (1..=inner).enumerate() {
        layer[v] = if layers == 0 {
            0
        } else if i < layers {
            i + 1
        } else {
            1 + st.below(layers as u64) as usize
        };
    }
    let members = |l: usize| -> Vec<VertexId> { (0..n).filter(|&v| layer[v] == l).collect() };
    let mut edges = Vec::new();
    for v in 0..t {
        let next = members(layer[v] + 1);
        let fan = 1 + st.below(next.len().min(3) as u64) as usize;
        for _ in 0..fan {
            edges.push((v, next[pick(st, next.len())]));
        }
        if layer[v] + 1 < layers + 1 && st.chance(1, 3) {
            edges.push((v, t));
        }
        if v != 0 && st.chance(1, 8) {
            edges.push((v, v));
        }
        if layer[v] >= 1 && st.chance(1, 10) {
            let back = members(layer[v] - 1);
            edges.push((v, back[pick(st, back.len())]));
        }
    }
    edges.push((t, t));
    Graph::new(GraphKind::Directed, n, edges)
}

/// [`swfp_funnel`] redrawn until the exact oracle shows a `k`-step walk
/// from `s` reaches `t` with probability at least `1 - 1/|x|`.
pub fn layered_funnel(n: usize, k: usize, st: &mut Stream, max_attempts: usize) -> Result<Graph> {
    let budget = OracleBudget::default();
    for _ in 0..max_attempts {
        let g = swfp_funnel(n, k, st)?;
        let inst = SwfpInstance::new(g, 0, n - 1, k)?;
        if inst.validity(&budget)?.1 {
            return Ok(inst.graph);
        }
    }
    Err(Error::Generation(format!(
        "no valid funnel with n={n}, k={k} after {max_attempts} attempts"
    )))
}

/// Walk length whose `k`-mixing bound the reduction relies on:
/// `ceil(2k log2 k)`.
pub fn mixing_length(k: usize) -> Result<usize> {
    if k < 2 {
        return Err(Error::domain("mixing parameter k must be at least 2"));
    }
    let kk = num_bigint::BigUint::from(k).pow(2 * k as u32);
    Ok((kk - 1u8).bits() as usize)
}

/// Random directed graph where every vertex has an out-edge, `t` has only
/// its loop, and an exact `m`-step walk from `s` ends at `t` with
/// probability at least `1/(2k)`, `m = ceil(2k log2 k)`.
pub fn poly_mixing(
    n: usize,
    k: usize,
    st: &mut Stream,
    max_attempts: usize,
) -> Result<(Graph, VertexId, VertexId)> {
    if n < 2 {
        return Err(Error::Generation("need at least two vertices".into()));
    }
    let m = mixing_length(k)?;
    let bound: Rational = from_u64s(1, 2 * k as u64);
    let budget = OracleBudget::default();
    for _ in 0..max_attempts {
        let s = 0;
        let t = 1 + pick(st, n - 1);
        let mut edges = Vec::new();
        for v in 0..n {
            if v == t {
                edges.push((t, t));
                continue;
            }
            let deg = 1 + st.below(3) as usize;
            for _ in 0..deg {
                edges.push((v, pick(st, n)));
            }
        }
        let g = Graph::new(GraphKind::Directed, n, edges)?;
        if exact_pk(&g, s, t, m, &budget)? >= bound {
            return Ok((g, s, t));
        }
    }
    Err(Error::Generation(format!(
        "no poly-mixing instance with n={n}, k={k} after {max_attempts} attempts"
    )))
}

/// Named generator families for the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    ErdosDirected,
    ErdosUndirected,
    ConnectedUndirected,
    EulerianConnected,
    EulerianUnion,
    Funnel,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::ErdosDirected,
        Family::ErdosUndirected,
        Family::ConnectedUndirected,
        Family::EulerianConnected,
        Family::EulerianUnion,
        Family::Funnel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::ErdosDirected => "erdos-directed",
            Family::ErdosUndirected => "erdos-undirected",
            Family::ConnectedUndirected => "connected-undirected",
            Family::EulerianConnected => "eulerian",
            Family::EulerianUnion => "eulerian-union",
            Family::Funnel => "funnel",
        }
    }

    /// `m` is the edge count, except for the funnel where it is the walk
    /// length `k`.
    pub fn generate(self, n: usize, m: usize, st: &mut Stream) -> Result<Graph> {
        match self {
            Family::ErdosDirected => erdos_directed(n, m, st),
            Family::ErdosUndirected => erdos_undirected(n, m, st),
            Family::ConnectedUndirected => connected_undirected(n, m, st),
            Family::EulerianConnected => eulerian_connected(n, m, st),
            Family::EulerianUnion => eulerian_cycle_union(n, m, 4, st),
            Family::Funnel => layered_funnel(n, m, st, 1000),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::domain(format!("unknown generator {s:?}")))
    }
}

/// True when every vertex has an out-edge.
pub fn no_sinks(g: &Graph) -> bool {
    (0..g.n()).all(|v| g.out_degree(v) > 0)
}
