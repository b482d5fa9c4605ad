//! Layered-graph reduction from fast-mixing path finding to short-walk
//! path finding.
//!
//! `m + 1` copies of the vertex set are chained by the edges of `G`; the
//! last layer restarts at `(0, s)` except at `(m, t)`, which only loops.
//! A walk of length `ell` from `(0, s)` gets about `ell / m` independent
//! chances to land on `t` after exactly `m` steps.

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gen::mixing_length;
use crate::graph::{Graph, GraphKind, Path, VertexId};
use crate::oracles::OracleBudget;
use crate::swfp::SwfpInstance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredInstance {
    pub graph: Graph,
    /// Vertex count of the source graph.
    pub base_n: usize,
    /// Edge count of the source graph.
    pub base_m: usize,
    /// Index of the last layer; there are `layers + 1` copies.
    pub layers: usize,
    pub source: VertexId,
    pub sink: VertexId,
    /// Walk budget of the resulting short-walk instance.
    pub walk_len: usize,
    pub x: u64,
}

/// Sidecar metadata for the command line.
#[derive(Debug, Clone, Serialize)]
pub struct LayeredMeta {
    pub base_n: usize,
    pub base_m: usize,
    pub layers: usize,
    pub source: VertexId,
    pub sink: VertexId,
    pub walk_len: usize,
    pub x: u64,
    pub codec: &'static str,
}

/// `ceil(2 (m + 1) k log2 x)`, computed exactly.
fn restart_budget(layers: usize, k: usize, x: u64) -> usize {
    let power = BigUint::from(x).pow((2 * (layers + 1) * k) as u32);
    (power - 1u8).bits() as usize
}

/// Layer count from the mixing parameter: `m = ceil(2k log2 k)`.
pub fn build_layered(
    g: &Graph,
    s: VertexId,
    t: VertexId,
    k: usize,
    x: u64,
    budget: &OracleBudget,
) -> Result<LayeredInstance> {
    build_layered_with_layers(g, s, t, mixing_length(k)?, k, x, budget)
}

/// Same construction with the layer count given directly.
pub fn build_layered_with_layers(
    g: &Graph,
    s: VertexId,
    t: VertexId,
    layers: usize,
    k: usize,
    x: u64,
    budget: &OracleBudget,
) -> Result<LayeredInstance> {
    if g.kind() == GraphKind::Undirected {
        return Err(Error::KindViolation("the reduction takes a directed graph".into()));
    }
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    if k < 2 || x < 2 || layers == 0 {
        return Err(Error::domain(format!(
            "need k >= 2, x >= 2 and at least one layer (k={k}, x={x}, layers={layers})"
        )));
    }
    let n = g.n();
    let vertices = (layers + 1)
        .checked_mul(n)
        .ok_or_else(|| Error::budget("layered vertices", usize::MAX, budget.max_vertices))?;
    if vertices > budget.max_vertices {
        return Err(Error::budget("layered vertices", vertices, budget.max_vertices));
    }
    let edges_needed = layers * g.m() + n;
    if edges_needed > budget.max_edges {
        return Err(Error::budget("layered edges", edges_needed, budget.max_edges));
    }
    let id = |i: usize, v: VertexId| i * n + v;
    let mut edges = Vec::with_capacity(edges_needed);
    for i in 0..layers {
        for e in g.edges() {
            edges.push((id(i, e.tail), id(i + 1, e.head)));
        }
    }
    for v in (0..n).filter(|&v| v != t) {
        edges.push((id(layers, v), id(0, s)));
    }
    edges.push((id(layers, t), id(layers, t)));
    let graph = Graph::new(GraphKind::Directed, vertices, edges)?;
    Ok(LayeredInstance {
        graph,
        base_n: n,
        base_m: g.m(),
        layers,
        source: id(0, s),
        sink: id(layers, t),
        walk_len: layers + restart_budget(layers, k, x),
        x,
    })
}

impl LayeredInstance {
    pub fn encode(&self, layer: usize, v: VertexId) -> Result<VertexId> {
        if layer > self.layers || v >= self.base_n {
            return Err(Error::domain(format!("({layer}, {v}) is not a layered vertex")));
        }
        Ok(layer * self.base_n + v)
    }

    pub fn decode(&self, id: VertexId) -> Result<(usize, VertexId)> {
        self.graph.check_vertex(id)?;
        Ok((id / self.base_n, id % self.base_n))
    }

    /// Whether `e` is one of the restart edges out of the last layer.
    pub fn is_wrap(&self, e: usize) -> bool {
        let first = self.layers * self.base_m;
        e >= first && e < first + self.base_n - 1
    }

    pub fn to_swfp(&self) -> Result<SwfpInstance> {
        SwfpInstance::new(self.graph.clone(), self.source, self.sink, self.walk_len)
    }

    pub fn meta(&self) -> LayeredMeta {
        LayeredMeta {
            base_n: self.base_n,
            base_m: self.base_m,
            layers: self.layers,
            source: self.source,
            sink: self.sink,
            walk_len: self.walk_len,
            x: self.x,
            codec: "layer * base_n + vertex",
        }
    }

    /// Splits `p` at every restart edge and maps each piece back to `G`.
    /// A piece that ends at the sink is an `s`-`t` walk of length `layers`.
    pub fn project_path(&self, p: &Path) -> Result<Vec<Path>> {
        if p.vertices.is_empty() || p.edges.len() + 1 != p.vertices.len() {
            return Err(Error::domain("malformed path"));
        }
        if p.start() != self.source {
            return Err(Error::domain("path does not start at the layered source"));
        }
        let mut pieces = Vec::new();
        let mut current = Path::single(self.decode(p.start())?.1);
        for (i, &e) in p.edges.iter().enumerate() {
            self.graph.check_edge(e)?;
            let edge = self.graph.edge(e);
            let (u, v) = (p.vertices[i], p.vertices[i + 1]);
            if edge.tail != u || edge.head != v {
                return Err(Error::domain(format!("edge {e} does not join {u} and {v}")));
            }
            if self.is_wrap(e) {
                let done = std::mem::replace(&mut current, Path::single(self.decode(v)?.1));
                pieces.push(done);
            } else if e < self.layers * self.base_m {
                current.push(e % self.base_m, self.decode(v)?.1);
            }
            // The sink loop adds nothing to the projection.
        }
        pieces.push(current);
        Ok(pieces)
    }
}

/// Default amplification: the byte length of the serialized instance.
pub fn default_x(g: &Graph, s: VertexId, t: VertexId, k: usize) -> u64 {
    let text = format!("{}instance {s} {t} {k}\n", g.to_text());
    (text.len() as u64).max(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind::Directed;
    use crate::oracles::validate_path;

    fn single_edge() -> Graph {
        Graph::new(Directed, 2, vec![(0, 1)]).unwrap()
    }

    #[test]
    fn minimal_instance() {
        let li = build_layered_with_layers(&single_edge(), 0, 1, 1, 2, 2, &OracleBudget::default()).unwrap();
        assert_eq!(li.graph.n(), 4);
        let edges: Vec<_> = li.graph.edges().iter().map(|e| (e.tail, e.head)).collect();
        // (0,s)=0 -> (1,t)=3, (1,s)=2 -> (0,s)=0, loop at (1,t)=3.
        assert_eq!(edges, vec![(0, 3), (2, 0), (3, 3)]);
        assert_eq!((li.source, li.sink), (0, 3));
        // 1 + ceil(2 * 2 * 2 * log2 2) = 9.
        assert_eq!(li.walk_len, 9);
        let p = Path {
            vertices: vec![0, 3],
            edges: vec![0],
        };
        assert_eq!(li.project_path(&p).unwrap(), vec![Path { vertices: vec![0, 1], edges: vec![0] }]);
    }

    #[test]
    fn projection_splits_at_restarts() {
        // s=0, u=1, t=2.
        let g = Graph::new(Directed, 3, vec![(0, 1), (0, 2)]).unwrap();
        let li = build_layered_with_layers(&g, 0, 2, 1, 2, 2, &OracleBudget::default()).unwrap();
        let (s0, u1, t1) = (li.encode(0, 0).unwrap(), li.encode(1, 1).unwrap(), li.encode(1, 2).unwrap());
        let wrap = li.graph.edge_between(u1, s0).unwrap();
        assert!(li.is_wrap(wrap));
        let p = Path {
            vertices: vec![s0, u1, s0, t1],
            edges: vec![0, wrap, 1],
        };
        let pieces = li.project_path(&p).unwrap();
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[1].vertices, vec![0, 2]);
        assert!(validate_path(&g, &pieces[1], 0, 2));
        let bad = Path {
            vertices: vec![s0, t1],
            edges: vec![0],
        };
        assert_eq!(li.project_path(&bad).unwrap_err().name(), "DomainError");
    }

    #[test]
    fn structure_and_codec() {
        let g = Graph::new(Directed, 4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (1, 1)]).unwrap();
        let li = build_layered(&g, 0, 3, 3, 5, &OracleBudget::default()).unwrap();
        assert_eq!(li.layers, 10);
        assert_eq!(li.graph.n(), 11 * 4);
        assert_eq!(li.graph.out_degree(li.sink), 1);
        assert_eq!(li.graph.out_adj(li.sink)[0].vertex, li.sink);
        for v in 0..4 {
            let id = li.encode(li.layers, v).unwrap();
            assert_eq!(li.decode(id).unwrap(), (li.layers, v));
            if v != 3 {
                assert_eq!(li.graph.out_degree(id), 1);
                assert_eq!(li.graph.out_adj(id)[0].vertex, li.source);
            }
        }
        for e in li.graph.edges() {
            let (a, _) = li.decode(e.tail).unwrap();
            let (b, _) = li.decode(e.head).unwrap();
            assert!(b == a + 1 || (a == li.layers && (e.head == li.source || e.head == li.sink)));
        }
        assert!(li.to_swfp().is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        let b = OracleBudget::default();
        let u = Graph::new(GraphKind::Undirected, 2, vec![(0, 1)]).unwrap();
        assert_eq!(build_layered(&u, 0, 1, 2, 2, &b).unwrap_err().name(), "KindViolation");
        assert_eq!(build_layered(&single_edge(), 0, 1, 1, 2, &b).unwrap_err().name(), "DomainError");
        assert_eq!(build_layered(&single_edge(), 0, 1, 2, 1, &b).unwrap_err().name(), "DomainError");
        let tiny = OracleBudget {
            max_vertices: 5,
            ..b
        };
        assert_eq!(build_layered(&single_edge(), 0, 1, 2, 2, &tiny).unwrap_err().name(), "BudgetExceeded");
    }

    #[test]
    fn walk_budget_is_exact() {
        // 2 * 5 * 3 * log2 10 = 99.65..
        assert_eq!(restart_budget(4, 3, 10), 100);
        assert_eq!(restart_budget(1, 2, 2), 8);
        assert_eq!(default_x(&single_edge(), 0, 1, 2), "graph directed 2 1\n0 1\ninstance 0 1 2\n".len() as u64);
    }
}
