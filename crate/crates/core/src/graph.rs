//! Multigraph storage with canonically ordered adjacency.
//!
//! Edges are kept in input order; an edge's id is its position. Each vertex
//! gets an out-list and an in-list of [`Adj`] entries sorted by
//! `(neighbor, edge id)`. That ordering is the "lexicographic order" every
//! solver relies on, and also makes multi-edge tie breaks resolve to the
//! lowest edge id.
//!
//! Undirected graphs store every edge as two half-edges sharing one id, so
//! the out-list of `v` holds all incident edges and a self-loop shows up
//! twice.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Directed,
    Undirected,
    Eulerian,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Directed => "directed",
            GraphKind::Undirected => "undirected",
            GraphKind::Eulerian => "eulerian",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "directed" => Ok(GraphKind::Directed),
            "undirected" => Ok(GraphKind::Undirected),
            "eulerian" => Ok(GraphKind::Eulerian),
            other => Err(Error::domain(format!("unknown graph kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
}

/// One adjacency entry: the vertex on the other side and the edge used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Adj {
    pub vertex: VertexId,
    pub edge: EdgeId,
}

/// Compressed per-vertex lists.
#[derive(Debug, Clone, PartialEq, Eq)]
struct AdjLists {
    offsets: Vec<usize>,
    entries: Vec<Adj>,
}

impl AdjLists {
    fn build(n: usize, mut pairs: Vec<(VertexId, Adj)>) -> Self {
        pairs.sort_unstable();
        let mut offsets = vec![0usize; n + 1];
        for &(v, _) in &pairs {
            offsets[v + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let entries = pairs.into_iter().map(|(_, a)| a).collect();
        AdjLists { offsets, entries }
    }

    #[inline]
    fn list(&self, v: VertexId) -> &[Adj] {
        &self.entries[self.offsets[v]..self.offsets[v + 1]]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    kind: GraphKind,
    edges: Vec<Edge>,
    out_adj: AdjLists,
    in_adj: AdjLists,
}

impl Graph {
    /// Builds a graph and checks the kind invariants.
    pub fn new(kind: GraphKind, n: usize, edges: Vec<(VertexId, VertexId)>) -> Result<Self> {
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::domain(format!(
                    "edge {i} ({u}, {v}) has an endpoint outside 0..{n}"
                )));
            }
        }
        let edges: Vec<Edge> = edges
            .into_iter()
            .map(|(tail, head)| Edge { tail, head })
            .collect();

        let mut outs = Vec::with_capacity(edges.len() * 2);
        let mut ins = Vec::with_capacity(edges.len());
        for (id, e) in edges.iter().enumerate() {
            outs.push((e.tail, Adj { vertex: e.head, edge: id }));
            match kind {
                GraphKind::Undirected => outs.push((e.head, Adj { vertex: e.tail, edge: id })),
                _ => ins.push((e.head, Adj { vertex: e.tail, edge: id })),
            }
        }
        let g = Graph {
            n,
            kind,
            out_adj: AdjLists::build(n, outs),
            in_adj: AdjLists::build(n, ins),
            edges,
        };
        if kind == GraphKind::Eulerian {
            if let Some(v) = g.first_unbalanced_vertex() {
                return Err(Error::KindViolation(format!(
                    "vertex {v} has indegree {} and outdegree {}",
                    g.in_degree(v),
                    g.out_degree(v)
                )));
            }
        }
        Ok(g)
    }

    /// Same edges, different kind label. Used to treat an Eulerian graph as
    /// plain directed input and the like.
    pub fn with_kind(&self, kind: GraphKind) -> Result<Self> {
        Graph::new(kind, self.n, self.edges.iter().map(|e| (e.tail, e.head)).collect())
    }

    fn first_unbalanced_vertex(&self) -> Option<VertexId> {
        (0..self.n).find(|&v| self.in_degree(v) != self.out_degree(v))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, e: EdgeId) -> Edge {
        self.edges[e]
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::domain(format!("vertex {v} out of range 0..{}", self.n)))
        }
    }

    pub fn check_edge(&self, e: EdgeId) -> Result<()> {
        if e < self.edges.len() {
            Ok(())
        } else {
            Err(Error::domain(format!("edge {e} out of range 0..{}", self.edges.len())))
        }
    }

    /// Outgoing entries of `v`; for undirected graphs, all incident edges.
    #[inline]
    pub fn out_adj(&self, v: VertexId) -> &[Adj] {
        self.out_adj.list(v)
    }

    /// Incoming entries of `v`. Empty for undirected graphs.
    #[inline]
    pub fn in_adj(&self, v: VertexId) -> &[Adj] {
        self.in_adj.list(v)
    }

    #[inline]
    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_adj.offsets[v + 1] - self.out_adj.offsets[v]
    }

    /// For undirected graphs this is the degree (self-loops count twice).
    #[inline]
    pub fn in_degree(&self, v: VertexId) -> usize {
        match self.kind {
            GraphKind::Undirected => self.out_degree(v),
            _ => self.in_adj.offsets[v + 1] - self.in_adj.offsets[v],
        }
    }

    /// The `i`-th out-neighbor in canonical order, `None` past the end.
    pub fn out_neighbor(&self, v: VertexId, i: usize) -> Result<Option<Adj>> {
        self.check_vertex(v)?;
        Ok(self.out_adj(v).get(i).copied())
    }

    pub fn in_neighbor(&self, v: VertexId, i: usize) -> Result<Option<Adj>> {
        self.check_vertex(v)?;
        let list = match self.kind {
            GraphKind::Undirected => self.out_adj(v),
            _ => self.in_adj(v),
        };
        Ok(list.get(i).copied())
    }

    /// Smallest edge id joining `u` to `v` (either direction when undirected).
    pub fn is_edge(&self, u: VertexId, v: VertexId) -> Result<Option<EdgeId>> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        Ok(self.edge_between(u, v))
    }

    /// Unchecked variant of [`Graph::is_edge`] for inner loops.
    #[inline]
    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        let list = self.out_adj(u);
        let pos = list.partition_point(|a| a.vertex < v);
        list.get(pos).filter(|a| a.vertex == v).map(|a| a.edge)
    }

    /// Degree seen by an undirected-ized walk: all incident edges, with
    /// Eulerian graphs contributing both their out- and in-lists.
    #[inline]
    pub fn walk_degree(&self, v: VertexId) -> usize {
        match self.kind {
            GraphKind::Undirected => self.out_degree(v),
            _ => self.out_degree(v) + self.in_degree(v),
        }
    }

    /// `i`-th entry of the undirected-ized incidence list of `v`.
    #[inline]
    pub fn walk_entry(&self, v: VertexId, i: usize) -> Adj {
        let out = self.out_adj(v);
        if i < out.len() {
            out[i]
        } else {
            self.in_adj(v)[i - out.len()]
        }
    }

    /// Canonical text form; see [`load_graph`].
    pub fn to_text(&self) -> String {
        let mut s = format!("graph {} {} {}\n", self.kind, self.n, self.edges.len());
        for e in &self.edges {
            s.push_str(&format!("{} {}\n", e.tail, e.head));
        }
        s
    }
}

/// A walk through the graph, given by vertices and the edge ids between them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
}

impl Path {
    pub fn single(v: VertexId) -> Self {
        Path {
            vertices: vec![v],
            edges: Vec::new(),
        }
    }

    pub fn push(&mut self, edge: EdgeId, v: VertexId) {
        self.edges.push(edge);
        self.vertices.push(v);
    }

    pub fn start(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn end(&self) -> VertexId {
        *self.vertices.last().expect("path has at least one vertex")
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Space separated vertex ids, no trailing newline.
    pub fn vertex_line(&self) -> String {
        join(&self.vertices)
    }

    pub fn edge_line(&self) -> String {
        join(&self.edges)
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.vertex_line())
    }
}

/// Reads the text format:
///
/// ```text
/// # comment
/// graph <directed|undirected|eulerian> <n> <m>
/// u v
/// ...            (exactly m edge lines, 0-indexed)
/// ```
///
/// Blank lines and `#` comments are skipped anywhere.
pub fn load_graph<R: BufRead>(reader: R) -> Result<Graph> {
    let mut header: Option<(GraphKind, usize, usize, usize)> = None;
    let mut edges = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match header {
            None => {
                if fields.len() != 4 || fields[0] != "graph" {
                    return Err(parse_err(format!(
                        "expected `graph <kind> <n> <m>`, found {trimmed:?}"
                    )));
                }
                let kind: GraphKind = fields[1]
                    .parse()
                    .map_err(|_| parse_err(format!("unknown kind {:?}", fields[1])))?;
                let n = parse_num(fields[2]).map_err(&parse_err)?;
                let m = parse_num(fields[3]).map_err(&parse_err)?;
                header = Some((kind, n, m, lineno));
            }
            Some((_, n, m, _)) => {
                if edges.len() == m {
                    return Err(parse_err(format!("more than {m} edge lines")));
                }
                if fields.len() != 2 {
                    return Err(parse_err(format!("expected `u v`, found {trimmed:?}")));
                }
                let u = parse_num(fields[0]).map_err(&parse_err)?;
                let v = parse_num(fields[1]).map_err(&parse_err)?;
                if u >= n || v >= n {
                    return Err(parse_err(format!("vertex id out of range 0..{n}")));
                }
                edges.push((u, v));
            }
        }
    }

    let (kind, n, m, hline) = header.ok_or(Error::Parse {
        line: 0,
        message: "missing header".into(),
    })?;
    if edges.len() != m {
        return Err(Error::Parse {
            line: hline,
            message: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    Graph::new(kind, n, edges)
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    load_graph(text.as_bytes())
}

fn parse_num(s: &str) -> std::result::Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("invalid non-negative integer {s:?}"))
}
