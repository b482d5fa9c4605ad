//! Brute-force ground truth.
//!
//! Nothing in here touches the walk engine, the canonical adjacency index
//! or the solvers' permutation code: every oracle rebuilds what it needs
//! from the raw edge list, so an agreement between an oracle and the code
//! under test means something.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, GraphKind, Path, VertexId};
use crate::ratio::Rational;

/// Limits on exact computations. Exceeding one is an error, never a
/// silent approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct OracleBudget {
    pub max_vertices: usize,
    pub max_edges: usize,
    pub max_walk_len: usize,
    pub max_paths: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_vertices: 4096,
            max_edges: 65_536,
            max_walk_len: 4096,
            max_paths: 100_000,
        }
    }
}

impl OracleBudget {
    /// Reads overrides from `PDLOG_BUDGET`, e.g.
    /// `vertices=100,edges=1000,len=64,paths=5000`.
    pub fn from_env() -> Result<Self> {
        match std::env::var("PDLOG_BUDGET") {
            Ok(spec) => Self::parse(&spec),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let mut b = Self::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::domain(format!("bad budget entry {part:?}")))?;
            let val: usize = val
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad budget value {part:?}")))?;
            if val == 0 {
                return Err(Error::domain("budget values must be positive"));
            }
            match key.trim() {
                "vertices" => b.max_vertices = val,
                "edges" => b.max_edges = val,
                "len" => b.max_walk_len = val,
                "paths" => b.max_paths = val,
                other => return Err(Error::domain(format!("unknown budget key {other:?}"))),
            }
        }
        Ok(b)
    }

    pub fn check_graph(&self, g: &Graph) -> Result<()> {
        if g.n() > self.max_vertices {
            return Err(Error::budget("oracle vertices", g.n(), self.max_vertices));
        }
        if g.m() > self.max_edges {
            return Err(Error::budget("oracle edges", g.m(), self.max_edges));
        }
        Ok(())
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len > self.max_walk_len {
            return Err(Error::budget("oracle walk length", len, self.max_walk_len));
        }
        Ok(())
    }
}

/// What is removed from the graph before an oracle query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Residual {
    /// `(above, a, b)`: keep only `a`, `b` and vertices with id `> above`.
    pub vertex_cut: Option<(usize, VertexId, VertexId)>,
    /// Remove the edges of the first `k` permutation cycles.
    pub deleted_cycles: usize,
}

/// Out-lists built straight from the edge list. Undirected edges go both
/// ways (self-loops twice), matching the walk semantics.
fn raw_out_lists(g: &Graph) -> Vec<Vec<(VertexId, EdgeId)>> {
    let mut lists = vec![Vec::new(); g.n()];
    for (id, e) in g.edges().iter().enumerate() {
        lists[e.tail].push((e.head, id));
        if g.kind() == GraphKind::Undirected {
            lists[e.head].push((e.tail, id));
        }
    }
    lists
}

/// In-edge/out-edge rank pairing computed by sorting the raw edge list.
pub fn permutation_table(g: &Graph) -> Result<Vec<EdgeId>> {
    if g.kind() != GraphKind::Eulerian {
        return Err(Error::KindViolation("edge pairing needs an eulerian graph".into()));
    }
    let mut ins: Vec<Vec<(VertexId, EdgeId)>> = vec![Vec::new(); g.n()];
    let mut outs: Vec<Vec<(VertexId, EdgeId)>> = vec![Vec::new(); g.n()];
    for (id, e) in g.edges().iter().enumerate() {
        ins[e.head].push((e.tail, id));
        outs[e.tail].push((e.head, id));
    }
    let mut f = vec![usize::MAX; g.m()];
    for v in 0..g.n() {
        ins[v].sort();
        outs[v].sort();
        for (i, &(_, e_in)) in ins[v].iter().enumerate() {
            f[e_in] = outs[v][i].1;
        }
    }
    Ok(f)
}

/// For each edge, the smallest edge id on its permutation cycle.
pub fn orbit_minima(g: &Graph) -> Result<Vec<EdgeId>> {
    let f = permutation_table(g)?;
    let mut min = vec![usize::MAX; g.m()];
    for start in 0..g.m() {
        if min[start] != usize::MAX {
            continue;
        }
        let mut lo = start;
        let mut e = f[start];
        while e != start {
            lo = lo.min(e);
            e = f[e];
        }
        let mut e = start;
        loop {
            min[e] = lo;
            e = f[e];
            if e == start {
                break;
            }
        }
    }
    Ok(min)
}

/// Exact restricted connectivity by BFS.
///
/// Undirected and Eulerian graphs are searched ignoring direction; pass
/// `directed = true` for plain reachability along edge directions.
pub fn bfs_connected(
    g: &Graph,
    a: VertexId,
    b: VertexId,
    residual: &Residual,
    directed: bool,
    budget: &OracleBudget,
) -> Result<bool> {
    budget.check_graph(g)?;
    if a >= g.n() || b >= g.n() {
        return Err(Error::domain("vertex out of range"));
    }
    let kept = |v: VertexId| match residual.vertex_cut {
        None => true,
        Some((above, x, y)) => v == x || v == y || v > above,
    };
    if !kept(a) || !kept(b) {
        return Err(Error::domain("query endpoint removed by the residual"));
    }
    if a == b {
        return Ok(true);
    }
    let removed_edge: Vec<bool> = if residual.deleted_cycles > 0 {
        orbit_minima(g)?
            .into_iter()
            .map(|lo| lo < residual.deleted_cycles)
            .collect()
    } else {
        vec![false; g.m()]
    };
    let mut adj: Vec<Vec<VertexId>> = vec![Vec::new(); g.n()];
    for (id, e) in g.edges().iter().enumerate() {
        if removed_edge[id] || !kept(e.tail) || !kept(e.head) {
            continue;
        }
        adj[e.tail].push(e.head);
        if !directed || g.kind() == GraphKind::Undirected {
            adj[e.head].push(e.tail);
        }
    }
    let mut seen = vec![false; g.n()];
    let mut queue = VecDeque::from([a]);
    seen[a] = true;
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if w == b {
                return Ok(true);
            }
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    Ok(false)
}

/// All vertices reachable from `a` (direction-respecting when `directed`).
pub fn reachable_set(g: &Graph, a: VertexId, directed: bool) -> Vec<bool> {
    let mut adj: Vec<Vec<VertexId>> = vec![Vec::new(); g.n()];
    for e in g.edges() {
        adj[e.tail].push(e.head);
        if !directed || g.kind() == GraphKind::Undirected {
            adj[e.head].push(e.tail);
        }
    }
    let mut seen = vec![false; g.n()];
    let mut stack = vec![a];
    seen[a] = true;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Single forward pass over the path: starts at `s`, ends at `t`, and each
/// step uses the named edge in an allowed direction.
pub fn validate_path(g: &Graph, p: &Path, s: VertexId, t: VertexId) -> bool {
    if p.vertices.is_empty() || p.edges.len() + 1 != p.vertices.len() {
        return false;
    }
    if p.vertices[0] != s || *p.vertices.last().unwrap() != t {
        return false;
    }
    let edges = g.edges();
    for (i, &eid) in p.edges.iter().enumerate() {
        let (u, v) = (p.vertices[i], p.vertices[i + 1]);
        let Some(e) = edges.get(eid) else {
            return false;
        };
        let forward = e.tail == u && e.head == v;
        let backward = e.tail == v && e.head == u;
        let ok = match g.kind() {
            GraphKind::Undirected => forward || backward,
            _ => forward,
        };
        if !ok || u >= g.n() || v >= g.n() {
            return false;
        }
    }
    true
}

/// Every walk from `s` that stops on its first arrival at `t`, with at most
/// `max_len` edges, in depth-first order over raw edge ids.
pub fn enumerate_st_paths(
    g: &Graph,
    s: VertexId,
    t: VertexId,
    max_len: usize,
    budget: &OracleBudget,
) -> Result<Vec<Path>> {
    budget.check_graph(g)?;
    budget.check_len(max_len)?;
    if s >= g.n() || t >= g.n() {
        return Err(Error::domain("vertex out of range"));
    }
    let lists = raw_out_lists(g);
    let mut out = Vec::new();
    let mut current = Path::single(s);
    fn dfs(
        lists: &[Vec<(VertexId, EdgeId)>],
        t: VertexId,
        max_len: usize,
        budget: &OracleBudget,
        current: &mut Path,
        out: &mut Vec<Path>,
    ) -> Result<()> {
        let u = current.end();
        if u == t {
            if out.len() == budget.max_paths {
                return Err(Error::budget("enumerated paths", out.len() + 1, budget.max_paths));
            }
            out.push(current.clone());
            return Ok(());
        }
        if current.len() == max_len {
            return Ok(());
        }
        let mut next = lists[u].clone();
        next.sort_by_key(|&(v, e)| (e, v));
        for (v, e) in next {
            current.push(e, v);
            dfs(lists, t, max_len, budget, current, out)?;
            current.vertices.pop();
            current.edges.pop();
        }
        Ok(())
    }
    dfs(&lists, t, max_len, budget, &mut current, &mut out)?;
    Ok(out)
}

/// `table[i][v]` is the exact probability that an `i`-step walk from `v`
/// reaches `t` (absorbing), computed backwards over all sources at once.
pub fn hit_probability_table(
    g: &Graph,
    t: VertexId,
    k: usize,
    budget: &OracleBudget,
) -> Result<Vec<Vec<Rational>>> {
    budget.check_graph(g)?;
    budget.check_len(k)?;
    if t >= g.n() {
        return Err(Error::domain("vertex out of range"));
    }
    let lists = raw_out_lists(g);
    let one = Rational::one();
    let zero = Rational::zero();
    let mut table = Vec::with_capacity(k + 1);
    let first: Vec<Rational> = (0..g.n())
        .map(|v| if v == t { one.clone() } else { zero.clone() })
        .collect();
    table.push(first);
    for i in 1..=k {
        let prev = &table[i - 1];
        let row: Vec<Rational> = (0..g.n())
            .map(|v| {
                if v == t {
                    return one.clone();
                }
                let out = &lists[v];
                if out.is_empty() {
                    return prev[v].clone();
                }
                let sum = out
                    .iter()
                    .fold(Rational::zero(), |acc, &(w, _)| acc + &prev[w]);
                sum / Rational::from_integer(BigInt::from(out.len()))
            })
            .collect();
        table.push(row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind::*;
    use crate::ratio::from_u64s;

    fn c4() -> Graph {
        Graph::new(Undirected, 4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    fn path3() -> Graph {
        Graph::new(Undirected, 3, vec![(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn bfs_on_restricted_c4() {
        let b = OracleBudget::default();
        let cut = Residual {
            vertex_cut: Some((1, 0, 2)),
            deleted_cycles: 0,
        };
        assert!(bfs_connected(&c4(), 0, 2, &cut, false, &b).unwrap());
        // Removing both 1 and 3 separates 0 from 2.
        let cut = Residual {
            vertex_cut: Some((3, 0, 2)),
            deleted_cycles: 0,
        };
        assert!(!bfs_connected(&c4(), 0, 2, &cut, false, &b).unwrap());
    }

    #[test]
    fn bfs_trivial_cases() {
        let b = OracleBudget::default();
        let two = Graph::new(Undirected, 2, vec![]).unwrap();
        assert!(!bfs_connected(&two, 0, 1, &Residual::default(), false, &b).unwrap());
        assert!(bfs_connected(&two, 1, 1, &Residual::default(), false, &b).unwrap());
    }

    #[test]
    fn bfs_respects_budget() {
        let b = OracleBudget {
            max_vertices: 2,
            ..OracleBudget::default()
        };
        let err = bfs_connected(&c4(), 0, 1, &Residual::default(), false, &b).unwrap_err();
        assert_eq!(err.name(), "BudgetExceeded");
    }

    #[test]
    fn validate_path_cases() {
        let g = path3();
        let good = Path {
            vertices: vec![0, 1, 2],
            edges: vec![0, 1],
        };
        assert!(validate_path(&g, &good, 0, 2));
        let skip = Path {
            vertices: vec![0, 2],
            edges: vec![1],
        };
        assert!(!validate_path(&g, &skip, 0, 2));
        let c4_out = Path {
            vertices: vec![0, 3, 2],
            edges: vec![3, 2],
        };
        assert!(validate_path(&c4(), &c4_out, 0, 2));
        let d = Graph::new(Directed, 2, vec![(0, 1)]).unwrap();
        let back = Path {
            vertices: vec![1, 0],
            edges: vec![0],
        };
        assert!(!validate_path(&d, &back, 1, 0));
    }

    #[test]
    fn enumerates_diamond() {
        // s=0, a=1, b=2, t=3
        let g = Graph::new(Directed, 4, vec![(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let paths = enumerate_st_paths(&g, 0, 3, 2, &OracleBudget::default()).unwrap();
        let vs: Vec<Vec<usize>> = paths.iter().map(|p| p.vertices.clone()).collect();
        assert_eq!(vs, vec![vec![0, 1, 3], vec![0, 2, 3]]);
        let only = enumerate_st_paths(&g, 2, 2, 0, &OracleBudget::default()).unwrap();
        assert_eq!(only, vec![Path::single(2)]);
        let none = enumerate_st_paths(&g, 3, 0, 5, &OracleBudget::default()).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn hit_table_small_graph() {
        // 0->1, 0->2, 1->2, 2->2
        let g = Graph::new(Directed, 3, vec![(0, 1), (0, 2), (1, 2), (2, 2)]).unwrap();
        let table = hit_probability_table(&g, 2, 2, &OracleBudget::default()).unwrap();
        assert_eq!(table[1][0], from_u64s(1, 2));
        assert_eq!(table[2][0], from_u64s(1, 1));
        assert_eq!(table[0][1], from_u64s(0, 1));
    }

    #[test]
    fn orbit_minima_two_disjoint_cycles() {
        let g = Graph::new(Eulerian, 4, vec![(0, 1), (1, 0), (2, 3), (3, 2)]).unwrap();
        assert_eq!(orbit_minima(&g).unwrap(), vec![0, 0, 2, 2]);
    }
}
