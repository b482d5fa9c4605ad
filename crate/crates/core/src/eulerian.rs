//! Pseudo-deterministic s-t paths in Eulerian digraphs.
//!
//! Each vertex pairs its `i`-th in-edge with its `i`-th out-edge (both in
//! canonical order). Following the pairing from edge `e_k` traces a closed
//! walk `C_k`, and the closed walks partition the edges. The solver deletes
//! `C_1, C_2, ..` in turn and steers by the first cycle whose removal cuts
//! the current vertex off from its destination. Deleting closed walks keeps
//! the graph Eulerian, so reachability stays equal to undirected
//! connectivity and the walk test applies throughout.

use std::cell::Cell;
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::graph::{Adj, EdgeId, Graph, GraphKind, Path, VertexId};
use crate::meter::WorkspaceMeter;
use crate::rng::{substream, Seed, Stream};
use crate::undirected::compare_sequences;
use crate::walk::{ConnectivityConfig, ConnectivityTester, CycleMembership, Restriction, WalkCounters};

/// The in-edge to out-edge pairing, evaluated on demand.
#[derive(Debug, Clone, Copy)]
pub struct EdgePermutation<'g> {
    g: &'g Graph,
}

impl<'g> EdgePermutation<'g> {
    pub fn new(g: &'g Graph) -> Result<Self> {
        if g.kind() != GraphKind::Eulerian {
            return Err(Error::KindViolation("edge pairing needs an eulerian graph".into()));
        }
        Ok(EdgePermutation { g })
    }

    pub fn graph(&self) -> &'g Graph {
        self.g
    }

    /// The out-edge of `head(e)` whose rank equals `e`'s rank among the
    /// in-edges of `head(e)`.
    #[inline]
    pub fn next(&self, e: EdgeId) -> EdgeId {
        let edge = self.g.edge(e);
        let ins = self.g.in_adj(edge.head);
        let rank = ins.partition_point(|a| *a < Adj { vertex: edge.tail, edge: e });
        self.g.out_adj(edge.head)[rank].edge
    }

    /// Edges of the cycle through `start`, beginning with `start`.
    pub fn orbit(&self, start: EdgeId) -> Orbit<'g> {
        Orbit {
            perm: *self,
            start,
            next: Some(start),
        }
    }

    pub fn tail(&self, e: EdgeId) -> VertexId {
        self.g.edge(e).tail
    }
}

pub struct Orbit<'g> {
    perm: EdgePermutation<'g>,
    start: EdgeId,
    next: Option<EdgeId>,
}

impl Iterator for Orbit<'_> {
    type Item = EdgeId;

    fn next(&mut self) -> Option<EdgeId> {
        let e = self.next?;
        let f = self.perm.next(e);
        self.next = (f != self.start).then_some(f);
        Some(e)
    }
}

/// `f(e)` with the kind check.
pub fn next_edge(g: &Graph, e: EdgeId) -> Result<EdgeId> {
    let perm = EdgePermutation::new(g)?;
    g.check_edge(e)?;
    Ok(perm.next(e))
}

/// Whether `e` lies on one of the cycles `C_1..C_k` (cycle `C_j` is the
/// orbit of edge `j - 1`).
pub fn edge_in_deleted(g: &Graph, e: EdgeId, k: usize) -> Result<bool> {
    let perm = EdgePermutation::new(g)?;
    g.check_edge(e)?;
    Ok(OrbitScan::new(perm).in_prefix(e, k))
}

/// Membership by walking the orbit of the queried edge: `e` is deleted
/// iff its own orbit holds an edge id below `k`. Two edge registers.
pub struct OrbitScan<'g> {
    perm: EdgePermutation<'g>,
    steps: Cell<u64>,
}

impl<'g> OrbitScan<'g> {
    pub fn new(perm: EdgePermutation<'g>) -> Self {
        OrbitScan {
            perm,
            steps: Cell::new(0),
        }
    }

    /// Pairing evaluations so far.
    pub fn steps(&self) -> u64 {
        self.steps.get()
    }
}

impl CycleMembership for OrbitScan<'_> {
    fn in_prefix(&self, e: EdgeId, k: usize) -> bool {
        let mut x = e;
        let mut steps = 0;
        let found = loop {
            if x < k {
                break true;
            }
            x = self.perm.next(x);
            steps += 1;
            if x == e {
                break false;
            }
        };
        self.steps.set(self.steps.get() + steps);
        found
    }

    fn registers(&self) -> Vec<u64> {
        let m = self.perm.graph().m() as u64;
        vec![m, m]
    }
}

/// Membership from a precomputed table of orbit minima: constant time per
/// query, `m` registers of workspace.
pub struct OrbitTable {
    minima: Vec<EdgeId>,
}

impl OrbitTable {
    pub fn new(perm: EdgePermutation<'_>) -> Self {
        let m = perm.graph().m();
        let mut minima = vec![usize::MAX; m];
        for start in 0..m {
            if minima[start] != usize::MAX {
                continue;
            }
            // Orbits are scanned from their smallest edge first.
            for e in perm.orbit(start) {
                minima[e] = start;
            }
        }
        OrbitTable { minima }
    }
}

impl CycleMembership for OrbitTable {
    #[inline]
    fn in_prefix(&self, e: EdgeId, k: usize) -> bool {
        self.minima[e] < k
    }

    fn registers(&self) -> Vec<u64> {
        vec![self.minima.len() as u64; self.minima.len()]
    }
}

/// Table answers plus the exact number of pairing evaluations
/// [`OrbitScan`] would spend on the same query, found by binary lifting
/// over each orbit's edge ids.
pub struct OrbitCostTable {
    minima: OrbitTable,
    /// Orbit and position of every edge.
    place: Vec<(usize, usize)>,
    /// Per orbit: `lift[j][i]` is the least id among positions
    /// `i..i + 2^j` of the orbit written out twice.
    lifts: Vec<Vec<Vec<EdgeId>>>,
    steps: Cell<u64>,
}

impl OrbitCostTable {
    pub fn new(perm: EdgePermutation<'_>) -> Self {
        let m = perm.graph().m();
        let mut place = vec![(usize::MAX, 0); m];
        let mut lifts = Vec::new();
        for start in 0..m {
            if place[start].0 != usize::MAX {
                continue;
            }
            let ids: Vec<EdgeId> = perm.orbit(start).collect();
            for (pos, &e) in ids.iter().enumerate() {
                place[e] = (lifts.len(), pos);
            }
            let mut level: Vec<EdgeId> = ids.iter().chain(&ids).copied().collect();
            let mut table = vec![level.clone()];
            let doubled = level.len();
            let mut width = 1;
            while 2 * width <= doubled {
                level = (0..level.len() - width)
                    .map(|i| level[i].min(level[i + width]))
                    .collect();
                table.push(level.clone());
                width *= 2;
            }
            lifts.push(table);
        }
        OrbitCostTable {
            minima: OrbitTable::new(perm),
            place,
            lifts,
            steps: Cell::new(0),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps.get()
    }

    /// Pairing evaluations of the streaming scan for this query.
    fn scan_cost(&self, e: EdgeId, k: usize) -> u64 {
        if e < k {
            return 0;
        }
        let (orbit, pos) = self.place[e];
        let table = &self.lifts[orbit];
        let len = table[0].len() / 2;
        if !self.minima.in_prefix(e, k) {
            return len as u64;
        }
        // First position after `pos` holding an id below k.
        let mut p = pos + 1;
        for j in (0..table.len()).rev() {
            if p + (1 << j) <= pos + len && table[j][p] >= k {
                p += 1 << j;
            }
        }
        (p - pos) as u64
    }
}

impl CycleMembership for OrbitCostTable {
    #[inline]
    fn in_prefix(&self, e: EdgeId, k: usize) -> bool {
        self.steps.set(self.steps.get() + self.scan_cost(e, k));
        self.minima.in_prefix(e, k)
    }

    fn registers(&self) -> Vec<u64> {
        self.minima.registers()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    /// Orbit walk per query, logarithmic workspace.
    Streaming,
    /// Orbit-minimum table, linear workspace, much faster.
    #[default]
    Cached,
    /// Cached answers, charged the streaming scan's cost in the counters.
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CycleMove {
    pub from: VertexId,
    pub to: VertexId,
    /// 1-based cycle indices at which the current vertex got cut off.
    pub sequence: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct EulerianTrace {
    pub moves: Vec<CycleMove>,
    pub counters: WalkCounters,
    /// Pairing evaluations spent on membership queries (streaming mode),
    /// or what they would have been (simulated mode).
    pub membership_scans: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EulerianRun {
    pub path: Path,
    pub trace: EulerianTrace,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EulerianOptions {
    pub connectivity: ConnectivityConfig,
    pub membership: Membership,
}

pub fn find_path_eulerian(g: &Graph, s: VertexId, t: VertexId, seed: Seed) -> Result<EulerianRun> {
    let mut walks = substream(seed, crate::swfp::WALKS_LABEL);
    find_path_eulerian_with(g, s, t, &EulerianOptions::default(), &mut walks, &WorkspaceMeter::new())
}

pub fn find_path_eulerian_with(
    g: &Graph,
    s: VertexId,
    t: VertexId,
    opts: &EulerianOptions,
    walks: &mut Stream,
    meter: &WorkspaceMeter,
) -> Result<EulerianRun> {
    let perm = EdgePermutation::new(g)?;
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    let scan = OrbitScan::new(perm);
    let table = (opts.membership == Membership::Cached).then(|| OrbitTable::new(perm));
    let costed = (opts.membership == Membership::Simulated).then(|| OrbitCostTable::new(perm));
    let index: &dyn CycleMembership = match (&table, &costed) {
        (Some(table), _) => table,
        (_, Some(costed)) => costed,
        _ => &scan,
    };
    let mut solver = Solver {
        g,
        perm,
        index,
        tester: ConnectivityTester::new(opts.connectivity),
        walks,
        meter,
    };
    let result = solver.run(s, t);
    let counters = solver.tester.counters;
    let (path, mut trace) = result?;
    trace.counters = counters;
    trace.membership_scans = scan.steps() + costed.as_ref().map_or(0, OrbitCostTable::steps);
    Ok(EulerianRun { path, trace })
}

struct Solver<'a, 'g> {
    g: &'g Graph,
    perm: EdgePermutation<'g>,
    index: &'a dyn CycleMembership,
    tester: ConnectivityTester,
    walks: &'a mut Stream,
    meter: &'a WorkspaceMeter,
}

impl Solver<'_, '_> {
    /// Connected after deleting `C_1..C_k`.
    fn connected(&mut self, a: VertexId, b: VertexId, k: usize) -> Result<bool> {
        let r = Restriction::cycles(self.index, k);
        self.tester.test(self.g, a, b, &r, self.walks, self.meter)
    }

    /// Whether position `pos` of the orbit from `start` is the first
    /// position with its tail. Rescans the prefix: constant workspace.
    fn first_occurrence(&self, start: EdgeId, pos: usize, tail: VertexId) -> bool {
        self.perm
            .orbit(start)
            .take(pos)
            .all(|e| self.perm.tail(e) != tail)
    }

    /// First vertex of `C_k` in orbit order (first occurrences only) that
    /// satisfies `pred`.
    fn first_on_cycle(
        &mut self,
        k: usize,
        mut pred: impl FnMut(&mut Self, VertexId) -> Result<bool>,
    ) -> Result<Option<VertexId>> {
        let start = k - 1;
        let m = self.g.m() as u64;
        let _scan = self.meter.scope(&[m, m, self.g.n() as u64]);
        let len = self.perm.orbit(start).count();
        for pos in 0..len {
            let e = self.perm.orbit(start).nth(pos).expect("position inside orbit");
            let v = self.perm.tail(e);
            if self.first_occurrence(start, pos, v) && pred(self, v)? {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    fn on_cycle(&self, k: usize, v: VertexId) -> bool {
        self.perm.orbit(k - 1).any(|e| self.perm.tail(e) == v)
    }

    /// Walks `C_k` forward from the first occurrence of `from` until it
    /// first arrives at `to`.
    fn cycle_segment(&self, k: usize, from: VertexId, to: VertexId, path: &mut Path) {
        let start = k - 1;
        let len = self.perm.orbit(start).count();
        let pos = self
            .perm
            .orbit(start)
            .position(|e| self.perm.tail(e) == from)
            .expect("current vertex lies on the cycle");
        let mut e = self.perm.orbit(start).nth(pos).expect("position inside orbit");
        for _ in 0..len {
            let head = self.g.edge(e).head;
            path.push(e, head);
            if head == to {
                return;
            }
            e = self.perm.next(e);
        }
        unreachable!("target vertex lies on the cycle");
    }

    fn run(&mut self, s: VertexId, t: VertexId) -> Result<(Path, EulerianTrace)> {
        let (n, m) = (self.g.n(), self.g.m());
        let mut path = Path::single(s);
        let mut trace = EulerianTrace::default();
        if !self.connected(s, t, 0)? {
            return Err(Error::NotConnected { s, t });
        }
        let _state = self.meter.scope(&[n as u64, n as u64, m as u64, n as u64 + 1]);
        let mut visited = vec![false; n];
        visited[s] = true;
        let mut v_cur = s;
        let mut previous: Option<Vec<usize>> = None;
        let mut passes = 0;
        while v_cur != t {
            passes += 1;
            if passes > n + 1 {
                return Err(Error::NonProgress(format!("more than {} passes", n + 1)));
            }
            let mut v_dest = t;
            let mut seq = Vec::new();
            let mut next = None;
            for k in 1..=m {
                if self.connected(v_cur, v_dest, k)? {
                    continue;
                }
                seq.push(k);
                if self.on_cycle(k, v_cur) {
                    let dest = v_dest;
                    let v = self.first_on_cycle(k, |me, v| me.connected(v, dest, k))?;
                    let Some(v) = v else {
                        return Err(Error::NonProgress(format!(
                            "no vertex of cycle {k} reaches {dest}"
                        )));
                    };
                    if v == v_cur {
                        return Err(Error::NonProgress(format!(
                            "cycle {k} offers no way forward from {v_cur}"
                        )));
                    }
                    self.cycle_segment(k, v_cur, v, &mut path);
                    next = Some(v);
                    break;
                }
                let cur = v_cur;
                let v = self.first_on_cycle(k, |me, v| me.connected(cur, v, k))?;
                let Some(v) = v else {
                    return Err(Error::NonProgress(format!(
                        "no vertex of cycle {k} reachable from {v_cur}"
                    )));
                };
                v_dest = v;
            }
            let Some(v) = next else {
                return Err(Error::NonProgress(format!(
                    "no move from {v_cur} after a full pass (cycles {seq:?})"
                )));
            };
            if let Some(prev) = &previous {
                if compare_sequences(&seq, prev) != Ordering::Greater {
                    return Err(Error::OrderViolation(format!(
                        "cycles {seq:?} after {prev:?} at vertex {v_cur}"
                    )));
                }
            }
            if visited[v] {
                return Err(Error::NonProgress(format!("vertex {v} visited twice")));
            }
            visited[v] = true;
            trace.moves.push(CycleMove {
                from: v_cur,
                to: v,
                sequence: seq.clone(),
            });
            previous = Some(seq);
            v_cur = v;
        }
        Ok((path, trace))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind::Eulerian;
    use crate::oracles::{permutation_table, validate_path};

    fn triangle() -> Graph {
        Graph::new(Eulerian, 3, vec![(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    fn figure_eight() -> Graph {
        Graph::new(Eulerian, 5, vec![(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]).unwrap()
    }

    #[test]
    fn pairing_on_a_triangle() {
        let g = triangle();
        assert_eq!(next_edge(&g, 0).unwrap(), 1);
        assert_eq!(next_edge(&g, 1).unwrap(), 2);
        assert_eq!(next_edge(&g, 2).unwrap(), 0);
        let perm = EdgePermutation::new(&g).unwrap();
        assert_eq!(perm.orbit(1).collect::<Vec<_>>(), vec![1, 2, 0]);
    }

    #[test]
    fn lone_self_loop_maps_to_itself() {
        let g = Graph::new(Eulerian, 2, vec![(1, 1)]).unwrap();
        assert_eq!(next_edge(&g, 0).unwrap(), 0);
    }

    #[test]
    fn pairing_by_rank() {
        // Vertex 0: in from 1 (edge 0) and 2 (edge 1), out to 1 (edge 2) and 3 (edge 3).
        let g = Graph::new(Eulerian, 4, vec![(1, 0), (2, 0), (0, 1), (0, 3), (3, 2)]).unwrap();
        assert_eq!(next_edge(&g, 0).unwrap(), 2);
        assert_eq!(next_edge(&g, 1).unwrap(), 3);
    }

    #[test]
    fn rejects_plain_directed() {
        let g = Graph::new(GraphKind::Directed, 2, vec![(0, 1)]).unwrap();
        assert_eq!(next_edge(&g, 0).unwrap_err().name(), "KindViolation");
        assert_eq!(find_path_eulerian(&g, 0, 1, Seed(1)).unwrap_err().name(), "KindViolation");
    }

    #[test]
    fn deleted_prefix_examples() {
        let g = triangle();
        for e in 0..3 {
            assert!(edge_in_deleted(&g, e, 1).unwrap());
        }
        let two = Graph::new(Eulerian, 4, vec![(0, 1), (1, 0), (2, 3), (3, 2)]).unwrap();
        assert!(edge_in_deleted(&two, 0, 1).unwrap());
        assert!(!edge_in_deleted(&two, 2, 1).unwrap());
        assert!(edge_in_deleted(&two, 2, 3).unwrap());
    }

    #[test]
    fn pairing_matches_sorting_oracle() {
        let mut st = substream(Seed(3), "gen");
        for _ in 0..50 {
            let n = 1 + st.below(10) as usize;
            let g = crate::gen::eulerian_cycle_union(n, 3 * n, 4, &mut st).unwrap();
            let table = permutation_table(&g).unwrap();
            for e in 0..g.m() {
                assert_eq!(next_edge(&g, e).unwrap(), table[e]);
            }
        }
    }

    #[test]
    fn small_cycles() {
        let g = Graph::new(Eulerian, 2, vec![(0, 1), (1, 0)]).unwrap();
        assert_eq!(find_path_eulerian(&g, 0, 1, Seed(1)).unwrap().path.vertices, vec![0, 1]);
        assert_eq!(find_path_eulerian(&triangle(), 0, 2, Seed(1)).unwrap().path.vertices, vec![0, 1, 2]);
        assert_eq!(find_path_eulerian(&triangle(), 1, 1, Seed(1)).unwrap().path.vertices, vec![1]);
    }

    #[test]
    fn figure_eight_crosses_the_middle() {
        let g = figure_eight();
        let first = find_path_eulerian(&g, 1, 4, Seed(0)).unwrap();
        assert!(validate_path(&g, &first.path, 1, 4));
        assert!(first.path.vertices.contains(&0));
        for seed in 1..50 {
            let run = find_path_eulerian(&g, 1, 4, Seed(seed)).unwrap();
            assert_eq!(run.path, first.path);
        }
    }

    #[test]
    fn membership_modes_agree() {
        let mut st = substream(Seed(4), "gen");
        for _ in 0..10 {
            let n = 3 + st.below(6) as usize;
            let g = crate::gen::eulerian_connected(n, 2 * n, &mut st).unwrap();
            let s = st.below(n as u64) as usize;
            let t = st.below(n as u64) as usize;
            let seed = Seed(st.take_bits(64));
            let mut runs = Vec::new();
            let mut scans = Vec::new();
            for membership in [Membership::Streaming, Membership::Cached, Membership::Simulated] {
                let opts = EulerianOptions {
                    membership,
                    ..Default::default()
                };
                let mut walks = substream(seed, "walks");
                let run = find_path_eulerian_with(&g, s, t, &opts, &mut walks, &WorkspaceMeter::new()).unwrap();
                assert!(validate_path(&g, &run.path, s, t));
                runs.push(run.path);
                scans.push(run.trace.membership_scans);
            }
            assert_eq!(runs[0], runs[1]);
            assert_eq!(runs[0], runs[2]);
            assert_eq!(scans[0], scans[2]);
            assert_eq!(scans[1], 0);
        }
    }

    #[test]
    fn simulated_cost_matches_scan_per_query() {
        let mut st = substream(Seed(5), "gen");
        for _ in 0..30 {
            let n = 1 + st.below(8) as usize;
            let g = crate::gen::eulerian_cycle_union(n, 3 * n, 5, &mut st).unwrap();
            let perm = EdgePermutation::new(&g).unwrap();
            let costed = OrbitCostTable::new(perm);
            for e in 0..g.m() {
                for k in 0..=g.m() {
                    let scan = OrbitScan::new(perm);
                    let before = costed.steps();
                    assert_eq!(costed.in_prefix(e, k), scan.in_prefix(e, k));
                    assert_eq!(costed.steps() - before, scan.steps(), "edge {e}, k {k}");
                }
            }
        }
    }

    #[test]
    fn disconnected_pair() {
        let g = Graph::new(Eulerian, 4, vec![(0, 1), (1, 0), (2, 3), (3, 2)]).unwrap();
        assert_eq!(find_path_eulerian(&g, 0, 3, Seed(1)).unwrap_err(), Error::NotConnected { s: 0, t: 3 });
    }
}
