//! Pseudo-deterministic s-t paths in undirected graphs.
//!
//! From the current vertex the solver aims at a destination, starting with
//! `t`. For `k = 0, 1, ..` it deletes vertices `0..=k` (except the current
//! vertex and the destination) and asks the walk test whether the two are
//! still connected; the first `k` that separates them becomes the new
//! destination. As soon as the current vertex is adjacent to the
//! destination it moves there. Only the connectivity answers are random,
//! and each is correct with high probability, so the path is the same on
//! almost every run.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphKind, Path, VertexId};
use crate::meter::WorkspaceMeter;
use crate::rng::{substream, Seed, Stream};
use crate::walk::{ConnectivityConfig, ConnectivityTester, Restriction, WalkCounters};

/// Orders index sequences: with equal common prefixes the shorter one is
/// greater, otherwise the first differing entry decides.
pub fn compare_sequences(a: &[usize], b: &[usize]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    b.len().cmp(&a.len())
}

/// The target followed by every vertex that replaced the destination.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct DestinationSequence {
    pub target: VertexId,
    pub entries: Vec<VertexId>,
}

impl DestinationSequence {
    pub fn new(target: VertexId) -> Self {
        DestinationSequence {
            target,
            entries: Vec::new(),
        }
    }

    /// `[t, c1, c2, ..]`.
    pub fn to_vec(&self) -> Vec<VertexId> {
        std::iter::once(self.target).chain(self.entries.iter().copied()).collect()
    }
}

/// Total order on destination sequences that share a target.
pub fn compare_dest_seq(a: &DestinationSequence, b: &DestinationSequence) -> Result<Ordering> {
    if a.target != b.target {
        return Err(Error::domain(format!(
            "destination sequences start at different targets {} and {}",
            a.target, b.target
        )));
    }
    Ok(compare_sequences(&a.entries, &b.entries))
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct MoveRecord {
    /// Vertex the move left.
    pub from: VertexId,
    pub to: VertexId,
    /// Destination sequence of `from` at the time of the move.
    pub sequence: Vec<VertexId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct UndirectedTrace {
    pub moves: Vec<MoveRecord>,
    pub counters: WalkCounters,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedRun {
    pub path: Path,
    pub trace: UndirectedTrace,
}

/// Seeded entry point: walks come from `seed`'s walk stream.
pub fn find_path_undirected(g: &Graph, s: VertexId, t: VertexId, seed: Seed) -> Result<UndirectedRun> {
    let mut walks = substream(seed, crate::swfp::WALKS_LABEL);
    find_path_undirected_with(g, s, t, ConnectivityConfig::default(), &mut walks, &WorkspaceMeter::new())
}

pub fn find_path_undirected_with(
    g: &Graph,
    s: VertexId,
    t: VertexId,
    cfg: ConnectivityConfig,
    walks: &mut Stream,
    meter: &WorkspaceMeter,
) -> Result<UndirectedRun> {
    if g.kind() != GraphKind::Undirected {
        return Err(Error::KindViolation("expected an undirected graph".into()));
    }
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    let n = g.n();
    let mut tester = ConnectivityTester::new(cfg);
    let mut trace = UndirectedTrace::default();
    let mut path = Path::single(s);
    if !tester.test(g, s, t, &Restriction::none(), walks, meter)? {
        return Err(Error::NotConnected { s, t });
    }
    let _state = meter.scope(&[n as u64; 4]);
    let mut visited = vec![false; n];
    visited[s] = true;
    let mut v_cur = s;
    let mut previous: Option<DestinationSequence> = None;
    let mut passes = 0;
    while v_cur != t {
        passes += 1;
        if passes > n {
            return Err(Error::NonProgress(format!("more than {n} passes")));
        }
        let mut v_dest = t;
        let mut seq = DestinationSequence::new(t);
        let mut moved = None;
        for k in 0..n {
            if let Some(e) = g.edge_between(v_cur, v_dest) {
                moved = Some((e, v_dest));
                break;
            }
            let r = Restriction::vertices(k, v_cur, v_dest);
            if tester.test(g, v_cur, v_dest, &r, walks, meter)? {
                continue;
            }
            // Separated: aim at k and check adjacency again right away, so
            // a switch at the last k is not lost.
            v_dest = k;
            seq.entries.push(k);
            if let Some(e) = g.edge_between(v_cur, v_dest) {
                moved = Some((e, v_dest));
                break;
            }
        }
        let Some((e, next)) = moved else {
            return Err(Error::NonProgress(format!(
                "no move from {v_cur} after a full pass (destinations {:?})",
                seq.to_vec()
            )));
        };
        if let Some(prev) = &previous {
            if compare_dest_seq(&seq, prev)? != Ordering::Greater {
                return Err(Error::OrderViolation(format!(
                    "{:?} after {:?} at vertex {v_cur}",
                    seq.to_vec(),
                    prev.to_vec()
                )));
            }
        }
        trace.moves.push(MoveRecord {
            from: v_cur,
            to: next,
            sequence: seq.to_vec(),
        });
        if visited[next] {
            return Err(Error::NonProgress(format!("vertex {next} visited twice")));
        }
        visited[next] = true;
        path.push(e, next);
        v_cur = next;
        previous = Some(seq);
    }
    trace.counters = tester.counters;
    Ok(UndirectedRun { path, trace })
}
