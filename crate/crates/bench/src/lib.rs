//! Fixed instances shared by the benchmarks.

use pdlog_core::gen::{connected_undirected, eulerian_connected, layered_funnel};
use pdlog_core::scaling::farthest_from;
use pdlog_core::{substream, Graph, Seed, SwfpInstance, VertexId};

/// Connected undirected graph with `m = 3n` and its farthest target from 0.
pub fn undirected(n: usize) -> (Graph, VertexId) {
    let g = connected_undirected(n, 3 * n, &mut substream(Seed(n as u64), "bench/undirected")).unwrap();
    let t = farthest_from(&g, 0);
    (g, t)
}

/// Connected Eulerian graph with `m = 3n` and its farthest target from 0.
pub fn eulerian(n: usize) -> (Graph, VertexId) {
    let g = eulerian_connected(n, 3 * n, &mut substream(Seed(n as u64), "bench/eulerian")).unwrap();
    let t = farthest_from(&g, 0);
    (g, t)
}

/// Layered funnel from 0 to `n - 1` with walk budget `k`.
pub fn funnel(n: usize, k: usize) -> SwfpInstance {
    let g = layered_funnel(n, k, &mut substream(Seed(n as u64), "bench/funnel"), 1000).unwrap();
    SwfpInstance::new(g, 0, n - 1, k).unwrap()
}
