//! Counter-based runtime scaling tables.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::eulerian::{find_path_eulerian_with, EulerianOptions, Membership};
use crate::gen::{swfp_funnel, Family};
use crate::graph::{Graph, GraphKind, VertexId};
use crate::meter::WorkspaceMeter;
use crate::ratio::from_u64s;
use crate::rng::{substream, Seed};
use crate::swfp::{solve, SwfpInstance, SwfpOptions};
use crate::undirected::find_path_undirected_with;
use crate::walk::{ConnectivityConfig, EstimatorConfig};

/// Least-squares slope of `ln y` against `ln x`. Points with a
/// non-positive coordinate are rejected.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::domain("a slope needs at least two points"));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::domain("log-log fit needs positive coordinates"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("all points share one x value"));
    }
    Ok(sxy / sxx)
}

/// Median of a non-empty list; the lower middle for even lengths.
pub fn median(xs: &[f64]) -> Option<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.get((v.len().max(1) - 1) / 2).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Undirected,
    Eulerian,
    Swfp,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Undirected => "undirected",
            Suite::Eulerian => "eulerian",
            Suite::Swfp => "swfp",
        }
    }

    fn default_family(self) -> Family {
        match self {
            Suite::Undirected => Family::ConnectedUndirected,
            Suite::Eulerian => Family::EulerianConnected,
            Suite::Swfp => Family::Funnel,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "undirected" => Ok(Suite::Undirected),
            "eulerian" => Ok(Suite::Eulerian),
            "swfp" => Ok(Suite::Swfp),
            _ => Err(Error::domain(format!("unknown suite {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub suite: Suite,
    /// Generator override; each suite has its own default.
    pub family: Option<Family>,
    pub sizes: Vec<usize>,
    pub seeds: u64,
    pub base_seed: Seed,
    /// Edges per vertex for the graph suites.
    pub edge_factor: usize,
    /// Walk length for the swfp suite.
    pub walk_len: usize,
    pub membership: Membership,
    pub connectivity: ConnectivityConfig,
}

impl BenchConfig {
    pub fn new(suite: Suite, sizes: Vec<usize>) -> Self {
        BenchConfig {
            suite,
            family: None,
            sizes,
            seeds: 3,
            base_seed: Seed(0),
            edge_factor: 3,
            walk_len: 4,
            membership: Membership::Cached,
            connectivity: ConnectivityConfig::default(),
        }
    }
}

/// One run's counters. `status` is `ok` or an error name.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchRun {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub status: String,
    pub connectivity_calls: u64,
    pub walks: u64,
    pub steps: u64,
    pub membership_scans: u64,
    pub peak_bits: u64,
    pub path_len: usize,
    pub wall_ms: f64,
}

impl BenchRun {
    /// Walk steps plus pairing evaluations spent on cycle membership.
    pub fn work(&self) -> u64 {
        self.steps + self.membership_scans
    }
}

/// Generates the instance for `(n, seed)` and runs the suite's solver.
pub fn bench_run(cfg: &BenchConfig, n: usize, seed: Seed) -> BenchRun {
    let mut row = BenchRun {
        n,
        m: 0,
        seed: seed.0,
        status: "ok".into(),
        connectivity_calls: 0,
        walks: 0,
        steps: 0,
        membership_scans: 0,
        peak_bits: 0,
        path_len: 0,
        wall_ms: 0.0,
    };
    if let Err(e) = fill_run(cfg, n, seed, &mut row) {
        row.status = e.name().into();
    }
    row
}

fn fill_run(cfg: &BenchConfig, n: usize, seed: Seed, row: &mut BenchRun) -> Result<()> {
    let mut gen = substream(seed, "bench/graph");
    let family = cfg.family.unwrap_or(cfg.suite.default_family());
    let g = if family == Family::Funnel {
        swfp_funnel(n, cfg.walk_len, &mut gen)?
    } else {
        family.generate(n, cfg.edge_factor * n, &mut gen)?
    };
    row.m = g.m();
    if n == 0 {
        return Err(Error::domain("bench sizes must be positive"));
    }
    // The funnel's sink is its last vertex; elsewhere aim as far as possible.
    let t = if cfg.suite == Suite::Swfp { n - 1 } else { farthest_from(&g, 0) };
    let s = 0;
    let meter = WorkspaceMeter::new();
    let mut walks = substream(seed, crate::swfp::WALKS_LABEL);
    let start = Instant::now();
    match cfg.suite {
        Suite::Undirected => {
            let run = find_path_undirected_with(&g, s, t, cfg.connectivity, &mut walks, &meter)?;
            let c = run.trace.counters;
            (row.connectivity_calls, row.walks, row.steps) = (c.connectivity_calls, c.walks, c.steps);
            row.path_len = run.path.len();
        }
        Suite::Eulerian => {
            let opts = EulerianOptions {
                connectivity: cfg.connectivity,
                membership: cfg.membership,
            };
            let run = find_path_eulerian_with(&g, s, t, &opts, &mut walks, &meter)?;
            let c = run.trace.counters;
            (row.connectivity_calls, row.walks, row.steps) = (c.connectivity_calls, c.walks, c.steps);
            row.membership_scans = run.trace.membership_scans;
            row.path_len = run.path.len();
        }
        Suite::Swfp => {
            let inst = SwfpInstance::new(g, s, t, cfg.walk_len)?;
            let est = EstimatorConfig::practical(from_u64s(1, 20), from_u64s(1, 1000))?;
            let report = solve(&inst, &SwfpOptions::new(est), seed)?;
            row.walks = report.walk_samples;
            row.path_len = report.path.len();
            if !report.success {
                row.status = "Stalled".into();
            }
        }
    }
    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    row.peak_bits = meter.peak_bits();
    Ok(())
}

/// A vertex at maximum hop distance from `s` (smallest id among ties),
/// following edge directions unless the graph is undirected.
pub fn farthest_from(g: &Graph, s: VertexId) -> VertexId {
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::from([s]);
    dist[s] = 0;
    let mut best = s;
    while let Some(u) = queue.pop_front() {
        if dist[u] > dist[best] || (dist[u] == dist[best] && u < best) {
            best = u;
        }
        let next: Vec<VertexId> = if g.kind() == GraphKind::Undirected {
            (0..g.walk_degree(u)).map(|i| g.walk_entry(u, i).vertex).collect()
        } else {
            g.out_adj(u).iter().map(|a| a.vertex).collect()
        };
        for v in next {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    best
}

/// Per-size medians over the successful runs.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchSummary {
    pub n: usize,
    pub runs: usize,
    pub failures: usize,
    /// Error names of failed runs, in seed order.
    pub statuses: Vec<String>,
    pub m: f64,
    pub connectivity_calls: f64,
    pub walks: f64,
    pub steps: f64,
    pub work: f64,
    pub peak_bits: f64,
    pub wall_ms: f64,
}

pub fn summarize(n: usize, runs: &[BenchRun]) -> BenchSummary {
    let ok: Vec<&BenchRun> = runs.iter().filter(|r| r.status == "ok").collect();
    let med = |f: &dyn Fn(&BenchRun) -> f64| median(&ok.iter().map(|r| f(r)).collect::<Vec<_>>()).unwrap_or(f64::NAN);
    BenchSummary {
        n,
        runs: runs.len(),
        failures: runs.len() - ok.len(),
        statuses: runs.iter().filter(|r| r.status != "ok").map(|r| r.status.clone()).collect(),
        m: med(&|r| r.m as f64),
        connectivity_calls: med(&|r| r.connectivity_calls as f64),
        walks: med(&|r| r.walks as f64),
        steps: med(&|r| r.steps as f64),
        work: med(&|r| r.work() as f64),
        peak_bits: med(&|r| r.peak_bits as f64),
        wall_ms: med(&|r| r.wall_ms),
    }
}

/// Runs every size and seed. The seed for `(n, i)` is derived from the
/// base seed, so rows do not depend on the size list.
pub fn run_suite(cfg: &BenchConfig) -> Vec<(Vec<BenchRun>, BenchSummary)> {
    cfg.sizes
        .iter()
        .map(|&n| {
            let runs: Vec<BenchRun> = (0..cfg.seeds)
                .map(|i| bench_run(cfg, n, substream(cfg.base_seed, &format!("bench/{n}/{i}")).next_seed()))
                .collect();
            let summary = summarize(n, &runs);
            (runs, summary)
        })
        .collect()
}

/// CSV table of per-size medians. Wall time is a column only on request,
/// since it changes from run to run.
pub fn to_csv(suite: Suite, rows: &[BenchSummary], wall_clock: bool) -> String {
    let mut out = String::from("suite,n,runs,failures,m,connectivity_calls,walks,steps,work,peak_bits");
    if wall_clock {
        out.push_str(",wall_ms");
    }
    out.push_str(",status\n");
    for r in rows {
        let medians = [r.m, r.connectivity_calls, r.walks, r.steps, r.work, r.peak_bits].map(cell);
        out.push_str(&format!("{suite},{},{},{},{}", r.n, r.runs, r.failures, medians.join(",")));
        if wall_clock {
            out.push_str(&format!(",{}", if r.wall_ms.is_nan() { String::new() } else { format!("{:.3}", r.wall_ms) }));
        }
        let status = if r.statuses.is_empty() { "ok".to_string() } else { r.statuses.join(";") };
        out.push_str(&format!(",{status}\n"));
    }
    out
}

/// Empty when no run succeeded.
fn cell(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

/// Slope of the chosen per-size median against `n`, over sizes with data.
pub fn summary_slope(rows: &[BenchSummary], pick: impl Fn(&BenchSummary) -> f64) -> Result<f64> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.failures < r.runs)
        .map(|r| (r.n as f64, pick(r)))
        .collect();
    loglog_slope(&points)
}
