//! Random walks: hitting-probability estimates, the exact forward oracle,
//! and the walk-based connectivity test.
//!
//! The target `t` is absorbing everywhere in this module, so "reaches `t`
//! within `k` steps" and "ends at `t` after `k` steps" coincide. A vertex
//! with nothing to walk along stays put.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, GraphKind, VertexId};
use crate::meter::WorkspaceMeter;
use crate::oracles::OracleBudget;
use crate::ratio::{self, Rational};
use crate::rng::Stream;

/// `hits` out of `samples` walks reached the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Estimate {
    pub hits: u64,
    pub samples: u64,
}

impl Estimate {
    pub fn value(&self) -> Rational {
        ratio::from_u64s(self.hits, self.samples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMode {
    /// `k^11 n^11` walks, error `1/(k^5 n^5)`. Named `paper` on the command line.
    #[serde(rename = "paper")]
    Theoretical,
    /// Hoeffding sample count from `epsilon` and `delta`.
    Practical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    pub epsilon: Rational,
    pub delta: Rational,
    /// Largest sample count a single estimate may use.
    pub max_samples: u64,
}

pub const DEFAULT_MAX_SAMPLES: u64 = 50_000_000;

impl EstimatorConfig {
    pub fn practical(epsilon: Rational, delta: Rational) -> Result<Self> {
        let zero = Rational::zero();
        let one = Rational::one();
        if epsilon <= zero || epsilon >= one || delta <= zero || delta >= one {
            return Err(Error::domain("epsilon and delta must lie strictly between 0 and 1"));
        }
        Ok(EstimatorConfig {
            mode: EstimatorMode::Practical,
            epsilon,
            delta,
            max_samples: DEFAULT_MAX_SAMPLES,
        })
    }

    /// Worst-case constants. `epsilon` and `delta` are informational here; the
    /// sample count depends only on the instance size.
    pub fn theoretical() -> Self {
        EstimatorConfig {
            mode: EstimatorMode::Theoretical,
            epsilon: Rational::zero(),
            delta: Rational::zero(),
            max_samples: DEFAULT_MAX_SAMPLES,
        }
    }

    pub fn with_max_samples(mut self, max: u64) -> Self {
        self.max_samples = max;
        self
    }

    /// Walks per estimate for a graph with `n` vertices and walk length
    /// `k`. Practical mode: `ceil(ln(2/delta) / (2 eps^2))`.
    pub fn samples(&self, n: usize, k: usize) -> Result<u64> {
        let needed: f64 = match self.mode {
            EstimatorMode::Theoretical => ((n.max(1) * k.max(1)) as f64).powi(11),
            EstimatorMode::Practical => {
                let eps = ratio::to_f64(&self.epsilon);
                let delta = ratio::to_f64(&self.delta);
                ((2.0 / delta).ln() / (2.0 * eps * eps)).ceil()
            }
        };
        if !(needed <= self.max_samples as f64) {
            return Err(Error::budget("estimator samples", needed, self.max_samples));
        }
        Ok((needed as u64).max(1))
    }

    /// Error bound the sample count targets.
    pub fn error_bound(&self, n: usize, k: usize) -> Rational {
        match self.mode {
            EstimatorMode::Theoretical => {
                let nk = BigInt::from((n.max(1) * k.max(1)) as u64);
                Rational::new(BigInt::one(), nk.pow(5))
            }
            EstimatorMode::Practical => self.epsilon.clone(),
        }
    }
}

/// Directed walk of at most `len` steps from `s`; true once it sits on `t`.
#[inline]
pub fn walk_hits(g: &Graph, s: VertexId, t: VertexId, len: usize, stream: &mut Stream) -> bool {
    let mut v = s;
    for _ in 0..len {
        if v == t {
            return true;
        }
        let out = g.out_adj(v);
        if out.is_empty() {
            continue;
        }
        v = out[stream.below(out.len() as u64) as usize].vertex;
    }
    v == t
}

/// Estimates `p_k(s, t)` with the configured number of walks.
pub fn estimate_pk(
    g: &Graph,
    s: VertexId,
    t: VertexId,
    k: usize,
    cfg: &EstimatorConfig,
    stream: &mut Stream,
) -> Result<Estimate> {
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    let samples = cfg.samples(g.n(), k)?;
    Ok(estimate_with_samples(g, s, t, k, samples, stream))
}

pub fn estimate_with_samples(
    g: &Graph,
    s: VertexId,
    t: VertexId,
    k: usize,
    samples: u64,
    stream: &mut Stream,
) -> Estimate {
    if s == t {
        return Estimate { hits: samples, samples };
    }
    let hits = (0..samples)
        .filter(|_| walk_hits(g, s, t, k, stream))
        .count() as u64;
    Estimate { hits, samples }
}

/// Exact `p_k(s, t)` by pushing the walk distribution forward step by step.
pub fn exact_pk(
    g: &Graph,
    s: VertexId,
    t: VertexId,
    k: usize,
    budget: &OracleBudget,
) -> Result<Rational> {
    Ok(exact_pk_trace(g, s, t, k, budget)?
        .pop()
        .map(|(_, absorbed)| absorbed)
        .unwrap_or_else(Rational::zero))
}

/// Per step: the distribution over non-target vertices and the mass
/// absorbed at `t` so far. Entry 0 is the start.
pub fn exact_pk_trace(
    g: &Graph,
    s: VertexId,
    t: VertexId,
    k: usize,
    budget: &OracleBudget,
) -> Result<Vec<(Vec<Rational>, Rational)>> {
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    budget.check_graph(g)?;
    budget.check_len(k)?;
    let n = g.n();
    let mut dist = vec![Rational::zero(); n];
    let mut absorbed = Rational::zero();
    if s == t {
        absorbed = Rational::one();
    } else {
        dist[s] = Rational::one();
    }
    let mut trace = vec![(dist.clone(), absorbed.clone())];
    for _ in 0..k {
        let mut next = vec![Rational::zero(); n];
        for v in 0..n {
            if dist[v].is_zero() {
                continue;
            }
            let out = g.out_adj(v);
            if out.is_empty() {
                next[v] += &dist[v];
                continue;
            }
            let share = &dist[v] / Rational::from_integer(BigInt::from(out.len()));
            for a in out {
                next[a.vertex] += &share;
            }
        }
        absorbed += std::mem::take(&mut next[t]);
        dist = next;
        trace.push((dist.clone(), absorbed.clone()));
    }
    Ok(trace)
}

/// Vertex predicate: keep `keep[0]`, `keep[1]` and every id `> above`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexCut {
    pub above: usize,
    pub keep: [VertexId; 2],
}

impl VertexCut {
    #[inline]
    pub fn keeps(&self, v: VertexId) -> bool {
        v > self.above || v == self.keep[0] || v == self.keep[1]
    }
}

/// Answers "is edge `e` on one of the first `k` permutation cycles".
pub trait CycleMembership {
    fn in_prefix(&self, e: EdgeId, k: usize) -> bool;

    /// Largest values of the registers one query keeps live.
    fn registers(&self) -> Vec<u64>;
}

#[derive(Clone, Copy)]
pub struct CyclePrefix<'a> {
    pub index: &'a dyn CycleMembership,
    pub k: usize,
}

/// Graph modification seen by the connectivity walk. Removed endpoints and
/// deleted edges turn the chosen edge into a self-loop.
#[derive(Clone, Copy, Default)]
pub struct Restriction<'a> {
    pub cut: Option<VertexCut>,
    pub cycles: Option<CyclePrefix<'a>>,
}

impl<'a> Restriction<'a> {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn vertices(above: usize, a: VertexId, b: VertexId) -> Self {
        Restriction {
            cut: Some(VertexCut { above, keep: [a, b] }),
            cycles: None,
        }
    }

    pub fn cycles(index: &'a dyn CycleMembership, k: usize) -> Self {
        Restriction {
            cut: None,
            cycles: Some(CyclePrefix { index, k }),
        }
    }

    #[inline]
    pub fn keeps_vertex(&self, v: VertexId) -> bool {
        self.cut.is_none_or(|c| c.keeps(v))
    }

    #[inline]
    fn blocks_edge(&self, e: EdgeId) -> bool {
        match self.cycles {
            Some(p) if p.k > 0 => p.index.in_prefix(e, p.k),
            _ => false,
        }
    }
}

/// One step of the undirected-ized walk from `v`. Returns `v` itself when
/// the chosen edge leads out of the restricted graph or when `v` has no
/// incident edges at all.
#[inline]
pub fn step(g: &Graph, v: VertexId, r: &Restriction<'_>, stream: &mut Stream) -> VertexId {
    let deg = g.walk_degree(v);
    if deg == 0 {
        return v;
    }
    let a = g.walk_entry(v, stream.below(deg as u64) as usize);
    if !r.keeps_vertex(a.vertex) || r.blocks_edge(a.edge) {
        v
    } else {
        a.vertex
    }
}

/// Repetition and length constants for the connectivity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ConnectivityConfig {
    /// Walks per test are `max(min_walks, ceil(walks_per_log2n * log2 n))`.
    pub walks_per_log2n: u64,
    pub min_walks: u64,
    /// Walk length is `length_factor * m * n`.
    pub length_factor: u64,
}

impl Default for ConnectivityConfig {
    fn default() -> Self {
        ConnectivityConfig {
            walks_per_log2n: 34,
            min_walks: 34,
            length_factor: 4,
        }
    }
}

impl ConnectivityConfig {
    pub fn walks(&self, n: usize) -> u64 {
        let log2n = (n.max(1) as f64).log2();
        ((self.walks_per_log2n as f64 * log2n).ceil() as u64).max(self.min_walks)
    }

    pub fn walk_len(&self, g: &Graph) -> u64 {
        self.length_factor * g.m() as u64 * g.n() as u64
    }
}

/// Work done by walks, accumulated across calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct WalkCounters {
    pub connectivity_calls: u64,
    pub walks: u64,
    pub steps: u64,
    /// Calls that started on a vertex with no incident edges.
    pub isolated_starts: u64,
}

impl WalkCounters {
    pub fn add(&mut self, other: &WalkCounters) {
        self.connectivity_calls += other.connectivity_calls;
        self.walks += other.walks;
        self.steps += other.steps;
        self.isolated_starts += other.isolated_starts;
    }
}

/// The repeated-walk connectivity test with its counters.
#[derive(Debug, Clone, Default)]
pub struct ConnectivityTester {
    pub cfg: ConnectivityConfig,
    pub counters: WalkCounters,
}

impl ConnectivityTester {
    pub fn new(cfg: ConnectivityConfig) -> Self {
        ConnectivityTester {
            cfg,
            counters: WalkCounters::default(),
        }
    }

    /// True iff some walk from `a` hits `b` in the restricted graph.
    /// One-sided: a `true` is always correct.
    pub fn test(
        &mut self,
        g: &Graph,
        a: VertexId,
        b: VertexId,
        r: &Restriction<'_>,
        stream: &mut Stream,
        meter: &WorkspaceMeter,
    ) -> Result<bool> {
        if g.kind() == GraphKind::Directed {
            return Err(Error::KindViolation(
                "walk connectivity needs an undirected or eulerian graph".into(),
            ));
        }
        g.check_vertex(a)?;
        g.check_vertex(b)?;
        if !r.keeps_vertex(a) || !r.keeps_vertex(b) {
            return Err(Error::domain("connectivity endpoint removed by restriction"));
        }
        self.counters.connectivity_calls += 1;
        if a == b {
            return Ok(true);
        }
        if g.walk_degree(a) == 0 {
            self.counters.isolated_starts += 1;
            return Ok(false);
        }
        let walks = self.cfg.walks(g.n());
        let len = self.cfg.walk_len(g);
        let mut regs = vec![g.n() as u64, len, walks];
        if let Some(p) = r.cycles {
            regs.extend(p.index.registers());
        }
        let _scope = meter.scope(&regs);
        for _ in 0..walks {
            self.counters.walks += 1;
            let mut v = a;
            for i in 0..len {
                v = step(g, v, r, stream);
                if v == b {
                    self.counters.steps += i + 1;
                    return Ok(true);
                }
            }
            self.counters.steps += len;
        }
        Ok(false)
    }
}

/// [`ConnectivityTester::test`] with default constants and no metering.
pub fn test_connectivity(
    g: &Graph,
    a: VertexId,
    b: VertexId,
    r: &Restriction<'_>,
    stream: &mut Stream,
) -> Result<bool> {
    ConnectivityTester::default().test(g, a, b, r, stream, &WorkspaceMeter::new())
}
