//! Short-walk path finding with a random threshold.
//!
//! The solver walks greedily from `s`: at remaining depth `d` it scans the
//! out-neighbours of the current vertex in canonical order and moves to the
//! first `v` whose estimate of `1/2 - p_{d-1}(v, t)` is at most a threshold
//! `c = index / D` drawn once from a grid of `M = (kn)^2` values with
//! `D = (kn)^4`. The threshold index is the only randomness that can sway
//! the output on instances whose probabilities stay clear of the grid, so
//! it serves as the replay token.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphKind, Path, VertexId};
use crate::meter::WorkspaceMeter;
use crate::oracles::{hit_probability_table, OracleBudget};
use crate::ratio::{self, Rational};
use crate::rng::{substream, Seed, Stream};
use crate::walk::{estimate_with_samples, exact_pk, EstimatorConfig, EstimatorMode};

/// Label of the stream the threshold is drawn from.
pub const THRESHOLD_LABEL: &str = "threshold";
/// Label of the stream all walks are drawn from.
pub const WALKS_LABEL: &str = "walks";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwfpInstance {
    pub graph: Graph,
    pub s: VertexId,
    pub t: VertexId,
    pub k: usize,
}

impl SwfpInstance {
    pub fn new(graph: Graph, s: VertexId, t: VertexId, k: usize) -> Result<Self> {
        if graph.kind() == GraphKind::Undirected {
            return Err(Error::KindViolation("short-walk instances are directed".into()));
        }
        graph.check_vertex(s)?;
        graph.check_vertex(t)?;
        if k == 0 {
            return Err(Error::domain("walk length k must be at least 1"));
        }
        Ok(SwfpInstance { graph, s, t, k })
    }

    /// Serialized form: the graph text followed by `instance s t k`.
    pub fn to_text(&self) -> String {
        format!("{}instance {} {} {}\n", self.graph.to_text(), self.s, self.t, self.k)
    }

    /// `|x|`, the serialized length in bytes.
    pub fn size_bytes(&self) -> usize {
        self.to_text().len()
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.graph.n(), self.k)
    }

    /// Exact `p_k(s, t)` and whether it reaches `1 - 1/|x|`.
    pub fn validity(&self, budget: &OracleBudget) -> Result<(Rational, bool)> {
        let p = exact_pk(&self.graph, self.s, self.t, self.k, budget)?;
        let bound = Rational::one() - ratio::from_u64s(1, self.size_bytes() as u64);
        let ok = p >= bound;
        Ok((p, ok))
    }
}

/// Threshold grid `{1/D, ..., M/D}` with `M = (kn)^2` and `D = (kn)^4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub size: BigUint,
    pub denom: BigUint,
}

impl Grid {
    pub fn new(n: usize, k: usize) -> Self {
        let kn = BigUint::from(n) * BigUint::from(k);
        let size = &kn * &kn;
        let denom = &size * &size;
        Grid { size, denom }
    }

    /// Bits needed to write any index: `ceil(log2 M)`.
    pub fn token_bits(&self) -> u64 {
        (&self.size - 1u8).bits()
    }

    pub fn value(&self, index: &BigUint) -> Rational {
        ratio::from_biguints(index, &self.denom)
    }

    pub fn check_index(&self, index: &BigUint) -> Result<()> {
        if index.is_zero() || index > &self.size {
            return Err(Error::domain(format!(
                "threshold index {index} outside [1, {}]",
                self.size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Threshold {
    pub grid: Grid,
    pub index: BigUint,
}

impl Threshold {
    pub fn new(grid: Grid, index: BigUint) -> Result<Self> {
        grid.check_index(&index)?;
        Ok(Threshold { grid, index })
    }

    pub fn value(&self) -> Rational {
        self.grid.value(&self.index)
    }

    /// Token bytes: `index - 1` big-endian, zero-padded to
    /// `ceil(token_bits / 8)` bytes.
    pub fn to_token(&self) -> Vec<u8> {
        let width = self.grid.token_bits().div_ceil(8) as usize;
        let raw = (&self.index - 1u8).to_bytes_be();
        let raw: &[u8] = if raw == [0] { &[] } else { &raw };
        let mut out = vec![0u8; width - raw.len()];
        out.extend_from_slice(raw);
        out
    }

    pub fn from_token(grid: Grid, bytes: &[u8]) -> Result<Self> {
        let width = grid.token_bits().div_ceil(8) as usize;
        if bytes.len() != width {
            return Err(Error::domain(format!(
                "token has {} bytes, expected {width}",
                bytes.len()
            )));
        }
        let index = BigUint::from_bytes_be(bytes) + 1u8;
        Threshold::new(grid, index)
    }
}

/// Uniform threshold index on `[1, M]`.
pub fn sample_threshold(n: usize, k: usize, stream: &mut Stream) -> Threshold {
    let grid = Grid::new(n, k);
    let index = stream
        .uniform_biguint(&grid.size)
        .expect("grid size is positive")
        + 1u8;
    Threshold { grid, index }
}

/// Something worth knowing about a run that does not make it fail.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    /// `1/2 - p_depth(vertex, t)` equals the grid point `index / D`.
    GridCollision { depth: usize, vertex: VertexId, index: String },
    /// The estimator error is not below half the grid spacing.
    CoarseEstimator { epsilon: String, half_spacing: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub path: Path,
    pub threshold: Threshold,
    /// Depths at which no neighbour was accepted.
    pub stalls: usize,
    pub success: bool,
    pub estimates: u64,
    pub walk_samples: u64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Options shared by [`solve`] and [`replay`].
#[derive(Debug, Clone)]
pub struct SwfpOptions {
    pub estimator: EstimatorConfig,
    /// Compute the exact probability table and flag grid collisions.
    pub check_grid: bool,
    pub budget: OracleBudget,
}

impl SwfpOptions {
    pub fn new(estimator: EstimatorConfig) -> Self {
        SwfpOptions {
            estimator,
            check_grid: false,
            budget: OracleBudget::default(),
        }
    }
}

/// Full randomized solve: threshold from `seed`'s threshold stream, walks
/// from its walk stream.
pub fn solve(inst: &SwfpInstance, opts: &SwfpOptions, seed: Seed) -> Result<SolveReport> {
    let mut tstream = substream(seed, THRESHOLD_LABEL);
    let threshold = sample_threshold(inst.graph.n(), inst.k, &mut tstream);
    let mut walks = substream(seed, WALKS_LABEL);
    run_with_threshold(inst, opts, threshold, &mut walks, &WorkspaceMeter::new())
}

/// Solve with the threshold pinned to `index` and walks from `seed2`.
pub fn replay(
    inst: &SwfpInstance,
    opts: &SwfpOptions,
    index: &BigUint,
    seed2: Seed,
) -> Result<SolveReport> {
    let threshold = Threshold::new(inst.grid(), index.clone())?;
    let mut walks = substream(seed2, WALKS_LABEL);
    run_with_threshold(inst, opts, threshold, &mut walks, &WorkspaceMeter::new())
}

/// The solver proper.
pub fn run_with_threshold(
    inst: &SwfpInstance,
    opts: &SwfpOptions,
    threshold: Threshold,
    walks: &mut Stream,
    meter: &WorkspaceMeter,
) -> Result<SolveReport> {
    let g = &inst.graph;
    let (n, k, t) = (g.n(), inst.k, inst.t);
    let samples = opts.estimator.samples(n, k)?;
    let mut diagnostics = Vec::new();
    if opts.estimator.mode == EstimatorMode::Practical {
        let half = ratio::from_biguints(&BigUint::one(), &(&threshold.grid.denom * 2u8));
        if opts.estimator.epsilon >= half {
            diagnostics.push(Diagnostic::CoarseEstimator {
                epsilon: ratio::to_text(&opts.estimator.epsilon),
                half_spacing: ratio::to_text(&half),
            });
        }
    }
    if opts.check_grid {
        diagnostics.extend(
            grid_report(inst, &Rational::zero(), &opts.budget)?
                .collisions
                .into_iter()
                .map(|(depth, vertex, index)| Diagnostic::GridCollision {
                    depth,
                    vertex,
                    index: index.to_string(),
                }),
        );
    }

    // Accept v iff 1/2 - hits/N <= index/D, i.e. D(N - 2 hits) <= 2 index N.
    let denom = BigInt::from(threshold.grid.denom.clone());
    let rhs = BigInt::from(threshold.index.clone()) * 2u8 * samples;
    let index_max = threshold.grid.size.to_u64().unwrap_or(u64::MAX);
    let _state = meter.scope(&[k as u64, n as u64, g.m() as u64, n as u64, index_max]);

    let mut u = inst.s;
    let mut path = Path::single(u);
    let mut stalls = 0;
    let mut estimates = 0u64;
    for d in (1..=k).rev() {
        if u == t {
            break;
        }
        let mut accepted = None;
        let mut previous = None;
        for a in g.out_adj(u) {
            if previous == Some(a.vertex) {
                continue;
            }
            previous = Some(a.vertex);
            let est = {
                let _walk = meter.scope(&[samples, samples, n as u64, k as u64]);
                estimate_with_samples(g, a.vertex, t, d - 1, samples, walks)
            };
            estimates += 1;
            let diff = samples as i128 - 2 * est.hits as i128;
            let lhs = &denom * BigInt::from(diff);
            if lhs <= rhs {
                accepted = Some(*a);
                break;
            }
        }
        match accepted {
            Some(a) => {
                path.push(a.edge, a.vertex);
                u = a.vertex;
            }
            None => stalls += 1,
        }
    }
    Ok(SolveReport {
        success: u == t,
        path,
        threshold,
        stalls,
        estimates,
        walk_samples: estimates * samples,
        diagnostics,
    })
}

/// Where the exact values `1/2 - p_i(v, t)`, `0 <= i < k`, sit relative to
/// the threshold grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridReport {
    /// Smallest distance from any value to any grid point.
    pub min_gap: Rational,
    /// `(i, v, index)` for values lying exactly on a grid point.
    pub collisions: Vec<(usize, VertexId, BigUint)>,
    /// `(i, v)` for values within `eps` of some grid point.
    pub near: Vec<(usize, VertexId)>,
    /// Grid indices within `eps` of at least one value.
    pub bad_indices: Vec<BigUint>,
}

impl GridReport {
    /// No value comes within `eps` (strictly more than `eps` away).
    pub fn certified(&self) -> bool {
        self.near.is_empty()
    }
}

/// Exact grid analysis of an instance at radius `eps`.
pub fn grid_report(inst: &SwfpInstance, eps: &Rational, budget: &OracleBudget) -> Result<GridReport> {
    let grid = inst.grid();
    let table = hit_probability_table(&inst.graph, inst.t, inst.k.saturating_sub(1), budget)?;
    let half = ratio::half();
    let d = BigInt::from(grid.denom.clone());
    let size = BigInt::from(grid.size.clone());
    let mut min_gap: Option<Rational> = None;
    let mut collisions = Vec::new();
    let mut near = Vec::new();
    let mut bad = std::collections::BTreeSet::new();
    for (i, row) in table.iter().enumerate() {
        for (v, p) in row.iter().enumerate() {
            let value = &half - p;
            // Nearest grid indices around value * D, clamped to [1, M].
            let scaled = &value * Rational::from_integer(d.clone());
            let lo = scaled.floor().to_integer();
            let mut nearest = None::<Rational>;
            for j in [lo.clone() - 1, lo.clone(), lo.clone() + 1, lo + 2] {
                let j = j.clamp(BigInt::one(), size.clone());
                let gap = ratio::abs_diff(&value, &Rational::new(j.clone(), d.clone()));
                if gap.is_zero() {
                    collisions.push((i, v, j.to_biguint().expect("positive index")));
                }
                if nearest.as_ref().is_none_or(|x| &gap < x) {
                    nearest = Some(gap);
                }
            }
            let gap = nearest.expect("at least one candidate");
            if &gap <= eps {
                near.push((i, v));
                // Every index within eps of this value.
                let lo = ((&value - eps) * Rational::from_integer(d.clone())).ceil().to_integer();
                let hi = ((&value + eps) * Rational::from_integer(d.clone())).floor().to_integer();
                let mut j = lo.max(BigInt::one());
                let hi = hi.min(size.clone());
                while j <= hi {
                    bad.insert(j.to_biguint().expect("positive index"));
                    j += 1;
                }
            }
            if min_gap.as_ref().is_none_or(|x| &gap < x) {
                min_gap = Some(gap);
            }
        }
    }
    collisions.sort();
    collisions.dedup();
    Ok(GridReport {
        min_gap: min_gap.unwrap_or_else(Rational::zero),
        collisions,
        near,
        bad_indices: bad.into_iter().collect(),
    })
}

/// Every path the solver can produce when each estimate is replaced by
/// its exact value, one per threshold index. Feasible for tiny grids only.
pub fn exact_outcomes(inst: &SwfpInstance, budget: &OracleBudget) -> Result<Vec<(BigUint, Path)>> {
    let grid = inst.grid();
    let m = grid
        .size
        .to_u64()
        .filter(|&m| m <= 1 << 20)
        .ok_or_else(|| Error::budget("grid indices", &grid.size, 1u64 << 20))?;
    let table = hit_probability_table(&inst.graph, inst.t, inst.k.saturating_sub(1), budget)?;
    let half = ratio::half();
    let mut out = Vec::with_capacity(m as usize);
    for idx in 1..=m {
        let c = grid.value(&BigUint::from(idx));
        let g = &inst.graph;
        let mut u = inst.s;
        let mut path = Path::single(u);
        for d in (1..=inst.k).rev() {
            if u == inst.t {
                break;
            }
            if let Some(a) = g.out_adj(u).iter().find(|a| &half - &table[d - 1][a.vertex] <= c) {
                path.push(a.edge, a.vertex);
                u = a.vertex;
            }
        }
        out.push((BigUint::from(idx), path));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind::Directed;
    use crate::oracles::validate_path;
    use crate::ratio::from_u64s;

    fn practical() -> SwfpOptions {
        SwfpOptions::new(EstimatorConfig::practical(from_u64s(1, 20), from_u64s(1, 10_000)).unwrap())
    }

    fn diamond() -> SwfpInstance {
        // s=0, a=1, b=2, t=3.
        let g = Graph::new(Directed, 4, vec![(0, 1), (0, 2), (1, 3), (2, 3), (3, 3)]).unwrap();
        SwfpInstance::new(g, 0, 3, 2).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = Grid::new(2, 2);
        assert_eq!(g.size, BigUint::from(16u8));
        assert_eq!(g.denom, BigUint::from(256u16));
        assert_eq!(g.token_bits(), 4);
        let g1 = Grid::new(1, 1);
        assert_eq!(g1.value(&BigUint::one()), Rational::one());
        assert_eq!(g1.token_bits(), 0);
    }

    #[test]
    fn threshold_values_span_the_grid() {
        let grid = Grid::new(2, 2);
        let lo = Threshold::new(grid.clone(), BigUint::one()).unwrap();
        let hi = Threshold::new(grid.clone(), BigUint::from(16u8)).unwrap();
        assert_eq!(lo.value(), from_u64s(1, 256));
        assert_eq!(hi.value(), from_u64s(1, 16));
        assert!(Threshold::new(grid.clone(), BigUint::zero()).is_err());
        assert!(Threshold::new(grid, BigUint::from(17u8)).is_err());
    }

    #[test]
    fn token_round_trip() {
        let grid = Grid::new(2, 2);
        for i in 1..=16u32 {
            let th = Threshold::new(grid.clone(), BigUint::from(i)).unwrap();
            let bytes = th.to_token();
            assert_eq!(bytes.len(), 1);
            assert_eq!(Threshold::from_token(grid.clone(), &bytes).unwrap(), th);
        }
        let big = Grid::new(300, 300);
        let th = Threshold::new(big.clone(), big.size.clone()).unwrap();
        let bytes = th.to_token();
        assert_eq!(bytes.len() as u64, big.token_bits().div_ceil(8));
        assert_eq!(Threshold::from_token(big, &bytes).unwrap(), th);
        let one = Threshold::new(Grid::new(1, 1), BigUint::one()).unwrap();
        assert!(one.to_token().is_empty());
    }

    #[test]
    fn sample_threshold_is_uniform() {
        let mut st = substream(Seed(11), THRESHOLD_LABEL);
        let mut counts = [0u32; 16];
        for _ in 0..100_000 {
            let th = sample_threshold(2, 2, &mut st);
            counts[th.index.to_usize().unwrap() - 1] += 1;
        }
        let sigma = (100_000f64 / 16.0 * 15.0 / 16.0).sqrt();
        for c in counts {
            assert!((c as f64 - 6250.0).abs() < 5.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn single_edge_instance() {
        let g = Graph::new(Directed, 2, vec![(0, 1)]).unwrap();
        let inst = SwfpInstance::new(g, 0, 1, 1).unwrap();
        for seed in 0..20 {
            let r = solve(&inst, &practical(), Seed(seed)).unwrap();
            assert_eq!(r.path.vertices, vec![0, 1]);
            assert!(r.success);
        }
        let m = inst.grid().size;
        let a = replay(&inst, &practical(), &BigUint::one(), Seed(1)).unwrap();
        let b = replay(&inst, &practical(), &m, Seed(2)).unwrap();
        assert_eq!(a.path, b.path);
    }

    #[test]
    fn start_at_target() {
        let g = Graph::new(Directed, 2, vec![(0, 1)]).unwrap();
        let inst = SwfpInstance::new(g, 1, 1, 3).unwrap();
        let r = solve(&inst, &practical(), Seed(3)).unwrap();
        assert_eq!(r.path.vertices, vec![1]);
        assert!(r.success);
        assert_eq!(r.estimates, 0);
    }

    #[test]
    fn diamond_always_takes_the_first_branch() {
        let inst = diamond();
        let budget = OracleBudget::default();
        for (_, p) in exact_outcomes(&inst, &budget).unwrap() {
            assert_eq!(p.vertices, vec![0, 1, 3]);
        }
        for seed in 0..30 {
            let r = solve(&inst, &practical(), Seed(seed)).unwrap();
            assert_eq!(r.path.vertices, vec![0, 1, 3]);
            assert!(validate_path(&inst.graph, &r.path, 0, 3));
        }
        for idx in [1u32, 7, 64] {
            for seed2 in 0..5 {
                let r = replay(&inst, &practical(), &BigUint::from(idx), Seed(seed2)).unwrap();
                assert_eq!(r.path.vertices, vec![0, 1, 3]);
            }
        }
    }

    #[test]
    fn replay_rejects_out_of_range_index() {
        let inst = diamond();
        let err = replay(&inst, &practical(), &BigUint::zero(), Seed(1)).unwrap_err();
        assert_eq!(err.name(), "DomainError");
    }

    #[test]
    fn grid_collision_is_flagged() {
        // p_1(s, t) = 63/128, so 1/2 - p_1 = 2/256 = grid point 2 of (n, k) = (2, 2).
        let mut edges = vec![(0, 1); 63];
        edges.extend(std::iter::repeat_n((0, 0), 65));
        edges.push((1, 1));
        let g = Graph::new(Directed, 2, edges).unwrap();
        let inst = SwfpInstance::new(g, 0, 1, 2).unwrap();
        let report = grid_report(&inst, &Rational::zero(), &OracleBudget::default()).unwrap();
        assert_eq!(report.collisions, vec![(1, 0, BigUint::from(2u8))]);
        assert!(!report.certified());
        let mut opts = practical();
        opts.check_grid = true;
        let r = replay(&inst, &opts, &BigUint::from(5u8), Seed(1)).unwrap();
        assert!(r.diagnostics.iter().any(|d| matches!(d, Diagnostic::GridCollision { depth: 1, vertex: 0, .. })));
    }

    #[test]
    fn coarse_estimator_warning() {
        let inst = diamond();
        let r = solve(&inst, &practical(), Seed(1)).unwrap();
        assert!(r.diagnostics.iter().any(|d| matches!(d, Diagnostic::CoarseEstimator { .. })));
    }

    #[test]
    fn bad_index_count_is_at_most_nk() {
        // At radius 1/(kn)^5 each value is near at most one grid point.
        let mut st = substream(Seed(12), "gen");
        let budget = OracleBudget::default();
        for _ in 0..40 {
            let n = 3 + st.below(4) as usize;
            let k = 2 + st.below(5) as usize;
            let g = crate::gen::swfp_funnel(n, k, &mut st).unwrap();
            let inst = SwfpInstance::new(g, 0, n - 1, k).unwrap();
            let radius = Rational::new(BigInt::one(), BigInt::from(n * k).pow(5));
            let report = grid_report(&inst, &radius, &budget).unwrap();
            assert!(report.bad_indices.len() <= n * k, "{}", report.bad_indices.len());
        }
    }

    #[test]
    fn theoretical_mode_on_tiny_instance() {
        let g = Graph::new(Directed, 2, vec![(0, 1), (1, 1)]).unwrap();
        let inst = SwfpInstance::new(g, 0, 1, 1).unwrap();
        let opts = SwfpOptions::new(EstimatorConfig::theoretical());
        let r = solve(&inst, &opts, Seed(5)).unwrap();
        assert_eq!(r.path.vertices, vec![0, 1]);
        let big = SwfpInstance::new(crate::gen::swfp_funnel(6, 4, &mut substream(Seed(1), "g")).unwrap(), 0, 5, 4).unwrap();
        assert_eq!(solve(&big, &opts, Seed(5)).unwrap_err().name(), "BudgetExceeded");
    }
}
