//! Token-and-replay reproducibility on top of any solver.
//!
//! A [`Runner`] splits its randomness into a short influential token and
//! everything else. Algorithm A searches for a token under which amplified
//! runs always agree; algorithm B replays a token with fresh randomness
//! and takes a bitwise majority over repeated runs.

use std::collections::HashMap;

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eulerian::{find_path_eulerian_with, EulerianOptions};
use crate::graph::{Graph, Path, VertexId};
use crate::meter::WorkspaceMeter;
use crate::oracles::validate_path;
use crate::rng::{substream, Seed, Stream};
use crate::swfp::{run_with_threshold, sample_threshold, SwfpInstance, SwfpOptions, Threshold};
use crate::undirected::find_path_undirected_with;
use crate::walk::ConnectivityConfig;

/// The influential part of a run's randomness.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReproToken {
    pub bytes: Vec<u8>,
    /// Declared length in bits; `bytes` holds `ceil(bits / 8)` bytes.
    pub bits: u64,
}

impl ReproToken {
    pub fn empty() -> Self {
        ReproToken {
            bytes: Vec::new(),
            bits: 0,
        }
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn from_hex(text: &str, bits: u64) -> Result<Self> {
        let bytes = hex::decode(text.trim())
            .map_err(|e| Error::domain(format!("token is not hex: {e}")))?;
        if bytes.len() as u64 != bits.div_ceil(8) {
            return Err(Error::domain(format!(
                "token has {} bytes, expected {}",
                bytes.len(),
                bits.div_ceil(8)
            )));
        }
        Ok(ReproToken { bytes, bits })
    }
}

/// A solver bound to one instance.
pub trait Runner {
    fn name(&self) -> &str;

    /// Length of the influential token in bits.
    fn token_bits(&self) -> u64;

    /// Draws a token from the influential stream.
    fn draw_token(&self, stream: &mut Stream) -> ReproToken;

    /// Rejects tokens this runner cannot use.
    fn check_token(&self, token: &ReproToken) -> Result<()>;

    /// One run with the token pinned and the rest drawn from `rest`.
    fn run(&self, token: &ReproToken, rest: &mut Stream) -> Result<Vec<u8>>;

    /// Whether `output` solves the instance.
    fn is_valid(&self, output: &[u8]) -> bool;
}

/// Runner failures that say something about the randomness rather than
/// the input. Algorithm A treats them as a bad candidate.
fn is_run_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NonProgress(_) | Error::OrderViolation(_) | Error::NotConnected { .. }
    )
}

fn rest_stream(seed: Seed) -> Stream {
    substream(seed, crate::swfp::WALKS_LABEL)
}

/// Parses `"v0 v1 .."` path output.
pub fn parse_vertices(output: &[u8]) -> Option<Vec<VertexId>> {
    let text = std::str::from_utf8(output).ok()?;
    text.split_whitespace().map(|w| w.parse().ok()).collect()
}

/// Rebuilds a path from vertices, taking the lowest-id edge for each step.
pub fn path_from_vertices(g: &Graph, vertices: &[VertexId]) -> Option<Path> {
    let (&first, rest) = vertices.split_first()?;
    if first >= g.n() {
        return None;
    }
    let mut path = Path::single(first);
    for &v in rest {
        if v >= g.n() {
            return None;
        }
        let e = g.edge_between(path.end(), v)?;
        path.push(e, v);
    }
    Some(path)
}

fn valid_path_bytes(g: &Graph, s: VertexId, t: VertexId, output: &[u8]) -> bool {
    parse_vertices(output)
        .and_then(|vs| path_from_vertices(g, &vs))
        .is_some_and(|p| validate_path(g, &p, s, t))
}

/// Short-walk solver; the token is the threshold index.
pub struct SwfpRunner {
    pub instance: SwfpInstance,
    pub options: SwfpOptions,
}

impl SwfpRunner {
    fn threshold(&self, token: &ReproToken) -> Result<Threshold> {
        self.check_token(token)?;
        Threshold::from_token(self.instance.grid(), &token.bytes)
    }
}

impl Runner for SwfpRunner {
    fn name(&self) -> &str {
        "swfp"
    }

    fn token_bits(&self) -> u64 {
        self.instance.grid().token_bits()
    }

    fn draw_token(&self, stream: &mut Stream) -> ReproToken {
        let th = sample_threshold(self.instance.graph.n(), self.instance.k, stream);
        ReproToken {
            bytes: th.to_token(),
            bits: self.token_bits(),
        }
    }

    fn check_token(&self, token: &ReproToken) -> Result<()> {
        if token.bits != self.token_bits() {
            return Err(Error::domain(format!(
                "token declares {} bits, runner uses {}",
                token.bits,
                self.token_bits()
            )));
        }
        Threshold::from_token(self.instance.grid(), &token.bytes).map(|_| ())
    }

    fn run(&self, token: &ReproToken, rest: &mut Stream) -> Result<Vec<u8>> {
        let th = self.threshold(token)?;
        let report = run_with_threshold(&self.instance, &self.options, th, rest, &WorkspaceMeter::new())?;
        Ok(report.path.vertex_line().into_bytes())
    }

    fn is_valid(&self, output: &[u8]) -> bool {
        let inst = &self.instance;
        parse_vertices(output)
            .and_then(|vs| path_from_vertices(&inst.graph, &vs))
            .is_some_and(|p| p.len() <= inst.k && validate_path(&inst.graph, &p, inst.s, inst.t))
    }
}

fn check_empty(token: &ReproToken) -> Result<()> {
    if token.bits != 0 || !token.bytes.is_empty() {
        return Err(Error::domain("this runner takes an empty token"));
    }
    Ok(())
}

/// Undirected solver; no influential bits.
pub struct UndirectedRunner {
    pub graph: Graph,
    pub s: VertexId,
    pub t: VertexId,
    pub connectivity: ConnectivityConfig,
}

impl Runner for UndirectedRunner {
    fn name(&self) -> &str {
        "undirected"
    }

    fn token_bits(&self) -> u64 {
        0
    }

    fn draw_token(&self, _: &mut Stream) -> ReproToken {
        ReproToken::empty()
    }

    fn check_token(&self, token: &ReproToken) -> Result<()> {
        check_empty(token)
    }

    fn run(&self, token: &ReproToken, rest: &mut Stream) -> Result<Vec<u8>> {
        check_empty(token)?;
        let run = find_path_undirected_with(
            &self.graph,
            self.s,
            self.t,
            self.connectivity,
            rest,
            &WorkspaceMeter::new(),
        )?;
        Ok(run.path.vertex_line().into_bytes())
    }

    fn is_valid(&self, output: &[u8]) -> bool {
        valid_path_bytes(&self.graph, self.s, self.t, output)
    }
}

/// Eulerian solver; no influential bits.
pub struct EulerianRunner {
    pub graph: Graph,
    pub s: VertexId,
    pub t: VertexId,
    pub options: EulerianOptions,
}

impl Runner for EulerianRunner {
    fn name(&self) -> &str {
        "eulerian"
    }

    fn token_bits(&self) -> u64 {
        0
    }

    fn draw_token(&self, _: &mut Stream) -> ReproToken {
        ReproToken::empty()
    }

    fn check_token(&self, token: &ReproToken) -> Result<()> {
        check_empty(token)
    }

    fn run(&self, token: &ReproToken, rest: &mut Stream) -> Result<Vec<u8>> {
        check_empty(token)?;
        let run = find_path_eulerian_with(
            &self.graph,
            self.s,
            self.t,
            &self.options,
            rest,
            &WorkspaceMeter::new(),
        )?;
        Ok(run.path.vertex_line().into_bytes())
    }

    fn is_valid(&self, output: &[u8]) -> bool {
        valid_path_bytes(&self.graph, self.s, self.t, output)
    }
}

/// How [`amplify_bitwise`] gathers the repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplifyMode {
    /// Keep all `reps` outputs and vote per bit.
    #[default]
    Buffered,
    /// Re-execute all runs for every output bit, holding one bit at a time.
    PerPosition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Amplification {
    /// Runs per majority vote; odd, at least 3.
    pub reps: usize,
    /// Amplified runs that must agree before a token is accepted.
    pub trials: usize,
    /// Tokens tried before giving up.
    pub candidates: usize,
    pub mode: AmplifyMode,
}

impl Default for Amplification {
    fn default() -> Self {
        Amplification {
            reps: 15,
            trials: 32,
            candidates: 40,
            mode: AmplifyMode::Buffered,
        }
    }
}

fn rep_seed(seed: Seed, r: usize) -> Seed {
    substream(seed, &format!("rep/{r}")).next_seed()
}

fn bit(bytes: &[u8], i: usize) -> bool {
    bytes[i / 8] >> (7 - i % 8) & 1 == 1
}

/// Bitwise majority over `reps` runs with `token` pinned.
pub fn amplify_bitwise(
    runner: &dyn Runner,
    token: &ReproToken,
    reps: usize,
    mode: AmplifyMode,
    seed: Seed,
) -> Result<Vec<u8>> {
    if reps < 3 || reps % 2 == 0 {
        return Err(Error::domain(format!("reps must be odd and at least 3, got {reps}")));
    }
    runner.check_token(token)?;
    let run = |r: usize| runner.run(token, &mut rest_stream(rep_seed(seed, r)));
    match mode {
        AmplifyMode::Buffered => {
            let outputs = (0..reps).map(run).collect::<Result<Vec<_>>>()?;
            let len = outputs[0].len();
            if let Some(o) = outputs.iter().find(|o| o.len() != len) {
                return Err(Error::LengthMismatch(len, o.len()));
            }
            let mut out = vec![0u8; len];
            for i in 0..8 * len {
                let ones = outputs.iter().filter(|o| bit(o, i)).count();
                if 2 * ones > reps {
                    out[i / 8] |= 1 << (7 - i % 8);
                }
            }
            Ok(out)
        }
        AmplifyMode::PerPosition => {
            let len = run(0)?.len();
            let mut out = vec![0u8; len];
            for i in 0..8 * len {
                let mut ones = 0;
                for r in 0..reps {
                    let o = run(r)?;
                    if o.len() != len {
                        return Err(Error::LengthMismatch(len, o.len()));
                    }
                    ones += usize::from(bit(&o, i));
                }
                if 2 * ones > reps {
                    out[i / 8] |= 1 << (7 - i % 8);
                }
            }
            Ok(out)
        }
    }
}

/// Algorithm A: the first sampled token whose amplified runs all agree.
pub fn algorithm_a(runner: &dyn Runner, amp: &Amplification, seed: Seed) -> Result<ReproToken> {
    let mut candidates = substream(seed, "candidates");
    for c in 0..amp.candidates {
        let token = runner.draw_token(&mut candidates);
        if token_is_good(runner, &token, amp, seed, c)? {
            return Ok(token);
        }
    }
    Err(Error::NoGoodString {
        candidates: amp.candidates,
    })
}

fn token_is_good(
    runner: &dyn Runner,
    token: &ReproToken,
    amp: &Amplification,
    seed: Seed,
    c: usize,
) -> Result<bool> {
    let mut first: Option<Vec<u8>> = None;
    for trial in 0..amp.trials {
        let trial_seed = substream(seed, &format!("trial/{c}/{trial}")).next_seed();
        let out = match amplify_bitwise(runner, token, amp.reps, amp.mode, trial_seed) {
            Ok(out) => out,
            Err(e) if is_run_failure(&e) || matches!(e, Error::LengthMismatch(..)) => return Ok(false),
            Err(e) => return Err(e),
        };
        match &first {
            None => first = Some(out),
            // Positionwise comparison, stopping at the first difference.
            Some(f) => {
                if f.len() != out.len() || f.iter().zip(&out).any(|(a, b)| a != b) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Algorithm B: an amplified run with the token pinned.
pub fn algorithm_b(runner: &dyn Runner, token: &ReproToken, amp: &Amplification, seed: Seed) -> Result<Vec<u8>> {
    amplify_bitwise(runner, token, amp.reps, amp.mode, seed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Copies {
    pub token: ReproToken,
    pub outputs: Vec<Vec<u8>>,
    pub all_equal: bool,
}

/// Runs algorithm A once and algorithm B `copies` times with its token.
pub fn emit_copies(runner: &dyn Runner, copies: usize, amp: &Amplification, seed: Seed) -> Result<Copies> {
    if copies == 0 {
        return Err(Error::domain("need at least one copy"));
    }
    let token = algorithm_a(runner, amp, substream(seed, "token").next_seed())?;
    let outputs = (0..copies)
        .map(|i| algorithm_b(runner, &token, amp, substream(seed, &format!("copy/{i}")).next_seed()))
        .collect::<Result<Vec<_>>>()?;
    let all_equal = outputs.windows(2).all(|w| w[0] == w[1]);
    Ok(Copies {
        token,
        outputs,
        all_equal,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PseudoDetStats {
    pub trials: usize,
    /// Trials that ended in an error instead of an output.
    pub failures: usize,
    pub distinct: usize,
    pub modal_digest: String,
    pub modal_count: usize,
    pub modal_frequency: f64,
    pub entropy_bits: f64,
}

/// Digests, modal frequency and plug-in entropy over `trials` outputs.
pub fn measure(trials: usize, mut run: impl FnMut(usize) -> Result<Vec<u8>>) -> Result<PseudoDetStats> {
    if trials < 2 {
        return Err(Error::domain("need at least two trials"));
    }
    let mut counts: HashMap<[u8; 32], usize> = HashMap::new();
    let mut failures = 0;
    for i in 0..trials {
        match run(i) {
            Ok(out) => *counts.entry(Sha256::digest(&out).into()).or_default() += 1,
            Err(e) if is_run_failure(&e) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    // Ties go to the smallest digest so the report is deterministic.
    let modal = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(d, c)| (hex::encode(d), *c));
    let produced: usize = counts.values().sum();
    let entropy = counts
        .values()
        .map(|&c| {
            let p = c as f64 / produced as f64;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0);
    let (modal_digest, modal_count) = modal.unwrap_or_default();
    Ok(PseudoDetStats {
        trials,
        failures,
        distinct: counts.len(),
        modal_digest,
        modal_count,
        modal_frequency: modal_count as f64 / trials as f64,
        entropy_bits: entropy,
    })
}

/// The plain randomized algorithm: fresh token and fresh rest per trial.
pub fn measure_runner(runner: &dyn Runner, trials: usize, seed: Seed) -> Result<PseudoDetStats> {
    measure(trials, |i| {
        let trial = substream(seed, &format!("measure/{i}")).next_seed();
        let token = runner.draw_token(&mut substream(trial, crate::swfp::THRESHOLD_LABEL));
        runner.run(&token, &mut rest_stream(trial))
    })
}

/// Algorithm B with a fixed token across trials.
pub fn measure_replay(
    runner: &dyn Runner,
    token: &ReproToken,
    amp: &Amplification,
    trials: usize,
    seed: Seed,
) -> Result<PseudoDetStats> {
    measure(trials, |i| {
        algorithm_b(runner, token, amp, substream(seed, &format!("replay/{i}")).next_seed())
    })
}

/// Threshold index carried by a swfp token.
pub fn token_index(token: &ReproToken) -> BigUint {
    BigUint::from_bytes_be(&token.bytes) + 1u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind::Directed;
    use crate::ratio::from_u64s;
    use crate::walk::EstimatorConfig;

    /// Fixed output, no token.
    struct Constant(Vec<u8>);

    impl Runner for Constant {
        fn name(&self) -> &str {
            "constant"
        }
        fn token_bits(&self) -> u64 {
            0
        }
        fn draw_token(&self, _: &mut Stream) -> ReproToken {
            ReproToken::empty()
        }
        fn check_token(&self, token: &ReproToken) -> Result<()> {
            check_empty(token)
        }
        fn run(&self, _: &ReproToken, _: &mut Stream) -> Result<Vec<u8>> {
            Ok(self.0.clone())
        }
        fn is_valid(&self, _: &[u8]) -> bool {
            true
        }
    }

    /// Flips bit 3 of a fixed byte string with probability 1/5.
    struct Flaky;

    impl Runner for Flaky {
        fn name(&self) -> &str {
            "flaky"
        }
        fn token_bits(&self) -> u64 {
            0
        }
        fn draw_token(&self, _: &mut Stream) -> ReproToken {
            ReproToken::empty()
        }
        fn check_token(&self, token: &ReproToken) -> Result<()> {
            check_empty(token)
        }
        fn run(&self, _: &ReproToken, rest: &mut Stream) -> Result<Vec<u8>> {
            let mut out = vec![0xA5, 0x0F];
            if rest.chance(1, 5) {
                out[0] ^= 0x10;
            }
            Ok(out)
        }
        fn is_valid(&self, _: &[u8]) -> bool {
            true
        }
    }

    /// Output is the counter of a fresh 64-bit draw: never repeats.
    struct Chaotic;

    impl Runner for Chaotic {
        fn name(&self) -> &str {
            "chaotic"
        }
        fn token_bits(&self) -> u64 {
            8
        }
        fn draw_token(&self, stream: &mut Stream) -> ReproToken {
            ReproToken {
                bytes: vec![stream.take_bits(8) as u8],
                bits: 8,
            }
        }
        fn check_token(&self, _: &ReproToken) -> Result<()> {
            Ok(())
        }
        fn run(&self, _: &ReproToken, rest: &mut Stream) -> Result<Vec<u8>> {
            Ok(rest.take_bits(64).to_be_bytes().to_vec())
        }
        fn is_valid(&self, _: &[u8]) -> bool {
            true
        }
    }

    fn diamond_runner() -> SwfpRunner {
        let g = Graph::new(Directed, 4, vec![(0, 1), (0, 2), (1, 3), (2, 3), (3, 3)]).unwrap();
        SwfpRunner {
            instance: SwfpInstance::new(g, 0, 3, 2).unwrap(),
            options: SwfpOptions::new(EstimatorConfig::practical(from_u64s(1, 20), from_u64s(1, 1000)).unwrap()),
        }
    }

    fn small_amp() -> Amplification {
        Amplification {
            reps: 3,
            trials: 4,
            candidates: 10,
            mode: AmplifyMode::Buffered,
        }
    }

    #[test]
    fn deterministic_runner_is_unchanged() {
        let r = Constant(b"0 1 2".to_vec());
        let out = amplify_bitwise(&r, &ReproToken::empty(), 3, AmplifyMode::Buffered, Seed(1)).unwrap();
        assert_eq!(out, b"0 1 2");
        let token = algorithm_a(&r, &small_amp(), Seed(2)).unwrap();
        assert_eq!(token, ReproToken::empty());
        assert_eq!(algorithm_b(&r, &token, &small_amp(), Seed(3)).unwrap(), b"0 1 2");
    }

    #[test]
    fn reps_must_be_odd_and_at_least_three() {
        let r = Constant(vec![1]);
        for reps in [0, 1, 2, 4] {
            let err = amplify_bitwise(&r, &ReproToken::empty(), reps, AmplifyMode::Buffered, Seed(1)).unwrap_err();
            assert_eq!(err.name(), "DomainError");
        }
    }

    #[test]
    fn majority_removes_rare_flips() {
        // P[majority of 15 flips] is about 4e-4, so 100 trials agree.
        let mut agree = 0;
        for i in 0..100 {
            let out = amplify_bitwise(&Flaky, &ReproToken::empty(), 15, AmplifyMode::Buffered, Seed(i)).unwrap();
            agree += usize::from(out == [0xA5, 0x0F]);
        }
        assert!(agree >= 99, "{agree}");
    }

    #[test]
    fn per_position_matches_buffered() {
        for i in 0..10 {
            let a = amplify_bitwise(&Flaky, &ReproToken::empty(), 5, AmplifyMode::Buffered, Seed(i)).unwrap();
            let b = amplify_bitwise(&Flaky, &ReproToken::empty(), 5, AmplifyMode::PerPosition, Seed(i)).unwrap();
            assert_eq!(a, b);
        }
        let r = diamond_runner();
        let token = algorithm_a(&r, &small_amp(), Seed(4)).unwrap();
        let a = amplify_bitwise(&r, &token, 3, AmplifyMode::Buffered, Seed(5)).unwrap();
        let b = amplify_bitwise(&r, &token, 3, AmplifyMode::PerPosition, Seed(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chaotic_runner_has_no_good_string() {
        let err = algorithm_a(&Chaotic, &small_amp(), Seed(1)).unwrap_err();
        assert_eq!(err, Error::NoGoodString { candidates: 10 });
        assert_eq!(emit_copies(&Chaotic, 2, &small_amp(), Seed(1)).unwrap_err().name(), "NoGoodString");
    }

    #[test]
    fn diamond_token_replays_identically() {
        let r = diamond_runner();
        let token = algorithm_a(&r, &small_amp(), Seed(7)).unwrap();
        assert_eq!(token.bits, r.token_bits());
        assert!(token.bits <= 6);
        let first = algorithm_b(&r, &token, &small_amp(), Seed(100)).unwrap();
        assert!(r.is_valid(&first));
        for i in 1..20 {
            assert_eq!(algorithm_b(&r, &token, &small_amp(), Seed(100 + i)).unwrap(), first);
        }
        let copies = emit_copies(&r, 2, &small_amp(), Seed(8)).unwrap();
        assert!(copies.all_equal);
        assert!(r.is_valid(&copies.outputs[0]));
        let one = emit_copies(&r, 1, &small_amp(), Seed(9)).unwrap();
        assert_eq!(one.outputs.len(), 1);
        assert!(one.all_equal);
    }

    #[test]
    fn out_of_range_token_is_rejected() {
        let r = diamond_runner();
        // Grid size 64, so index 65 (byte 64) is out of range.
        let bad = ReproToken { bytes: vec![64], bits: 6 };
        assert_eq!(algorithm_b(&r, &bad, &small_amp(), Seed(1)).unwrap_err().name(), "DomainError");
        let wrong_len = ReproToken { bytes: vec![0, 0], bits: 6 };
        assert!(r.check_token(&wrong_len).is_err());
    }

    #[test]
    fn hex_round_trip() {
        let t = ReproToken { bytes: vec![0x0a, 0xff], bits: 12 };
        assert_eq!(t.to_hex(), "0aff");
        assert_eq!(ReproToken::from_hex("0aff", 12).unwrap(), t);
        assert!(ReproToken::from_hex("0aff", 4).is_err());
        assert!(ReproToken::from_hex("zz", 8).is_err());
        assert_eq!(token_index(&ReproToken { bytes: vec![4], bits: 6 }), BigUint::from(5u8));
    }

    #[test]
    fn measure_examples() {
        let stats = measure_runner(&Constant(b"x".to_vec()), 50, Seed(1)).unwrap();
        assert_eq!(stats.modal_frequency, 1.0);
        assert_eq!(stats.entropy_bits, 0.0);
        assert_eq!(stats.distinct, 1);
        // Fair coin over two outputs.
        let mut st = substream(Seed(2), "coin");
        let stats = measure(10_000, |_| Ok(vec![st.take_bits(1) as u8])).unwrap();
        assert!((stats.entropy_bits - 1.0).abs() <= 0.05, "{}", stats.entropy_bits);
        assert!(stats.entropy_bits <= (stats.distinct as f64).log2() + 1e-12);
        assert!(measure(1, |_| Ok(vec![])).is_err());
    }
}
