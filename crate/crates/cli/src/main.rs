//! `pdlog`: command-line front end.
//!
//! Results go to standard output; one JSON run record per invocation goes
//! to standard error or to the file named by `--stats`.

use std::fs::{self, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use pdlog_core::eulerian::{find_path_eulerian_with, EdgePermutation};
use pdlog_core::gen::{poly_mixing, Family};
use pdlog_core::oracles::{bfs_connected, enumerate_st_paths, validate_path, Residual};
use pdlog_core::ratio::to_text;
use pdlog_core::reduction::{build_layered, default_x};
use pdlog_core::repro::{
    algorithm_a, algorithm_b, measure, measure_runner, parse_vertices, path_from_vertices, AmplifyMode,
    EulerianRunner, Runner, SwfpRunner, UndirectedRunner,
};
use pdlog_core::scaling::{run_suite, summary_slope, to_csv, BenchConfig, Suite};
use pdlog_core::swfp::{run_with_threshold, sample_threshold, Threshold, THRESHOLD_LABEL, WALKS_LABEL};
use pdlog_core::undirected::find_path_undirected_with;
use pdlog_core::walk::{estimate_pk, exact_pk};
use pdlog_core::{
    load_graph, parse_rational, substream, Amplification, ConnectivityConfig, Error, EstimatorConfig,
    EulerianOptions, Graph, Membership, OracleBudget, Path, ReproToken, Seed, SwfpInstance, SwfpOptions,
    VertexId, WorkspaceMeter,
};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "pdlog", version, about = "Pseudo-deterministic path finding in small workspace")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Append the run record to FILE instead of standard error.
    #[arg(long, global = true, value_name = "FILE")]
    stats: Option<PathBuf>,
    /// Worker threads; runs are sequential, so any value gives the same output.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random graph.
    Gen(GenArgs),
    /// Find a path.
    Solve(SolveArgs),
    /// Re-run the short-walk solver with a pinned threshold index.
    Replay(ReplayArgs),
    /// Output statistics of the plain randomized solver over many seeds.
    Verify(VerifyArgs),
    /// Output support size and entropy.
    Entropy(EntropyArgs),
    /// Build the layered short-walk instance of a fast-mixing instance.
    Reduce(ReduceArgs),
    /// Exact reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Sampling estimates.
    #[command(subcommand)]
    Estimate(EstimateCommand),
    /// Print the cycle decomposition of an Eulerian graph.
    Cycles(CyclesArgs),
    /// Find or use a reproducibility token.
    #[command(subcommand)]
    Token(TokenCommand),
    /// Counter-based scaling table as CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Alg {
    Swfp,
    Undirected,
    Eulerian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Worst-case sample counts.
    #[value(name = "paper")]
    Theoretical,
    Practical,
}

#[derive(Clone, Copy, ValueEnum)]
enum MembershipArg {
    Streaming,
    Cached,
    /// Cached answers, counters charged the streaming cost.
    Simulated,
}

impl From<MembershipArg> for Membership {
    fn from(m: MembershipArg) -> Self {
        match m {
            MembershipArg::Streaming => Membership::Streaming,
            MembershipArg::Cached => Membership::Cached,
            MembershipArg::Simulated => Membership::Simulated,
        }
    }
}

#[derive(Args, Clone)]
struct GraphArg {
    /// Graph file, or `-` for standard input.
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
}

#[derive(Args, Clone)]
struct EstimatorArgs {
    #[arg(long, value_enum, default_value = "practical")]
    mode: Mode,
    /// Additive error of each estimate (practical mode).
    #[arg(long, default_value = "1/20")]
    eps: String,
    /// Failure probability of each estimate (practical mode).
    #[arg(long, default_value = "1/1000")]
    delta: String,
    /// Cap on walks per estimate.
    #[arg(long, default_value_t = pdlog_core::walk::DEFAULT_MAX_SAMPLES)]
    max_samples: u64,
}

impl EstimatorArgs {
    fn config(&self) -> Result<EstimatorConfig, CliError> {
        let cfg = match self.mode {
            Mode::Theoretical => EstimatorConfig::theoretical(),
            Mode::Practical => EstimatorConfig::practical(parse_rational(&self.eps)?, parse_rational(&self.delta)?)?,
        };
        Ok(cfg.with_max_samples(self.max_samples))
    }
}

#[derive(Args, Clone)]
struct InstanceArgs {
    #[arg(long, value_enum)]
    alg: Alg,
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long)]
    s: VertexId,
    #[arg(long)]
    t: VertexId,
    /// Walk length (short-walk solver only).
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value = "cached")]
    membership: MembershipArg,
}

#[derive(Args)]
struct AmpArgs {
    /// Runs per majority vote (odd, at least 3).
    #[arg(long, default_value_t = 15)]
    reps: usize,
    /// Amplified runs that must agree on a candidate token.
    #[arg(long, default_value_t = 32)]
    amp_trials: usize,
    /// Tokens to try before giving up.
    #[arg(long, default_value_t = 40)]
    candidates: usize,
    /// Re-run for every output bit instead of buffering outputs.
    #[arg(long)]
    per_position: bool,
}

impl AmpArgs {
    fn amplification(&self) -> Amplification {
        Amplification {
            reps: self.reps,
            trials: self.amp_trials,
            candidates: self.candidates,
            mode: if self.per_position {
                AmplifyMode::PerPosition
            } else {
                AmplifyMode::Buffered
            },
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "erdos-directed")]
    family: String,
    #[arg(long)]
    n: usize,
    /// Edge count; walk length for the funnel family.
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// Generate a fast-mixing instance with this mixing parameter instead.
    #[arg(long, conflicts_with = "family")]
    mixing: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write one JSON line per move.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Also print the edge ids of the path.
    #[arg(long)]
    emit_edges: bool,
    /// Flag thresholds that collide with exact probabilities.
    #[arg(long)]
    check_grid: bool,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Threshold index, 1-based decimal.
    #[arg(long)]
    token: String,
    #[arg(long)]
    seed2: u64,
    #[arg(long)]
    emit_edges: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stub {
    /// One fair bit per run.
    Coin,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long, value_enum)]
    alg: Option<Alg>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    s: Option<VertexId>,
    #[arg(long)]
    t: Option<VertexId>,
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Measure a calibration stub instead of a solver.
    #[arg(long, value_enum, conflicts_with_all = ["alg", "graph"])]
    stub: Option<Stub>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long)]
    s: VertexId,
    #[arg(long)]
    t: VertexId,
    /// Mixing parameter.
    #[arg(long)]
    k: usize,
    /// Amplification; defaults to the byte length of the instance.
    #[arg(long)]
    x: Option<u64>,
    /// Write the layered graph here and its metadata to FILE.json.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Solve the layered instance and print the projected path.
    #[arg(long)]
    solve: bool,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact probability that a k-step walk reaches t.
    Pk {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        s: VertexId,
        #[arg(long)]
        t: VertexId,
        #[arg(long)]
        k: usize,
    },
    /// Breadth-first connectivity after optional deletions.
    Connected {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        a: VertexId,
        #[arg(long)]
        b: VertexId,
        /// Keep only a, b and vertices with larger ids.
        #[arg(long)]
        above: Option<usize>,
        /// Delete the edges of the first K edge-pairing cycles.
        #[arg(long, default_value_t = 0)]
        cycles: usize,
        /// Follow edge directions.
        #[arg(long)]
        directed: bool,
    },
    /// Check a path given as vertex ids.
    Validate {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        s: VertexId,
        #[arg(long)]
        t: VertexId,
        /// Space-separated vertex ids; read from standard input if absent.
        #[arg(long)]
        path: Option<String>,
    },
    /// List every s-t walk that stops at its first arrival at t.
    Enumerate {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        s: VertexId,
        #[arg(long)]
        t: VertexId,
        #[arg(long)]
        max_len: usize,
    },
}

#[derive(Subcommand)]
enum EstimateCommand {
    /// Sampled estimate of the k-step hitting probability; prints `hits samples`.
    Pk {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        s: VertexId,
        #[arg(long)]
        t: VertexId,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        estimator: EstimatorArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct CyclesArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Print only the first K cycles.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum TokenCommand {
    /// Search for a token whose amplified runs agree; prints it as hex.
    Make {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        amp: AmpArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Amplified run with the token pinned.
    Use {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        amp: AmpArgs,
        /// Lowercase hex; empty or `-` for solvers without a token.
        #[arg(long, allow_hyphen_values = true)]
        token: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: String,
    /// Comma-separated vertex counts.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    edge_factor: usize,
    #[arg(long, default_value_t = 4)]
    walk_len: usize,
    /// Generator override.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, value_enum, default_value = "cached")]
    membership: MembershipArg,
    /// Add median wall time to the table (varies between runs).
    #[arg(long)]
    wall_clock: bool,
}

enum CliError {
    Core(Error),
    /// Bad flags or input; exit status 2.
    Usage(String),
    /// The run finished without a usable result; exit status 1.
    Failure { name: &'static str, message: String },
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(Error::Io(e.to_string()))
    }
}

impl CliError {
    fn name(&self) -> &str {
        match self {
            CliError::Core(e) => e.name(),
            CliError::Usage(_) => "UsageError",
            CliError::Failure { name, .. } => name,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Failure { message: m, .. } => m.clone(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure { .. } => 1,
            CliError::Core(e) => match e {
                Error::Parse { .. } | Error::KindViolation(_) | Error::Domain(_) | Error::Io(_) => 2,
                _ => 1,
            },
        }
    }
}

/// Everything a command produces besides its exit status.
#[derive(Default)]
struct Ctx {
    out: String,
    seed: Option<u64>,
    graph_digest: Option<String>,
    peak_bits: Option<u64>,
    diagnostics: Vec<Value>,
}

impl Ctx {
    fn line(&mut self, text: impl AsRef<str>) {
        self.out.push_str(text.as_ref());
        self.out.push('\n');
    }

    fn load(&mut self, arg: &GraphArg) -> Result<Graph, CliError> {
        let text = if arg.graph.as_os_str() == "-" {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            s
        } else {
            fs::read_to_string(&arg.graph)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", arg.graph.display())))?
        };
        let g = load_graph(text.as_bytes())?;
        self.graph_digest = Some(hex::encode(Sha256::digest(g.to_text().as_bytes())));
        Ok(g)
    }

    fn print_path(&mut self, p: &Path, edges: bool) {
        self.line(p.vertex_line());
        if edges {
            self.line(p.edge_line());
        }
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    schema: u32,
    subcommand: &'a str,
    argv: Vec<String>,
    seed: Option<u64>,
    jobs: u32,
    graph_digest: Option<String>,
    wall_ms: f64,
    workspace_peak_bits: Option<u64>,
    result_digest: String,
    status: &'a str,
    error: Option<String>,
    diagnostics: &'a [Value],
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let mut ctx = Ctx::default();
    let subcommand = subcommand_name(&cli.command);
    let result = run(&cli.command, &mut ctx);
    let (status, error, code) = match &result {
        Ok(()) => ("ok".to_string(), None, 0),
        Err(e) => (e.name().to_string(), Some(e.message()), e.exit_code()),
    };
    if result.is_ok() {
        let mut stdout = io::stdout().lock();
        if stdout.write_all(ctx.out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
            return ExitCode::from(1);
        }
    } else {
        eprintln!("pdlog: {}: {}", status, error.as_deref().unwrap_or(""));
    }
    let record = RunRecord {
        schema: SCHEMA_VERSION,
        subcommand,
        argv: std::env::args().skip(1).collect(),
        seed: ctx.seed,
        jobs: cli.jobs,
        graph_digest: ctx.graph_digest.clone(),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        workspace_peak_bits: ctx.peak_bits,
        result_digest: hex::encode(Sha256::digest(ctx.out.as_bytes())),
        status: &status,
        error,
        diagnostics: &ctx.diagnostics,
    };
    let line = serde_json::to_string(&record).expect("run record serializes");
    if let Err(e) = emit_record(cli.stats.as_deref(), &line) {
        eprintln!("pdlog: cannot write run record: {e}");
        return ExitCode::from(code.max(1));
    }
    ExitCode::from(code)
}

fn emit_record(path: Option<&FsPath>, line: &str) -> io::Result<()> {
    match path {
        Some(p) => {
            let mut f = OpenOptions::new().create(true).append(true).open(p)?;
            writeln!(f, "{line}")
        }
        None => writeln!(io::stderr(), "{line}"),
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Gen(_) => "gen",
        Command::Solve(_) => "solve",
        Command::Replay(_) => "replay",
        Command::Verify(_) => "verify",
        Command::Entropy(_) => "entropy",
        Command::Reduce(_) => "reduce",
        Command::Oracle(OracleCommand::Pk { .. }) => "oracle pk",
        Command::Oracle(OracleCommand::Connected { .. }) => "oracle connected",
        Command::Oracle(OracleCommand::Validate { .. }) => "oracle validate",
        Command::Oracle(OracleCommand::Enumerate { .. }) => "oracle enumerate",
        Command::Estimate(_) => "estimate pk",
        Command::Cycles(_) => "cycles",
        Command::Token(TokenCommand::Make { .. }) => "token make",
        Command::Token(TokenCommand::Use { .. }) => "token use",
        Command::Bench(_) => "bench",
    }
}

fn run(command: &Command, ctx: &mut Ctx) -> Result<(), CliError> {
    let budget = OracleBudget::from_env()?;
    match command {
        Command::Gen(a) => gen(a, ctx),
        Command::Solve(a) => solve(a, ctx),
        Command::Replay(a) => replay(a, ctx),
        Command::Verify(a) => {
            ctx.seed = Some(a.seed);
            let runner = make_runner(&a.instance, ctx)?;
            let stats = measure_runner(runner.as_ref(), a.trials, Seed(a.seed))?;
            ctx.line(serde_json::to_string(&stats).expect("stats serialize"));
            Ok(())
        }
        Command::Entropy(a) => entropy(a, ctx),
        Command::Reduce(a) => reduce(a, &budget, ctx),
        Command::Oracle(o) => oracle(o, &budget, ctx),
        Command::Estimate(EstimateCommand::Pk {
            graph,
            s,
            t,
            k,
            estimator,
            seed,
        }) => {
            ctx.seed = Some(*seed);
            let g = ctx.load(graph)?;
            let mut walks = substream(Seed(*seed), WALKS_LABEL);
            let est = estimate_pk(&g, *s, *t, *k, &estimator.config()?, &mut walks)?;
            ctx.line(format!("{} {}", est.hits, est.samples));
            Ok(())
        }
        Command::Cycles(a) => cycles(a, ctx),
        Command::Token(t) => token(t, ctx),
        Command::Bench(a) => bench(a, ctx),
    }
}

fn gen(a: &GenArgs, ctx: &mut Ctx) -> Result<(), CliError> {
    ctx.seed = Some(a.seed);
    let mut st = substream(Seed(a.seed), "gen");
    if let Some(k) = a.mixing {
        let (g, s, t) = poly_mixing(a.n, k, &mut st, 10_000)?;
        ctx.line(format!("# source {s} target {t} mixing {k}"));
        ctx.out.push_str(&g.to_text());
        return Ok(());
    }
    let family: Family = a.family.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let g = family.generate(a.n, a.m, &mut st)?;
    ctx.out.push_str(&g.to_text());
    Ok(())
}

fn swfp_instance(inst: &InstanceArgs, g: Graph) -> Result<SwfpInstance, CliError> {
    let k = inst
        .k
        .ok_or_else(|| CliError::Usage("--k is required for the short-walk solver".into()))?;
    Ok(SwfpInstance::new(g, inst.s, inst.t, k)?)
}

fn make_runner(inst: &InstanceArgs, ctx: &mut Ctx) -> Result<Box<dyn Runner>, CliError> {
    let g = ctx.load(&inst.graph)?;
    Ok(match inst.alg {
        Alg::Swfp => Box::new(SwfpRunner {
            instance: swfp_instance(inst, g)?,
            options: SwfpOptions::new(inst.estimator.config()?),
        }),
        Alg::Undirected => Box::new(UndirectedRunner {
            graph: g,
            s: inst.s,
            t: inst.t,
            connectivity: ConnectivityConfig::default(),
        }),
        Alg::Eulerian => Box::new(EulerianRunner {
            graph: g,
            s: inst.s,
            t: inst.t,
            options: EulerianOptions {
                connectivity: ConnectivityConfig::default(),
                membership: inst.membership.into(),
            },
        }),
    })
}

fn write_trace<T: Serialize>(path: &FsPath, moves: &[T]) -> Result<(), CliError> {
    let mut text = String::new();
    for (i, m) in moves.iter().enumerate() {
        let mut v = serde_json::to_value(m).expect("move serializes");
        v["move"] = json!(i);
        text.push_str(&serde_json::to_string(&v).expect("move serializes"));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn swfp_run(
    ctx: &mut Ctx,
    inst: &SwfpInstance,
    opts: &SwfpOptions,
    threshold: Threshold,
    walk_seed: Seed,
    emit_edges: bool,
) -> Result<(), CliError> {
    let meter = WorkspaceMeter::new();
    let mut walks = substream(walk_seed, WALKS_LABEL);
    let report = run_with_threshold(inst, opts, threshold, &mut walks, &meter)?;
    ctx.peak_bits = Some(meter.peak_bits());
    ctx.diagnostics.push(json!({
        "threshold_index": report.threshold.index.to_string(),
        "stalls": report.stalls,
        "estimates": report.estimates,
        "walk_samples": report.walk_samples,
    }));
    for d in &report.diagnostics {
        ctx.diagnostics.push(serde_json::to_value(d).expect("diagnostic serializes"));
    }
    if !report.success {
        return Err(CliError::Failure {
            name: "Stalled",
            message: format!("walk ended at {} instead of {}", report.path.end(), inst.t),
        });
    }
    ctx.print_path(&report.path, emit_edges);
    Ok(())
}

fn solve(a: &SolveArgs, ctx: &mut Ctx) -> Result<(), CliError> {
    let inst = &a.instance;
    ctx.seed = Some(a.seed);
    let g = ctx.load(&inst.graph)?;
    let seed = Seed(a.seed);
    match inst.alg {
        Alg::Swfp => {
            let sw = swfp_instance(inst, g)?;
            let mut opts = SwfpOptions::new(inst.estimator.config()?);
            opts.check_grid = a.check_grid;
            let threshold = sample_threshold(sw.graph.n(), sw.k, &mut substream(seed, THRESHOLD_LABEL));
            swfp_run(ctx, &sw, &opts, threshold, seed, a.emit_edges)
        }
        Alg::Undirected => {
            let meter = WorkspaceMeter::new();
            let mut walks = substream(seed, WALKS_LABEL);
            let run = find_path_undirected_with(&g, inst.s, inst.t, ConnectivityConfig::default(), &mut walks, &meter)?;
            ctx.peak_bits = Some(meter.peak_bits());
            ctx.diagnostics.push(serde_json::to_value(run.trace.counters).expect("counters serialize"));
            if let Some(p) = &a.trace {
                write_trace(p, &run.trace.moves)?;
            }
            ctx.print_path(&run.path, a.emit_edges);
            Ok(())
        }
        Alg::Eulerian => {
            let meter = WorkspaceMeter::new();
            let mut walks = substream(seed, WALKS_LABEL);
            let opts = EulerianOptions {
                connectivity: ConnectivityConfig::default(),
                membership: inst.membership.into(),
            };
            let run = find_path_eulerian_with(&g, inst.s, inst.t, &opts, &mut walks, &meter)?;
            ctx.peak_bits = Some(meter.peak_bits());
            ctx.diagnostics.push(json!({
                "counters": run.trace.counters,
                "membership_scans": run.trace.membership_scans,
            }));
            if let Some(p) = &a.trace {
                write_trace(p, &run.trace.moves)?;
            }
            ctx.print_path(&run.path, a.emit_edges);
            Ok(())
        }
    }
}

fn replay(a: &ReplayArgs, ctx: &mut Ctx) -> Result<(), CliError> {
    let inst = &a.instance;
    if !matches!(inst.alg, Alg::Swfp) {
        return Err(CliError::Usage("replay applies to the short-walk solver only".into()));
    }
    ctx.seed = Some(a.seed2);
    let g = ctx.load(&inst.graph)?;
    let sw = swfp_instance(inst, g)?;
    let index = a
        .token
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("threshold index {:?} is not a decimal integer", a.token)))?;
    let threshold = Threshold::new(sw.grid(), index)?;
    let opts = SwfpOptions::new(inst.estimator.config()?);
    swfp_run(ctx, &sw, &opts, threshold, Seed(a.seed2), a.emit_edges)
}

fn entropy(a: &EntropyArgs, ctx: &mut Ctx) -> Result<(), CliError> {
    ctx.seed = Some(a.seed);
    if let Some(Stub::Coin) = a.stub {
        let mut st = substream(Seed(a.seed), "stub/coin");
        let stats = measure(a.trials, |_| Ok(vec![st.take_bits(1) as u8]))?;
        ctx.line(serde_json::to_string(&json!({
            "distinct": stats.distinct,
            "entropy_bits": stats.entropy_bits,
            "modal_frequency": stats.modal_frequency,
            "trials": stats.trials,
        }))
        .expect("json"));
        return Ok(());
    }
    let missing = |what: &str| CliError::Usage(format!("--{what} is required unless --stub is given"));
    let inst = InstanceArgs {
        alg: a.alg.ok_or_else(|| missing("alg"))?,
        graph: GraphArg {
            graph: a.graph.clone().ok_or_else(|| missing("graph"))?,
        },
        s: a.s.ok_or_else(|| missing("s"))?,
        t: a.t.ok_or_else(|| missing("t"))?,
        k: a.k,
        estimator: a.estimator.clone(),
        membership: MembershipArg::Cached,
    };
    let runner = make_runner(&inst, ctx)?;
    let stats = measure_runner(runner.as_ref(), a.trials, Seed(a.seed))?;
    let mut v = json!({
        "distinct": stats.distinct,
        "entropy_bits": stats.entropy_bits,
        "failures": stats.failures,
        "modal_frequency": stats.modal_frequency,
        "trials": stats.trials,
    });
    if let (Alg::Swfp, Some(k)) = (inst.alg, inst.k) {
        // Outputs are determined by the threshold index up to estimation
        // error, so the support is at most the grid size.
        let n = ctx_graph_n(ctx, &inst)?;
        let support = (k as f64 * n as f64).powi(2);
        v["support_bound"] = json!(support);
        v["entropy_bound_bits"] = json!(support.log2());
    }
    ctx.line(serde_json::to_string(&v).expect("json"));
    Ok(())
}

fn ctx_graph_n(ctx: &mut Ctx, inst: &InstanceArgs) -> Result<usize, CliError> {
    Ok(ctx.load(&inst.graph)?.n())
}

fn reduce(a: &ReduceArgs, budget: &OracleBudget, ctx: &mut Ctx) -> Result<(), CliError> {
    ctx.seed = Some(a.seed);
    let g = ctx.load(&a.graph)?;
    let x = a.x.unwrap_or_else(|| default_x(&g, a.s, a.t, a.k));
    let li = build_layered(&g, a.s, a.t, a.k, x, budget)?;
    let meta = serde_json::to_string(&li.meta()).expect("meta serializes");
    match &a.out {
        Some(out) => {
            fs::write(out, li.graph.to_text())?;
            let mut sidecar = out.clone().into_os_string();
            sidecar.push(".json");
            fs::write(PathBuf::from(sidecar), format!("{meta}\n"))?;
            ctx.line(meta);
        }
        None if !a.solve => ctx.out.push_str(&li.graph.to_text()),
        None => ctx.line(meta),
    }
    if a.solve {
        let inst = li.to_swfp()?;
        let opts = SwfpOptions::new(a.estimator.config()?);
        let report = pdlog_core::solve(&inst, &opts, Seed(a.seed))?;
        let pieces = li.project_path(&report.path)?;
        let found = pieces.iter().find(|p| validate_path(&g, p, a.s, a.t));
        let Some(p) = found else {
            return Err(CliError::Failure {
                name: "NoPath",
                message: format!("none of {} projected segments is an s-t path", pieces.len()),
            });
        };
        ctx.line(p.vertex_line());
    }
    Ok(())
}

fn read_path_text(arg: &Option<String>) -> Result<String, CliError> {
    match arg {
        Some(p) => Ok(p.clone()),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s.lines().next().unwrap_or("").to_string())
        }
    }
}

fn oracle(o: &OracleCommand, budget: &OracleBudget, ctx: &mut Ctx) -> Result<(), CliError> {
    match o {
        OracleCommand::Pk { graph, s, t, k } => {
            let g = ctx.load(graph)?;
            ctx.line(to_text(&exact_pk(&g, *s, *t, *k, budget)?));
        }
        OracleCommand::Connected {
            graph,
            a,
            b,
            above,
            cycles,
            directed,
        } => {
            let g = ctx.load(graph)?;
            let residual = Residual {
                vertex_cut: above.map(|k| (k, *a, *b)),
                deleted_cycles: *cycles,
            };
            let yes = bfs_connected(&g, *a, *b, &residual, *directed, budget)?;
            ctx.line(if yes { "true" } else { "false" });
        }
        OracleCommand::Validate { graph, s, t, path } => {
            let g = ctx.load(graph)?;
            let text = read_path_text(path)?;
            let p = parse_vertices(text.as_bytes())
                .ok_or_else(|| CliError::Usage(format!("path {text:?} is not a list of vertex ids")))?;
            let ok = path_from_vertices(&g, &p).is_some_and(|p| validate_path(&g, &p, *s, *t));
            if !ok {
                return Err(CliError::Failure {
                    name: "InvalidPath",
                    message: format!("{text:?} is not an s-t path"),
                });
            }
            ctx.line("valid");
        }
        OracleCommand::Enumerate { graph, s, t, max_len } => {
            let g = ctx.load(graph)?;
            let paths = enumerate_st_paths(&g, *s, *t, *max_len, budget)?;
            for p in &paths {
                ctx.line(p.vertex_line());
            }
            ctx.diagnostics.push(json!({ "paths": paths.len() }));
        }
    }
    Ok(())
}

fn cycles(a: &CyclesArgs, ctx: &mut Ctx) -> Result<(), CliError> {
    let g = ctx.load(&a.graph)?;
    let perm = EdgePermutation::new(&g)?;
    let count = a.k.unwrap_or(g.m()).min(g.m());
    for j in 1..=count {
        let edges: Vec<usize> = perm.orbit(j - 1).collect();
        let tails: Vec<String> = edges.iter().map(|&e| perm.tail(e).to_string()).collect();
        let ids: Vec<String> = edges.iter().map(|e| e.to_string()).collect();
        ctx.line(format!("{j}: edges {} vertices {}", ids.join(" "), tails.join(" ")));
    }
    Ok(())
}

fn parse_token(text: &str, bits: u64) -> Result<ReproToken, CliError> {
    let text = text.trim();
    if bits == 0 && (text.is_empty() || text == "-") {
        return Ok(ReproToken::empty());
    }
    Ok(ReproToken::from_hex(text, bits)?)
}

fn token(t: &TokenCommand, ctx: &mut Ctx) -> Result<(), CliError> {
    match t {
        TokenCommand::Make { instance, amp, seed } => {
            ctx.seed = Some(*seed);
            let runner = make_runner(instance, ctx)?;
            let token = algorithm_a(runner.as_ref(), &amp.amplification(), Seed(*seed))?;
            ctx.diagnostics.push(json!({ "token_bits": token.bits }));
            ctx.line(token.to_hex());
        }
        TokenCommand::Use {
            instance,
            amp,
            token,
            seed,
        } => {
            ctx.seed = Some(*seed);
            let runner = make_runner(instance, ctx)?;
            let token = parse_token(token, runner.token_bits())?;
            let out = algorithm_b(runner.as_ref(), &token, &amp.amplification(), Seed(*seed))?;
            if !runner.is_valid(&out) {
                return Err(CliError::Failure {
                    name: "InvalidPath",
                    message: "majority output is not a valid path".into(),
                });
            }
            ctx.line(String::from_utf8_lossy(&out));
        }
    }
    Ok(())
}

fn bench(a: &BenchArgs, ctx: &mut Ctx) -> Result<(), CliError> {
    ctx.seed = Some(a.seed);
    let suite: Suite = a.suite.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let mut cfg = BenchConfig::new(suite, a.sizes.clone());
    cfg.seeds = a.seeds;
    cfg.base_seed = Seed(a.seed);
    cfg.edge_factor = a.edge_factor;
    cfg.walk_len = a.walk_len;
    cfg.membership = a.membership.into();
    if let Some(f) = &a.family {
        cfg.family = Some(f.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?);
    }
    let rows: Vec<_> = run_suite(&cfg).into_iter().map(|(_, s)| s).collect();
    ctx.out.push_str(&to_csv(suite, &rows, a.wall_clock));
    if let Ok(slope) = summary_slope(&rows, |r| r.steps) {
        ctx.line(format!("# loglog slope of steps vs n: {slope:.4}"));
    }
    if suite == Suite::Eulerian {
        if let Ok(slope) = summary_slope(&rows, |r| r.work) {
            ctx.line(format!("# loglog slope of steps plus membership scans vs n: {slope:.4}"));
        }
    }
    ctx.diagnostics.push(serde_json::to_value(&rows).expect("rows serialize"));
    Ok(())
}
