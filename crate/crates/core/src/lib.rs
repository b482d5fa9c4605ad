//! Pseudo-deterministic and reproducible path finding in small workspace.
//!
//! Solvers for short-walk path finding, undirected and Eulerian s-t
//! paths, a token-and-replay reproducibility harness, the layered-graph
//! reduction, and exact oracles to check them against.

pub mod error;
pub mod eulerian;
pub mod gen;
pub mod graph;
pub mod meter;
pub mod oracles;
pub mod ratio;
pub mod reduction;
pub mod repro;
pub mod rng;
pub mod scaling;
pub mod swfp;
pub mod undirected;
pub mod walk;

pub use error::{Error, Result};
pub use eulerian::{find_path_eulerian, EulerianOptions, EulerianRun, Membership};
pub use gen::Family;
pub use graph::{load_graph, parse_graph, Adj, Edge, EdgeId, Graph, GraphKind, Path, VertexId};
pub use meter::WorkspaceMeter;
pub use oracles::OracleBudget;
pub use ratio::{parse_rational, Rational};
pub use reduction::{build_layered, LayeredInstance};
pub use repro::{Amplification, ReproToken, Runner};
pub use rng::{substream, Seed, Stream};
pub use swfp::{solve, replay, SolveReport, SwfpInstance, SwfpOptions, Threshold};
pub use undirected::{find_path_undirected, UndirectedRun};
pub use walk::{ConnectivityConfig, EstimatorConfig, EstimatorMode};
