//! Length-constrained expander decompositions of capacitated, length-weighted graphs.
//!
//! The crate is organised bottom-up: [`graph`] and [`flow`] hold the value types,
//! [`oracle`] holds exact small-instance references, and the remaining modules
//! build the decomposition pipeline on top of them.

pub mod blocker;
pub mod cover;
pub mod cutmatch;
pub mod driver;
pub mod flow;
pub mod gen;
pub mod graph;
pub mod io;
pub mod lp;
pub mod maxflow;
pub mod mwu;
pub mod oracle;
pub mod rational;
pub mod router;
pub mod rng;
pub mod sparse_cut;
pub mod union;

pub use graph::{Demand, Distance, Graph, MovingCut, NodeWeighting};
pub use rational::Q;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("path enumeration exceeded the cap: {count} paths (cap {cap})")]
    PathExplosion { count: usize, cap: usize },
    #[error("iteration cap reached: {0}")]
    IterationCap(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
