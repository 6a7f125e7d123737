//! Lower-bound laboratory for metrical service systems (MSS), metrical task
//! systems (MTS), and the (n-1)-server problem.
//!
//! The crate has three layers:
//!
//! - **Metric spaces** ([`metrics`]): recursive diamond families (a cycle of
//!   copies of the previous level glued at terminals), the bounded-width
//!   variant used for layered graph traversal, ultrametrics given as
//!   hierarchically separated trees, and a brute-force materialized-graph
//!   oracle for small instances. Distances are exact rationals and are
//!   evaluated lazily: a point is a hierarchical address, never a row in a
//!   materialized matrix.
//! - **Games and algorithms** ([`games`], [`algorithms`]): engines for MSS,
//!   MTS and the (n-1)-server anti-server view with escape-price semantics,
//!   translations between the three problems, exact offline optimum by
//!   dynamic programming, and a small zoo of online algorithms to race.
//! - **Adversaries** ([`adversary`]): randomized hard request-sequence
//!   generators — the three-stage construction on basic diamonds, its
//!   width-bounded variant, the chunked construction with the martingale
//!   stopping rule and subchunk combiner, and the universal construction on
//!   ultrametrics — plus the experiment harness ([`harness`]) that measures
//!   empirical competitive ratios against them.
//!
//! Everything is deterministic given a seed; the harness parallelizes over
//! seeds with a fixed reduction order so aggregate output is reproducible
//! bit-for-bit.

pub mod adversary;
pub mod algorithms;
pub mod games;
pub mod harness;
pub mod metrics;
pub mod rational;
pub mod requests;

pub use metrics::{CopySelector, MetricSpace, PointAddr, Side, SpaceKind};
pub use rational::{frac, len, Len};
pub use requests::{Polarity, RequestSeq, RequestSet};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("address {addr} is not valid here: {reason}")]
    BadAddress { addr: String, reason: String },
    #[error("materialization would exceed the vertex cap ({count} > {cap})")]
    CapExceeded { count: u64, cap: u64 },
    #[error("request at step {step} cannot be served: {reason}")]
    Infeasible { step: usize, reason: String },
    #[error("illegal move at step {step}: {reason}")]
    IllegalMove { step: usize, reason: String },
    #[error("dynamic program budget exceeded ({0} transitions)")]
    BudgetExceeded(u64),
    #[error("child chunk generator exhausted during stage 2a")]
    GeneratorExhausted,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
