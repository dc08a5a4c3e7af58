//! Auditing toolkit for heterogeneous model ecosystems.
//!
//! Given matched scalarised response logs of a target model and its peers,
//! this crate measures how much of the target's behaviour cannot be
//! reproduced by any stochastic convex mixture of the peers. The headline
//! statistic is the mean absolute peer-inexpressible residual, estimated on
//! an honest fit/eval split with bootstrap confidence intervals.
//!
//! Modules map onto the stages of an audit:
//!
//! - [`model`] — shared domain types: response matrices, honest splits,
//!   fit configuration.
//! - [`simplex`] — the numerical kernel: exact simplex projection,
//!   simplex-constrained least squares, convex-hull distance, and
//!   unconstrained span regression.
//! - [`disco`] — weight fitting, residual evaluation, bootstrap intervals,
//!   anchor-based estimates with their design error bound, and routing
//!   interpretations of the fitted weights.
//! - [`active`] — active auditing in a local linear structural model:
//!   noiseless recovery, the repeated-query decision protocol, query
//!   budgets, and Monte-Carlo harnesses for the information-theoretic
//!   floors.
//! - [`synth`] — seeded generators for controlled ecosystems: saturation
//!   sweeps, clone/margin targets, the observational non-identifiability
//!   pair and the uniqueness-vs-robustness pair.
//! - [`attribution`] — exact Shapley values over model coalitions and the
//!   attribution-vs-audit divergence report.
//! - [`governance`] — substitution impact, greedy pruning with
//!   consolidation curves and tail-risk tracking.
//! - [`experiments`] — end-to-end experiment drivers shared by the CLI and
//!   the acceptance suite.
//!
//! All randomness descends from a single 64-bit seed through the
//! counter-based generators in [`rng`]; every result in this crate is
//! bit-reproducible given the seed.

pub mod active;
pub mod attribution;
pub mod disco;
pub mod error;
pub mod experiments;
pub mod governance;
pub mod model;
pub mod rng;
pub mod simplex;
pub mod stats;
pub mod synth;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
