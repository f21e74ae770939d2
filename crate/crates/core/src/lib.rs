//! Nonanticipative rate–distortion function of nonstationary sources on
//! finite alphabets.
//!
//! A source is a sequence of kernels `p_i(x_i | x^{i-1})`; a reproduction is
//! a causal policy `q_i(y_i | y^{i-1}, x^i)`. The rate of a policy is the
//! directed information `I(X^n -> Y^n)`, and the nonanticipative RDF is its
//! infimum under an average distortion constraint. [`solver`] computes the
//! optimal policy at a Lagrange multiplier `s <= 0` from a backward
//! recursion and tilted kernels, closed by a fixed point on the output
//! process.
//!
//! - [`model`]: alphabets, history codes, sources, distortion, policies.
//! - [`measures`]: joint/marginal laws, directed and mutual information,
//!   expected distortion, Markov-chain residuals.
//! - [`solver`]: backward recursion, tilted kernels, fixed point, multiplier
//!   search, curves, stationarity probe.
//! - [`baseline`]: classical Blahut–Arimoto, single-letter and block.
//! - [`oracle`]: grid brute force and an independent directed-information path.
//! - [`cli`]: config-driven runs and CSV/JSON output.
//!
//! All information quantities are in nats unless a function says otherwise.

pub mod baseline;
pub mod cli;
pub mod error;
pub mod measures;
pub mod model;
pub mod oracle;
pub mod solver;

pub use error::{RdfError, Result};
pub use measures::{InfoValue, JointLaw, MarginalProcess, McVariant};
pub use model::{
    CausalPolicy, DistortionSpec, HistoryCode, Horizon, Memory, SourceModel, StageAlphabets,
};
pub use solver::{fixed_point_solve, GTable, SolveResult, SolverConfig, TargetOutcome};
