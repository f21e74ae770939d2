use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum RdfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("table of {needed} entries exceeds the budget of {budget}")]
    Budget { needed: u128, budget: u128 },

    #[error("invalid source: {}", format_violations(.0))]
    InvalidSource(Vec<Violation>),

    #[error("degenerate marginal at stage {stage}, history code {history}")]
    DegenerateMarginal { stage: usize, history: usize },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("solve at s = {s} did not converge (residual {residual:e} after {sweeps} sweeps)")]
    NotConverged {
        s: f64,
        sweeps: usize,
        residual: f64,
    },

    #[error("multiplier search exceeded |s| = {cap:e} without reaching distortion {target}")]
    MultiplierCap { cap: f64, target: f64 },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, RdfError>;
