//! Per-symbol rate of the stationary Markov family as the horizon grows.

use causal_rdf::solver::rate_limit_estimate;
use causal_rdf::{DistortionSpec, Horizon, SolverConfig, SourceModel};

fn main() -> causal_rdf::Result<()> {
    let flip = 0.3;
    let rates = rate_limit_estimate(
        |n| SourceModel::binary_markov(Horizon::new(n)?, flip),
        &DistortionSpec::hamming(2),
        0.1,
        &[1, 2, 3, 4, 5, 6],
        &SolverConfig::default(),
    )?;
    let mut last = None;
    for h in &rates {
        let step = last.map_or(String::new(), |l: f64| {
            format!("  (change {:+.2e})", h.rate_per_symbol - l)
        });
        println!(
            "n = {}: {:.6} nats/symbol{step}",
            h.n_stages, h.rate_per_symbol
        );
        last = Some(h.rate_per_symbol);
    }
    Ok(())
}
