//! Rate at a prescribed per-symbol distortion, including the boundary cases.

use causal_rdf::solver::{max_distortion, min_distortion, solve_for_target_distortion};
use causal_rdf::{DistortionSpec, Horizon, SolverConfig, SourceModel, TargetOutcome};

fn main() -> causal_rdf::Result<()> {
    let source = SourceModel::binary_markov(Horizon::new(4)?, 0.2)?;
    let spec = DistortionSpec::hamming(2);
    let cfg = SolverConfig::default();
    println!(
        "achievable distortion: [{}, {}]",
        min_distortion(&source, &spec)?,
        max_distortion(&source, &spec)?
    );

    for d in [0.0, 0.05, 0.1, 0.2, 0.5] {
        match solve_for_target_distortion(&source, &spec, d, &cfg)? {
            TargetOutcome::Achieved(r) => println!(
                "D = {d:<4}  R = {:.6} nats/symbol  (s = {:.4}, achieved D = {:.8})",
                r.rate_per_symbol(),
                r.s,
                r.distortion_per_symbol
            ),
            TargetOutcome::Infeasible { .. } => println!("D = {d:<4}  infeasible"),
        }
    }

    // every mismatch costs at least 0.25, so D = 0.1 cannot be reached
    let offset = DistortionSpec::single_letter(&[vec![0.25, 1.0], vec![1.0, 0.25]])?;
    let out = solve_for_target_distortion(&source, &offset, 0.1, &cfg)?;
    println!("offset distortion at D = 0.1: rate {}", out.rate_nats());
    Ok(())
}
