//! Checks on a solution: causality residuals, first-order optimality, and
//! the comparison with the classical (noncausal) block rate.

use causal_rdf::baseline::{classical_block_rdf, BaConfig};
use causal_rdf::measures::{directed_information, joint_law, markov_chain_check};
use causal_rdf::solver::verify_stationarity;
use causal_rdf::{
    fixed_point_solve, DistortionSpec, Horizon, McVariant, SolverConfig, SourceModel,
};

fn main() -> causal_rdf::Result<()> {
    let source = SourceModel::binary_markov(Horizon::new(3)?, 0.25)?;
    let spec = DistortionSpec::hamming(2);
    let r = fixed_point_solve(&source, &spec, &SolverConfig::with_s(-2.5))?;

    let joint = joint_law(&source, &r.policy)?;
    for v in McVariant::ALL {
        println!("{v:?}: residual {:.2e}", markov_chain_check(&joint, v));
    }

    let di = directed_information(&source, &r.policy)?.nats();
    println!(
        "closed-form rate {:.12}, directed information {:.12}",
        r.rate_nats, di
    );

    let worst = verify_stationarity(&source, &spec, &r, 100, 1e-3, 42)?;
    println!("largest Lagrangian decrease over 100 random directions: {worst:.2e}");

    let classical = classical_block_rdf(
        &source,
        &spec,
        r.distortion_per_symbol,
        &BaConfig::default(),
    )?;
    println!(
        "at D = {:.6}: causal {:.6} >= classical {:.6} nats",
        r.distortion_per_symbol, r.rate_nats, classical
    );
    Ok(())
}
