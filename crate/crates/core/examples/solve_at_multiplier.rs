//! Optimal causal reproduction of a binary Markov source at a fixed slope.

use causal_rdf::measures::InfoValue;
use causal_rdf::{fixed_point_solve, DistortionSpec, Horizon, SolverConfig, SourceModel};

fn main() -> causal_rdf::Result<()> {
    let source = SourceModel::binary_markov(Horizon::new(3)?, 0.3)?;
    let spec = DistortionSpec::hamming(2);
    let r = fixed_point_solve(&source, &spec, &SolverConfig::with_s(-2.0))?;

    println!(
        "s = {}: D = {:.6} per symbol, R = {:.6} nats ({:.6} bits) over {} stages",
        r.s,
        r.distortion_per_symbol,
        r.rate_nats,
        InfoValue::from_nats(r.rate_nats).bits(),
        r.n_stages()
    );
    println!(
        "fixed point: {} sweeps, residual {:.2e}",
        r.sweeps_used, r.residual
    );

    // q_i(y_i | y^{i-1}, x^i), rows in (y^{i-1}, x^i) order
    for (i, k) in r.policy.kernels().iter().enumerate() {
        let rows: Vec<String> = k.chunks(2).map(|c| format!("{:.4}", c[0])).collect();
        println!("stage {i}: P(Y=0 | row) = [{}]", rows.join(", "));
    }
    Ok(())
}
