//! Trace the curve by sweeping the multiplier and print it as CSV.

use causal_rdf::cli::{render_csv, Units};
use causal_rdf::solver::trace_curve;
use causal_rdf::{DistortionSpec, Horizon, SolverConfig, SourceModel};

fn main() -> causal_rdf::Result<()> {
    let source = SourceModel::binary_markov(Horizon::new(3)?, 0.3)?;
    let spec = DistortionSpec::hamming(2);
    let s_values: Vec<f64> = (0..20).map(|k| -0.25 * k as f64).collect();
    let curve = trace_curve(&source, &spec, &s_values, &SolverConfig::default())?;

    print!("{}", render_csv(&curve, Units::Bits));
    eprintln!(
        "monotone: {}, convex: {}",
        curve.is_monotone(),
        curve.is_convex()
    );
    for (s, slope) in curve.central_slopes() {
        eprintln!("s = {s:>5}: dR/dD = {slope:.4}");
    }
    Ok(())
}
