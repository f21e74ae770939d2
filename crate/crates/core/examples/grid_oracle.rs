//! Bracket the solver with the brute-force grid search on a two-stage source.
//! Each grid refines the previous one, so the gap cannot grow.

use causal_rdf::oracle::{brute_force_lagrangian_min, GridSpec};
use causal_rdf::{fixed_point_solve, DistortionSpec, Horizon, SolverConfig, SourceModel};

fn main() -> causal_rdf::Result<()> {
    let source = SourceModel::binary_markov(Horizon::new(2)?, 0.3)?;
    let spec = DistortionSpec::hamming(2);
    for s in [-1.0, -2.0, -4.0] {
        let r = fixed_point_solve(&source, &spec, &SolverConfig::with_s(s))?;
        print!("s = {s}: solver {:.8}", r.lagrangian());
        for res in [0.1, 0.05, 0.025] {
            let g = brute_force_lagrangian_min(&source, &spec, s, &GridSpec::with_resolution(res))?;
            print!("  grid {res}: +{:.2e}", g.value - r.lagrangian());
        }
        println!();
    }
    Ok(())
}
