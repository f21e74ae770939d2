//! A nonstationary source with stage-dependent alphabets and a distortion
//! that looks at the whole history.

use causal_rdf::model::Memory;
use causal_rdf::{
    fixed_point_solve, DistortionSpec, Horizon, SolverConfig, SourceModel, StageAlphabets,
};

fn main() -> causal_rdf::Result<()> {
    // stage 0: ternary source, binary reproduction; stage 1: binary, ternary
    let ab = StageAlphabets::new(Horizon::new(2)?, vec![3, 2], vec![2, 3])?;
    let source = SourceModel::new(
        ab.clone(),
        Memory::Full,
        vec![
            vec![0.5, 0.3, 0.2],
            // one row per x_0
            vec![0.9, 0.1, 0.5, 0.5, 0.2, 0.8],
        ],
    )?;

    // rho_{0,0}(x_0, y_0) = |x_0 / 2 - y_0|
    let t0 = (0..3)
        .flat_map(|x| (0..2).map(move |y| (x as f64 / 2.0 - y as f64).abs()))
        .collect();
    // rho_{0,1}: reproduce x_1, but extra cost for y_1 = 2 unless x_0 = 2
    let mut t1 = vec![0.0; ab.x_histories(2) * ab.y_histories(2)];
    for x0 in 0..3 {
        for x1 in 0..2 {
            for y0 in 0..2 {
                for y1 in 0..3 {
                    let xc = x0 * 2 + x1;
                    let yc = y0 * 3 + y1;
                    let miss = if y1 == x1 { 0.0 } else { 1.0 };
                    let extra = if y1 == 2 && x0 != 2 { 0.5 } else { 0.0 };
                    t1[xc * ab.y_histories(2) + yc] = miss + extra;
                }
            }
        }
    }
    let spec = DistortionSpec::stage_tables(&ab, vec![t0, t1])?;

    for s in [-0.5, -2.0, -8.0] {
        let r = fixed_point_solve(&source, &spec, &SolverConfig::with_s(s))?;
        println!(
            "s = {s:>4}: D = {:.5}, R = {:.5} nats, {} sweeps",
            r.distortion_total, r.rate_nats, r.sweeps_used
        );
    }
    Ok(())
}
