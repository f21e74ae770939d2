mod common;

use causal_rdf::measures::{directed_information, joint_law};
use causal_rdf::model::{DistortionSpec, Horizon, SourceModel};
use causal_rdf::oracle::{brute_force_lagrangian_min, exhaustive_directed_info, GridSpec};
use causal_rdf::solver::{fixed_point_solve, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn directed_information_two_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let ab = common::random_alphabets(&mut rng, n, 3);
        let src = common::random_source(&mut rng, &ab);
        let q = common::random_policy(&mut rng, &ab);
        let a = directed_information(&src, &q).unwrap().nats();
        let b = exhaustive_directed_info(&joint_law(&src, &q).unwrap()).nats();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn grid_brackets_the_solver_on_the_fair_source() {
    let src = SourceModel::iid(Horizon::new(2).unwrap(), &[0.5, 0.5]).unwrap();
    let spec = DistortionSpec::hamming(2);
    let r = fixed_point_solve(&src, &spec, &SolverConfig::with_s(-2.0)).unwrap();
    let g = brute_force_lagrangian_min(&src, &spec, -2.0, &GridSpec::default()).unwrap();
    assert!(g.value >= r.lagrangian() - 1e-9);
    assert!(g.value <= r.lagrangian() + 5e-3);
}

#[test]
fn grid_value_does_not_rise_as_the_step_halves() {
    let src = SourceModel::binary_markov(Horizon::new(2).unwrap(), 0.3).unwrap();
    let spec = DistortionSpec::hamming(2);
    let mut last = f64::INFINITY;
    for res in [0.5, 0.25, 0.125] {
        let g =
            brute_force_lagrangian_min(&src, &spec, -1.5, &GridSpec::with_resolution(res)).unwrap();
        assert!(g.value <= last + 1e-12, "{res}: {} > {last}", g.value);
        last = g.value;
    }
}
