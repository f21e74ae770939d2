#![allow(dead_code)]

use causal_rdf::model::{CausalPolicy, Horizon, Memory, SourceModel, StageAlphabets};
use rand::Rng;

pub fn simplex(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| 0.02 + rng.gen::<f64>()).collect();
    let t: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= t);
    v
}

pub fn random_alphabets(rng: &mut impl Rng, n: usize, max: usize) -> StageAlphabets {
    let xs = (0..n).map(|_| rng.gen_range(2..=max)).collect();
    let ys = (0..n).map(|_| rng.gen_range(2..=max)).collect();
    StageAlphabets::new(Horizon::new(n).unwrap(), xs, ys).unwrap()
}

pub fn random_source(rng: &mut impl Rng, ab: &StageAlphabets) -> SourceModel {
    let kernels = (0..ab.n_stages())
        .map(|i| {
            (0..ab.x_histories(i))
                .flat_map(|_| simplex(rng, ab.x_size(i)))
                .collect()
        })
        .collect();
    SourceModel::new(ab.clone(), Memory::Full, kernels).unwrap()
}

pub fn random_policy(rng: &mut impl Rng, ab: &StageAlphabets) -> CausalPolicy {
    CausalPolicy::from_fn(ab.clone(), |_, _, _, row| {
        let v = simplex(rng, row.len());
        row.copy_from_slice(&v);
    })
    .unwrap()
}

/// Causal conditionals `P(y_i | y^{i-1}, x^i)` of a joint law whose source
/// does not see the output; rows of null events are uniform.
pub fn policy_from_joint(joint: &causal_rdf::JointLaw) -> CausalPolicy {
    let ab = joint.alphabets().clone();
    let n = ab.n_stages();
    let (nx, ny) = (ab.x_histories(n), ab.y_histories(n));
    CausalPolicy::from_fn(ab.clone(), |i, yp, xc, row| {
        let (dx, dy) = (nx / ab.x_histories(i + 1), ny / ab.y_histories(i + 1));
        let m = row.len();
        let mut mass = vec![0.0; m];
        for x in 0..nx {
            if x / dx != xc {
                continue;
            }
            for y in 0..ny {
                let yi = y / dy;
                if yi / m == yp {
                    mass[yi % m] += joint.get(x, y);
                }
            }
        }
        let t: f64 = mass.iter().sum();
        for (r, v) in row.iter_mut().zip(&mass) {
            *r = if t > 0.0 { v / t } else { 1.0 / m as f64 };
        }
    })
    .unwrap()
}
