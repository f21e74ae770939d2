//! First-order optimality probe along random feasible directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SolveResult;
use crate::error::Result;
use crate::measures::{directed_information, expected_distortion};
use crate::model::{CausalPolicy, DistortionSpec, SourceModel};

/// `I(X^n -> Y^n) - s * E d_{0,n}` of `policy`.
pub fn lagrangian(
    source: &SourceModel,
    spec: &DistortionSpec,
    policy: &CausalPolicy,
    s: f64,
) -> Result<f64> {
    let di = directed_information(source, policy)?.nats();
    let d = expected_distortion(source, policy, spec)?;
    Ok(di - s * d.total)
}

/// `L(base) - L(base + eps (toward - base))`.
pub fn perturbation_decrease(
    source: &SourceModel,
    spec: &DistortionSpec,
    s: f64,
    base: &CausalPolicy,
    toward: &CausalPolicy,
    eps: f64,
) -> Result<f64> {
    let moved = base.mix(toward, eps)?;
    Ok(lagrangian(source, spec, base, s)? - lagrangian(source, spec, &moved, s)?)
}

fn random_policy(template: &CausalPolicy, rng: &mut impl Rng) -> Result<CausalPolicy> {
    CausalPolicy::from_fn(template.alphabets().clone(), |_, _, _, row| {
        // uniform on the simplex
        row.iter_mut()
            .for_each(|v| *v = -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln());
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    })
}

/// Largest Lagrangian decrease over `n_perturbations` random directions
/// `q - q*` at step `epsilon`; nonpositive up to rounding at an optimum.
pub fn verify_stationarity(
    source: &SourceModel,
    spec: &DistortionSpec,
    result: &SolveResult,
    n_perturbations: usize,
    epsilon: f64,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = lagrangian(source, spec, &result.policy, result.s)?;
    let mut worst = if n_perturbations == 0 {
        0.0
    } else {
        f64::NEG_INFINITY
    };
    for _ in 0..n_perturbations {
        let q = random_policy(&result.policy, &mut rng)?;
        let moved = result.policy.mix(&q, epsilon)?;
        worst = f64::max(worst, base - lagrangian(source, spec, &moved, result.s)?);
    }
    Ok(worst)
}
