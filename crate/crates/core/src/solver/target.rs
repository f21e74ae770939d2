//! Multiplier search for a prescribed per-symbol distortion.

use super::{fixed_point_solve, GTable, SolveResult, SolverConfig};
use crate::error::{RdfError, Result};
use crate::measures::MarginalProcess;
use crate::model::{extend_source_law, CausalPolicy, DistortionSpec, SourceModel, StageCosts};

/// Result of [`solve_for_target_distortion`].
#[derive(Clone, Debug, PartialEq)]
pub enum TargetOutcome {
    Achieved(SolveResult),
    /// The target lies below the smallest distortion any causal policy reaches.
    Infeasible {
        min_distortion_per_symbol: f64,
    },
}

impl TargetOutcome {
    /// Total rate in nats; `+inf` when infeasible.
    pub fn rate_nats(&self) -> f64 {
        match self {
            Self::Achieved(r) => r.rate_nats,
            Self::Infeasible { .. } => f64::INFINITY,
        }
    }

    pub fn result(&self) -> Option<&SolveResult> {
        match self {
            Self::Achieved(r) => Some(r),
            Self::Infeasible { .. } => None,
        }
    }

    pub fn into_result(self) -> Option<SolveResult> {
        match self {
            Self::Achieved(r) => Some(r),
            Self::Infeasible { .. } => None,
        }
    }
}

/// Smallest per-symbol distortion of a reproduction that ignores the source,
/// with the optimal deterministic output (`choice[i][y^{i-1}] = y_i`).
fn best_blind_path(source: &SourceModel, costs: &StageCosts) -> (f64, Vec<Vec<usize>>) {
    let ab = source.alphabets();
    let n = ab.n_stages();
    // expected[i][y^i] = E rho_{0,i}(X^i, y^i)
    let mut mu = vec![1.0];
    let mut expected = Vec::with_capacity(n);
    for i in 0..n {
        mu = extend_source_law(source, i, &mu);
        let ny = ab.y_histories(i + 1);
        let mut e = vec![0.0; ny];
        for (xc, &p) in mu.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (yc, v) in e.iter_mut().enumerate() {
                *v += p * costs.get(i, xc, yc);
            }
        }
        expected.push(e);
    }
    let mut value = expected[n - 1].clone();
    let mut choice = vec![Vec::new(); n];
    for i in (0..n).rev() {
        let my = ab.y_size(i);
        let mut pick = Vec::with_capacity(ab.y_histories(i));
        let mut best = Vec::with_capacity(ab.y_histories(i));
        for chunk in value.chunks(my) {
            let (arg, v) = argmin(chunk);
            pick.push(arg);
            best.push(v);
        }
        choice[i] = pick;
        if i > 0 {
            value = best
                .iter()
                .zip(&expected[i - 1])
                .map(|(b, e)| b + e)
                .collect();
        } else {
            value = best;
        }
    }
    (value[0] / n as f64, choice)
}

fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter().copied().enumerate().fold(
        (0, f64::INFINITY),
        |acc, (k, x)| if x < acc.1 { (k, x) } else { acc },
    )
}

/// Per-symbol distortion at which the rate first reaches zero.
pub fn max_distortion(source: &SourceModel, spec: &DistortionSpec) -> Result<f64> {
    let costs = spec.expand(source.alphabets())?;
    Ok(best_blind_path(source, &costs).0)
}

/// Smallest per-symbol distortion reachable by any causal policy.
pub fn min_distortion(source: &SourceModel, spec: &DistortionSpec) -> Result<f64> {
    let ab = source.alphabets();
    let costs = spec.expand(ab)?;
    let n = ab.n_stages();
    // value over (x^i, y^{i-1}) after choosing y_i optimally, stage by stage backward
    let mut later: Option<Vec<f64>> = None;
    for i in (0..n).rev() {
        let my = ab.y_size(i);
        let (nx, nyp) = (ab.x_histories(i + 1), ab.y_histories(i));
        let mut cur = vec![0.0; nx * nyp];
        for xc in 0..nx {
            for yp in 0..nyp {
                let mut best = f64::INFINITY;
                for y in 0..my {
                    let yc = yp * my + y;
                    let mut v = costs.get(i, xc, yc);
                    if let Some(w) = &later {
                        let mx = ab.x_size(i + 1);
                        let nyc = ab.y_histories(i + 1);
                        let krow = source.kernel_row(i + 1, xc);
                        v += krow
                            .iter()
                            .enumerate()
                            .map(|(x, &p)| p * w[(xc * mx + x) * nyc + yc])
                            .sum::<f64>();
                    }
                    best = best.min(v);
                }
                cur[xc * nyp + yp] = best;
            }
        }
        later = Some(cur);
    }
    let w = later.expect("at least one stage");
    let total: f64 = source
        .kernel_row(0, 0)
        .iter()
        .zip(&w)
        .map(|(p, v)| p * v)
        .sum();
    Ok(total / n as f64)
}

/// Zero-rate solution: the best deterministic output path, ignoring the source.
pub fn zero_rate_solution(source: &SourceModel, spec: &DistortionSpec) -> Result<SolveResult> {
    let ab = source.alphabets();
    let costs = spec.expand(ab)?;
    let (d_max, choice) = best_blind_path(source, &costs);
    let policy = CausalPolicy::from_fn(ab.clone(), |i, yp, _, row| row[choice[i][yp]] = 1.0)?;
    let mut rows = Vec::with_capacity(ab.n_stages());
    for i in 0..ab.n_stages() {
        let my = ab.y_size(i);
        let mut r = vec![0.0; ab.y_histories(i) * my];
        for (yp, &y) in choice[i].iter().enumerate() {
            r[yp * my + y] = 1.0;
        }
        rows.push(r);
    }
    let nu = MarginalProcess::new(ab.clone(), rows)?;
    Ok(SolveResult {
        s: 0.0,
        policy,
        nu,
        g: GTable::zeros(ab.clone()),
        rate_nats: 0.0,
        distortion_total: d_max * ab.n_stages() as f64,
        distortion_per_symbol: d_max,
        sweeps_used: 0,
        converged: true,
        residual: 0.0,
    })
}

/// Finds `s` whose fixed point has per-symbol distortion within
/// `config.distortion_tol` of `d_target`.
///
/// The lower end of the multiplier window starts at `-1` and doubles until
/// the achieved distortion drops to the target; the window is then bisected.
pub fn solve_for_target_distortion(
    source: &SourceModel,
    spec: &DistortionSpec,
    d_target: f64,
    config: &SolverConfig,
) -> Result<TargetOutcome> {
    if !(d_target >= 0.0) || !d_target.is_finite() {
        return Err(RdfError::InvalidArgument(format!(
            "target distortion {d_target} must be finite and >= 0"
        )));
    }
    SolverConfig {
        s: 0.0,
        ..config.clone()
    }
    .validate()?;
    let d_max = max_distortion(source, spec)?;
    if d_target >= d_max {
        return zero_rate_solution(source, spec).map(TargetOutcome::Achieved);
    }
    let d_min = min_distortion(source, spec)?;
    if d_target < d_min - 1e-12 {
        return Ok(TargetOutcome::Infeasible {
            min_distortion_per_symbol: d_min,
        });
    }
    let tol = config.distortion_tol;
    let solve = |s: f64| -> Result<SolveResult> {
        let r = fixed_point_solve(
            source,
            spec,
            &SolverConfig {
                s,
                ..config.clone()
            },
        )?;
        if !r.converged {
            return Err(RdfError::NotConverged {
                s,
                sweeps: r.sweeps_used,
                residual: r.residual,
            });
        }
        Ok(r)
    };

    let mut hi = 0.0;
    let mut lo = -1.0;
    let mut best: SolveResult;
    loop {
        let r = solve(lo)?;
        if (r.distortion_per_symbol - d_target).abs() <= tol {
            return Ok(TargetOutcome::Achieved(r));
        }
        if r.distortion_per_symbol < d_target {
            best = r;
            break;
        }
        hi = lo;
        lo *= 2.0;
        if -lo > config.s_cap {
            return Err(RdfError::MultiplierCap {
                cap: config.s_cap,
                target: d_target,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let r = solve(mid)?;
        let gap = r.distortion_per_symbol - d_target;
        if gap.abs() <= tol {
            return Ok(TargetOutcome::Achieved(r));
        }
        if gap.abs() < (best.distortion_per_symbol - d_target).abs() {
            best = r.clone();
        }
        if gap > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // distortion jumps across the window (flat stretch of the curve)
    Ok(TargetOutcome::Achieved(best))
}
