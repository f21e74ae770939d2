//! Classical (noncausal) rate–distortion reference by Blahut–Arimoto.

use crate::error::{RdfError, Result};
use crate::model::{full_joint_source, DistortionSpec, SourceModel};

#[derive(Clone, Debug, PartialEq)]
pub struct BaPoint {
    pub s: f64,
    pub rate_nats: f64,
    pub distortion: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Reproduction marginal at the last iterate.
    pub output: Vec<f64>,
}

/// Parametric point of the classical curve at multiplier `s`.
///
/// `rho` is row-major `|X| x |Y|`. The alternation starts from the uniform
/// output law and stops once the output law moves by at most `tol`.
pub fn blahut_arimoto(
    px: &[f64],
    rho: &[f64],
    s: f64,
    tol: f64,
    max_iters: usize,
) -> Result<BaPoint> {
    let nx = px.len();
    if nx == 0 || rho.len() % nx != 0 || rho.is_empty() {
        return Err(RdfError::InvalidArgument(
            "distortion table must have |X| rows".into(),
        ));
    }
    let ny = rho.len() / nx;
    if px.iter().any(|p| !(*p >= 0.0)) || (px.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
        return Err(RdfError::InvalidArgument(
            "px is not a probability vector".into(),
        ));
    }
    if rho.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(RdfError::InvalidArgument(
            "distortion must be finite and >= 0".into(),
        ));
    }
    if !(s <= 0.0) || !s.is_finite() {
        return Err(RdfError::InvalidArgument(format!(
            "multiplier {s} must be <= 0"
        )));
    }

    let mut r = vec![1.0 / ny as f64; ny];
    let mut cond = vec![0.0; nx * ny];
    let tilt = |r: &[f64], cond: &mut [f64]| {
        for x in 0..nx {
            let row = &mut cond[x * ny..(x + 1) * ny];
            let m = (0..ny)
                .filter(|&y| r[y] > 0.0)
                .map(|y| s * rho[x * ny + y])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for y in 0..ny {
                row[y] = if r[y] > 0.0 {
                    r[y] * (s * rho[x * ny + y] - m).exp()
                } else {
                    0.0
                };
                z += row[y];
            }
            row.iter_mut().for_each(|v| *v /= z);
        }
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        tilt(&r, &mut cond);
        let mut fresh = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                fresh[y] += px[x] * cond[x * ny + y];
            }
        }
        let gap = r
            .iter()
            .zip(&fresh)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        r = fresh;
        if gap <= tol {
            converged = true;
            break;
        }
    }
    tilt(&r, &mut cond);
    let mut out = vec![0.0; ny];
    for x in 0..nx {
        for y in 0..ny {
            out[y] += px[x] * cond[x * ny + y];
        }
    }
    let mut rate = 0.0;
    let mut dist = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let q = cond[x * ny + y];
            if px[x] > 0.0 && q > 0.0 {
                rate += px[x] * q * (q / out[y]).ln();
                dist += px[x] * q * rho[x * ny + y];
            }
        }
    }
    Ok(BaPoint {
        s,
        rate_nats: rate.max(0.0),
        distortion: dist,
        iterations,
        converged,
        output: out,
    })
}

/// Tolerances for the classical multiplier search.
#[derive(Clone, Debug, PartialEq)]
pub struct BaConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// Per-symbol distortion tolerance of the bisection.
    pub distortion_tol: f64,
    pub s_cap: f64,
}

impl Default for BaConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iters: 200_000,
            distortion_tol: 1e-9,
            s_cap: 1e6,
        }
    }
}

/// Block law and block distortion `sum_i rho_{0,i}` over super-alphabets.
pub fn block_problem(source: &SourceModel, spec: &DistortionSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let ab = source.alphabets();
    let n = ab.n_stages();
    let (nx, ny) = (ab.x_histories(n), ab.y_histories(n));
    ab.check_budget((nx * ny) as u128)?;
    let costs = spec.expand(ab)?;
    let mu = full_joint_source(source)?;
    let mut rho = vec![0.0; nx * ny];
    for xc in 0..nx {
        for yc in 0..ny {
            rho[xc * ny + yc] = (0..n)
                .map(|i| {
                    let xi = xc / (nx / ab.x_histories(i + 1));
                    let yi = yc / (ny / ab.y_histories(i + 1));
                    costs.get(i, xi, yi)
                })
                .sum();
        }
    }
    Ok((mu, rho))
}

/// Classical block rate at the target per-symbol distortion, in nats over
/// the whole horizon; `+inf` below the smallest achievable distortion.
///
/// The multiplier is bisected until the achieved distortion is within
/// `config.distortion_tol`; the rate is then moved to the target along the
/// supporting line of slope `s`.
pub fn classical_block_rdf(
    source: &SourceModel,
    spec: &DistortionSpec,
    d_target: f64,
    config: &BaConfig,
) -> Result<f64> {
    if !(d_target >= 0.0) {
        return Err(RdfError::InvalidArgument(format!(
            "target distortion {d_target} must be >= 0"
        )));
    }
    let (mu, rho) = block_problem(source, spec)?;
    let n = source.alphabets().n_stages() as f64;
    let nx = mu.len();
    let ny = rho.len() / nx;
    let target_total = d_target * n;

    let d_max = (0..ny)
        .map(|y| (0..nx).map(|x| mu[x] * rho[x * ny + y]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if target_total >= d_max {
        return Ok(0.0);
    }
    let d_min: f64 = (0..nx)
        .map(|x| {
            mu[x]
                * rho[x * ny..(x + 1) * ny]
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
        })
        .sum();
    if target_total < d_min - 1e-12 {
        return Ok(f64::INFINITY);
    }

    let tol = config.distortion_tol * n;
    let run = |s: f64| -> Result<BaPoint> {
        let p = blahut_arimoto(&mu, &rho, s, config.tol, config.max_iters)?;
        if !p.converged {
            return Err(RdfError::NotConverged {
                s,
                sweeps: p.iterations,
                residual: f64::NAN,
            });
        }
        Ok(p)
    };
    let finish = |p: &BaPoint| (p.rate_nats + p.s * (target_total - p.distortion)).max(0.0);

    let mut hi = 0.0;
    let mut lo = -1.0;
    let mut best;
    loop {
        let p = run(lo)?;
        if (p.distortion - target_total).abs() <= tol {
            return Ok(finish(&p));
        }
        if p.distortion < target_total {
            best = p;
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
        let p = run(mid)?;
        let gap = p.distortion - target_total;
        if gap.abs() <= tol {
            return Ok(finish(&p));
        }
        if gap.abs() < (best.distortion - target_total).abs() {
            best = p.clone();
        }
        if gap > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(finish(&best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::entropy;
    use crate::model::Horizon;
    use std::f64::consts::LN_2;

    const HAM2: [f64; 4] = [0.0, 1.0, 1.0, 0.0];

    fn hb(p: f64) -> f64 {
        entropy(&[p, 1.0 - p])
    }

    #[test]
    fn zero_tilt_gives_zero_rate() {
        let p = blahut_arimoto(&[0.3, 0.7], &HAM2, 0.0, 1e-14, 1000).unwrap();
        assert!(p.converged);
        assert_eq!(p.rate_nats, 0.0);
        // the uniform start is already a fixed point at s = 0
        assert!((p.distortion - 0.5).abs() < 1e-15);
    }

    #[test]
    fn binary_symmetric_curve_is_analytic() {
        // at slope s the binary symmetric source has D = e^s / (1 + e^s)
        for s in [-0.5, -1.0, -2.0, -4.0] {
            let p = blahut_arimoto(&[0.5, 0.5], &HAM2, s, 1e-14, 1000).unwrap();
            let d = s.exp() / (1.0 + s.exp());
            assert!((p.distortion - d).abs() < 1e-14);
            assert!((p.rate_nats - (LN_2 - hb(d))).abs() < 1e-14);
        }
    }

    #[test]
    fn quaternary_lossless_limit_is_entropy() {
        let mut ham4 = vec![1.0; 16];
        (0..4).for_each(|k| ham4[k * 5] = 0.0);
        let p = blahut_arimoto(&[0.25; 4], &ham4, -40.0, 1e-14, 1000).unwrap();
        assert!((p.rate_nats - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ba_sweep_is_monotone_and_convex() {
        let px = [0.2, 0.5, 0.3];
        let rho = [0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0];
        let pts: Vec<BaPoint> = (1..=30)
            .map(|k| blahut_arimoto(&px, &rho, -0.2 * k as f64, 1e-13, 100_000).unwrap())
            .collect();
        for w in pts.windows(2) {
            assert!(w[1].distortion <= w[0].distortion + 1e-12);
            assert!(w[1].rate_nats >= w[0].rate_nats - 1e-12);
        }
        for w in pts.windows(3) {
            let t = (w[1].distortion - w[0].distortion) / (w[2].distortion - w[0].distortion);
            let chord = w[0].rate_nats + t * (w[2].rate_nats - w[0].rate_nats);
            assert!(w[1].rate_nats <= chord + 1e-9);
        }
    }

    #[test]
    fn iid_block_rate_is_additive() {
        for n in 1..=3 {
            let src = SourceModel::iid(Horizon::new(n).unwrap(), &[0.5, 0.5]).unwrap();
            let r =
                classical_block_rdf(&src, &DistortionSpec::hamming(2), 0.1, &BaConfig::default())
                    .unwrap();
            assert!(
                (r - n as f64 * (LN_2 - hb(0.1))).abs() < 1e-6,
                "n = {n}: {r}"
            );
        }
    }

    #[test]
    fn block_rate_boundaries() {
        let src = SourceModel::binary_markov(Horizon::new(2).unwrap(), 0.3).unwrap();
        let ham = DistortionSpec::hamming(2);
        assert_eq!(
            classical_block_rdf(&src, &ham, 0.5, &BaConfig::default()).unwrap(),
            0.0
        );
        let two = DistortionSpec::single_letter(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(
            classical_block_rdf(&src, &two, 0.5, &BaConfig::default()).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(blahut_arimoto(&[0.5, 0.6], &HAM2, -1.0, 1e-9, 10).is_err());
        assert!(blahut_arimoto(&[0.5, 0.5], &HAM2, 1.0, 1e-9, 10).is_err());
        assert!(blahut_arimoto(&[0.5, 0.5], &[0.0, 1.0, 1.0], -1.0, 1e-9, 10).is_err());
    }
}
