use super::{fixed_point_solve, solve_for_target_distortion, SolverConfig, TargetOutcome};
use crate::error::{RdfError, Result};
use crate::model::{DistortionSpec, SourceModel};

/// Geometry tolerance for monotonicity and convexity of traced curves.
pub const CURVE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub s: f64,
    pub d_per_symbol: f64,
    pub d_total: f64,
    pub r_total: f64,
    pub r_per_symbol: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub residual: f64,
    /// Set when the solve at this multiplier failed.
    pub error: Option<String>,
}

/// Parametric rate–distortion samples, sorted by distortion.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    pub n_stages: usize,
    pub points: Vec<CurvePoint>,
}

impl RdCurve {
    fn solved(&self) -> impl Iterator<Item = &CurvePoint> {
        self.points.iter().filter(|p| p.error.is_none())
    }

    /// Largest increase of rate between consecutive points (0 if monotone).
    pub fn monotonicity_violation(&self) -> f64 {
        let pts: Vec<_> = self.solved().collect();
        pts.windows(2)
            .map(|w| w[1].r_total - w[0].r_total)
            .fold(0.0, f64::max)
    }

    /// Largest excess of a point over the chord of its neighbours.
    pub fn convexity_violation(&self) -> f64 {
        let pts: Vec<_> = self.solved().collect();
        pts.windows(3)
            .filter(|w| w[2].d_total > w[0].d_total)
            .map(|w| {
                let t = (w[1].d_total - w[0].d_total) / (w[2].d_total - w[0].d_total);
                let chord = w[0].r_total + t * (w[2].r_total - w[0].r_total);
                w[1].r_total - chord
            })
            .fold(0.0, f64::max)
    }

    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violation() <= CURVE_TOL
    }

    pub fn is_convex(&self) -> bool {
        self.convexity_violation() <= CURVE_TOL
    }

    /// Central-difference slope `dR_total / dD_total` at each interior
    /// point, paired with that point's multiplier: `(s, slope)`.
    pub fn central_slopes(&self) -> Vec<(f64, f64)> {
        let pts: Vec<_> = self.solved().collect();
        pts.windows(3)
            .filter(|w| w[2].d_total > w[0].d_total)
            .map(|w| {
                let slope = (w[2].r_total - w[0].r_total) / (w[2].d_total - w[0].d_total);
                (w[1].s, slope)
            })
            .collect()
    }
}

/// One fixed-point solve per multiplier; failures are recorded per point.
pub fn trace_curve(
    source: &SourceModel,
    spec: &DistortionSpec,
    s_values: &[f64],
    config: &SolverConfig,
) -> Result<RdCurve> {
    if s_values.is_empty() {
        return Err(RdfError::InvalidArgument("no multipliers to trace".into()));
    }
    let n = source.alphabets().n_stages();
    let mut points: Vec<CurvePoint> = s_values
        .iter()
        .map(|&s| {
            match fixed_point_solve(
                source,
                spec,
                &SolverConfig {
                    s,
                    ..config.clone()
                },
            ) {
                Ok(r) => CurvePoint {
                    s,
                    d_per_symbol: r.distortion_per_symbol,
                    d_total: r.distortion_total,
                    r_total: r.rate_nats,
                    r_per_symbol: r.rate_per_symbol(),
                    sweeps: r.sweeps_used,
                    converged: r.converged,
                    residual: r.residual,
                    error: None,
                },
                Err(e) => CurvePoint {
                    s,
                    d_per_symbol: f64::NAN,
                    d_total: f64::NAN,
                    r_total: f64::NAN,
                    r_per_symbol: f64::NAN,
                    sweeps: 0,
                    converged: false,
                    residual: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    points.sort_by(|a, b| a.d_total.total_cmp(&b.d_total).then(a.s.total_cmp(&b.s)));
    Ok(RdCurve {
        n_stages: n,
        points,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HorizonRate {
    pub n_stages: usize,
    /// `+inf` when the target is infeasible at this horizon.
    pub rate_per_symbol: f64,
    pub outcome: TargetOutcome,
}

/// Per-symbol rate at `d_target` for each horizon of a source family.
pub fn rate_limit_estimate(
    family: impl Fn(usize) -> Result<SourceModel>,
    spec: &DistortionSpec,
    d_target: f64,
    horizons: &[usize],
    config: &SolverConfig,
) -> Result<Vec<HorizonRate>> {
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RdfError::InvalidArgument(
            "horizons must be strictly ascending".into(),
        ));
    }
    horizons
        .iter()
        .map(|&n| {
            let source = family(n)?;
            let outcome = solve_for_target_distortion(&source, spec, d_target, config)?;
            Ok(HorizonRate {
                n_stages: n,
                rate_per_symbol: outcome.rate_nats() / n as f64,
                outcome,
            })
        })
        .collect()
}
