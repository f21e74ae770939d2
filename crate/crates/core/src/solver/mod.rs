//! Optimal nonanticipative reproduction kernels.
//!
//! For a fixed output process `nu`, the best causal policy at multiplier
//! `s <= 0` is obtained by a backward pass over value tables `g_{i,n}`:
//!
//! ```text
//! g_{n,n} = 0
//! g_{k,n}(x^k, y^k) = - sum_{x_{k+1}} p_{k+1}(x_{k+1} | x^k)
//!     * log sum_{y_{k+1}} exp(s rho_{0,k+1} - g_{k+1,n}) nu_{k+1}(y_{k+1} | y^k)
//! q_i(y_i | y^{i-1}, x^i) ∝ exp(s rho_{0,i}(x^i, y^i) - g_{i,n}(x^i, y^i)) nu_i(y_i | y^{i-1})
//! ```
//!
//! [`fixed_point_solve`] alternates this with recomputing `nu` from the
//! policy until the output process stops moving. With one stage it is
//! exactly Blahut–Arimoto.

mod curve;
mod stationarity;
mod target;

pub use curve::{rate_limit_estimate, trace_curve, CurvePoint, HorizonRate, RdCurve};
pub use stationarity::{lagrangian, perturbation_decrease, verify_stationarity};
pub use target::{
    max_distortion, min_distortion, solve_for_target_distortion, zero_rate_solution, TargetOutcome,
};

use crate::error::{RdfError, Result};
use crate::measures::{directed_information, forward_stage, MarginalProcess};
use crate::model::{CausalPolicy, DistortionSpec, SourceModel, StageAlphabets, StageCosts};

/// Largest tolerated gap between the closed-form rate and the directed
/// information of the returned policy.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// Backward value tables `g_{i,n}(x^i, y^i)`, stored as `[x_code * |Y^i| + y_code]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GTable {
    alphabets: StageAlphabets,
    tables: Vec<Vec<f64>>,
}

impl GTable {
    pub fn zeros(alphabets: StageAlphabets) -> Self {
        let tables = (0..alphabets.n_stages())
            .map(|i| vec![0.0; alphabets.x_histories(i + 1) * alphabets.y_histories(i + 1)])
            .collect();
        Self { alphabets, tables }
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn tables_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.tables
    }

    #[inline]
    pub fn get(&self, stage: usize, x_code: usize, y_code: usize) -> f64 {
        self.tables[stage][x_code * self.alphabets.y_histories(stage + 1) + y_code]
    }

    /// Table of the terminal stage, identically zero.
    pub fn terminal(&self) -> &[f64] {
        self.tables.last().expect("at least one stage")
    }
}

/// Starting point for the output process.
#[derive(Clone, Debug, PartialEq)]
pub enum NuInit {
    Uniform,
    Given(MarginalProcess),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Lagrange multiplier, `s <= 0`.
    pub s: f64,
    pub nu_init: NuInit,
    /// Sup-norm tolerance on `nu` between sweeps.
    pub fp_tol: f64,
    pub max_sweeps: usize,
    /// Weight of the freshly computed `nu` in each update, in `(0, 1]`.
    pub damping: f64,
    /// Per-symbol distortion tolerance of the multiplier search.
    pub distortion_tol: f64,
    /// Largest `|s|` the multiplier search may try.
    pub s_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            s: 0.0,
            nu_init: NuInit::Uniform,
            fp_tol: 1e-9,
            max_sweeps: 10_000,
            damping: 1.0,
            distortion_tol: 1e-6,
            s_cap: 1e6,
        }
    }
}

impl SolverConfig {
    pub fn with_s(s: f64) -> Self {
        Self {
            s,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s <= 0.0) || !self.s.is_finite() {
            return Err(RdfError::InvalidArgument(format!(
                "multiplier s = {} must be finite and <= 0",
                self.s
            )));
        }
        if !(self.fp_tol > 0.0) {
            return Err(RdfError::InvalidArgument("fp_tol must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(RdfError::InvalidArgument(format!(
                "damping {} outside (0, 1]",
                self.damping
            )));
        }
        if self.max_sweeps == 0 {
            return Err(RdfError::InvalidArgument(
                "max_sweeps must be positive".into(),
            ));
        }
        if !(self.distortion_tol > 0.0) || !(self.s_cap > 0.0) {
            return Err(RdfError::InvalidArgument(
                "distortion_tol and s_cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub s: f64,
    pub policy: CausalPolicy,
    pub nu: MarginalProcess,
    pub g: GTable,
    /// Rate over the whole horizon, nats.
    pub rate_nats: f64,
    pub distortion_total: f64,
    pub distortion_per_symbol: f64,
    pub sweeps_used: usize,
    pub converged: bool,
    pub residual: f64,
}

impl SolveResult {
    pub fn n_stages(&self) -> usize {
        self.policy.alphabets().n_stages()
    }

    pub fn rate_per_symbol(&self) -> f64 {
        self.rate_nats / self.n_stages() as f64
    }

    /// `rate - s * total distortion`.
    pub fn lagrangian(&self) -> f64 {
        self.rate_nats - self.s * self.distortion_total
    }
}

/// Stable `log sum_y nu_y exp(a_y)` over the support of `nu`; `None` if
/// `nu` has no support.
#[inline]
fn log_tilt_mass(nu: &[f64], a: impl Fn(usize) -> f64) -> Option<f64> {
    let mut m = f64::NEG_INFINITY;
    for (y, &v) in nu.iter().enumerate() {
        if v > 0.0 {
            m = m.max(a(y));
        }
    }
    if m == f64::NEG_INFINITY {
        return None;
    }
    let sum: f64 = nu
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(y, &v)| v * (a(y) - m).exp())
        .sum();
    Some(m + sum.ln())
}

fn check_inputs(source: &SourceModel, nu: &MarginalProcess, s: f64) -> Result<()> {
    if !(s <= 0.0) || !s.is_finite() {
        return Err(RdfError::InvalidArgument(format!(
            "multiplier s = {s} must be finite and <= 0"
        )));
    }
    if source.alphabets() != nu.alphabets() {
        return Err(RdfError::InvalidArgument(
            "source and output-process alphabets differ".into(),
        ));
    }
    Ok(())
}

/// Backward recursion for `g_{i,n}` at multiplier `s` against output process `nu`.
pub fn backward_g(
    source: &SourceModel,
    spec: &DistortionSpec,
    nu: &MarginalProcess,
    s: f64,
) -> Result<GTable> {
    check_inputs(source, nu, s)?;
    let costs = spec.expand(source.alphabets())?;
    backward_g_with(source, &costs, nu, s)
}

pub(crate) fn backward_g_with(
    source: &SourceModel,
    costs: &StageCosts,
    nu: &MarginalProcess,
    s: f64,
) -> Result<GTable> {
    let ab = source.alphabets();
    let n = ab.n_stages();
    let mut g = GTable::zeros(ab.clone());
    for k in (0..n - 1).rev() {
        let next = k + 1;
        let (mx, my) = (ab.x_size(next), ab.y_size(next));
        let (nxk, nyk) = (ab.x_histories(k + 1), ab.y_histories(k + 1));
        let mut cur = vec![0.0; nxk * nyk];
        {
            let later = &g.tables[next];
            let ny_next = nyk * my;
            for xc in 0..nxk {
                let krow = source.kernel_row(next, xc);
                for yc in 0..nyk {
                    let nurow = nu.row(next, yc);
                    let mut acc = 0.0;
                    for (x, &px) in krow.iter().enumerate() {
                        if px == 0.0 {
                            continue;
                        }
                        let xn = xc * mx + x;
                        let yb = yc * my;
                        let lz = log_tilt_mass(nurow, |y| {
                            s * costs.get(next, xn, yb + y) - later[xn * ny_next + yb + y]
                        })
                        .ok_or(RdfError::DegenerateMarginal {
                            stage: next,
                            history: yc,
                        })?;
                        acc += px * lz;
                    }
                    cur[xc * nyk + yc] = -acc;
                }
            }
        }
        g.tables[k] = cur;
    }
    Ok(g)
}

/// Tilted kernels `q_i ∝ exp(s rho_{0,i} - g_{i,n}) nu_i`.
pub fn tilted_policy(
    source: &SourceModel,
    spec: &DistortionSpec,
    nu: &MarginalProcess,
    g: &GTable,
    s: f64,
) -> Result<CausalPolicy> {
    check_inputs(source, nu, s)?;
    if g.alphabets != *source.alphabets() {
        return Err(RdfError::InvalidArgument("g table alphabets differ".into()));
    }
    let costs = spec.expand(source.alphabets())?;
    tilted_policy_with(source.alphabets(), &costs, nu, g, s)
}

pub(crate) fn tilted_policy_with(
    ab: &StageAlphabets,
    costs: &StageCosts,
    nu: &MarginalProcess,
    g: &GTable,
    s: f64,
) -> Result<CausalPolicy> {
    let n = ab.n_stages();
    let mut kernels = Vec::with_capacity(n);
    for i in 0..n {
        let my = ab.y_size(i);
        let (nx, nyp) = (ab.x_histories(i + 1), ab.y_histories(i));
        let ny = nyp * my;
        let gt = &g.tables[i];
        let mut k = vec![0.0; nyp * nx * my];
        let mut a = vec![0.0; my];
        for yp in 0..nyp {
            let nurow = nu.row(i, yp);
            for xc in 0..nx {
                let mut m = f64::NEG_INFINITY;
                for y in 0..my {
                    a[y] = s * costs.get(i, xc, yp * my + y) - gt[xc * ny + yp * my + y];
                    if nurow[y] > 0.0 {
                        m = m.max(a[y]);
                    }
                }
                if m == f64::NEG_INFINITY {
                    return Err(RdfError::DegenerateMarginal {
                        stage: i,
                        history: yp,
                    });
                }
                let row = &mut k[(yp * nx + xc) * my..(yp * nx + xc + 1) * my];
                let mut z = 0.0;
                for y in 0..my {
                    let w = if nurow[y] > 0.0 {
                        nurow[y] * (a[y] - m).exp()
                    } else {
                        0.0
                    };
                    row[y] = w;
                    z += w;
                }
                row.iter_mut().for_each(|v| *v /= z);
            }
        }
        kernels.push(k);
    }
    CausalPolicy::new_unvalidated(ab.clone(), kernels)
}

/// Output process induced by `policy` on `source`.
pub fn marginal_update(source: &SourceModel, policy: &CausalPolicy) -> Result<MarginalProcess> {
    if source.alphabets() != policy.alphabets() {
        return Err(RdfError::InvalidArgument(
            "source and policy alphabets differ".into(),
        ));
    }
    Ok(forward_marginal(source, policy).0)
}

/// Output process and prefix masses `P(y^i)` from stagewise forward laws.
fn forward_marginal(
    source: &SourceModel,
    policy: &CausalPolicy,
) -> (MarginalProcess, Vec<Vec<f64>>) {
    let ab = source.alphabets();
    let n = ab.n_stages();
    let mut law = vec![1.0];
    let mut masses = Vec::with_capacity(n);
    for i in 0..n {
        law = forward_stage(source, policy, i, &law);
        let ny = ab.y_histories(i + 1);
        let mut m = vec![0.0; ny];
        for row in law.chunks(ny) {
            m.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        masses.push(m);
    }
    let nu = MarginalProcess::from_prefix_masses(ab.clone(), &masses);
    (nu, masses)
}

/// Closed-form rate and total distortion of a tilted policy.
///
/// Returns `s * D_total - sum_i E[ sum_{y_i} g_{i,n} q_i + log Z_i ]`, where
/// the expectation runs over `(x^i, y^{i-1})` under the source and the policy.
fn closed_form(
    source: &SourceModel,
    costs: &StageCosts,
    policy: &CausalPolicy,
    nu: &MarginalProcess,
    g: &GTable,
    s: f64,
) -> Result<(f64, f64)> {
    let ab = source.alphabets();
    let n = ab.n_stages();
    let mut prev = vec![1.0];
    let mut dual = 0.0;
    let mut dist = 0.0;
    for i in 0..n {
        let (mx, my) = (ab.x_size(i), ab.y_size(i));
        let (nxp, nyp) = (ab.x_histories(i), ab.y_histories(i));
        let ny = nyp * my;
        let gt = &g.tables[i];
        for xp in 0..nxp {
            let krow = source.kernel_row(i, xp);
            for yp in 0..nyp {
                let base = prev[xp * nyp + yp];
                if base == 0.0 {
                    continue;
                }
                let nurow = nu.row(i, yp);
                for (x, &px) in krow.iter().enumerate() {
                    let w = base * px;
                    if w == 0.0 {
                        continue;
                    }
                    let xc = xp * mx + x;
                    let q = policy.row(i, yp, xc);
                    let lz = log_tilt_mass(nurow, |y| {
                        s * costs.get(i, xc, yp * my + y) - gt[xc * ny + yp * my + y]
                    })
                    .ok_or(RdfError::DegenerateMarginal {
                        stage: i,
                        history: yp,
                    })?;
                    let gq: f64 = (0..my)
                        .filter(|&y| q[y] > 0.0)
                        .map(|y| q[y] * gt[xc * ny + yp * my + y])
                        .sum();
                    dual += w * (gq + lz);
                    dist += w
                        * (0..my)
                            .filter(|&y| q[y] > 0.0)
                            .map(|y| q[y] * costs.get(i, xc, yp * my + y))
                            .sum::<f64>();
                }
            }
        }
        prev = forward_stage(source, policy, i, &prev);
    }
    Ok((s * dist - dual, dist))
}

/// Rate of a fixed point in closed form, cross-checked against the
/// directed information of `policy`.
///
/// `distortion_per_symbol` is the achieved distortion of `policy`; it is
/// recomputed and must agree.
pub fn rdf_value(
    source: &SourceModel,
    spec: &DistortionSpec,
    policy: &CausalPolicy,
    nu: &MarginalProcess,
    g: &GTable,
    s: f64,
    distortion_per_symbol: f64,
) -> Result<f64> {
    check_inputs(source, nu, s)?;
    let costs = spec.expand(source.alphabets())?;
    let (rate, dist) = closed_form(source, &costs, policy, nu, g, s)?;
    let n = source.alphabets().n_stages() as f64;
    if (dist / n - distortion_per_symbol).abs() > 1e-9 * (1.0 + distortion_per_symbol) {
        return Err(RdfError::InvalidArgument(format!(
            "stated distortion {distortion_per_symbol} differs from the policy's {}",
            dist / n
        )));
    }
    cross_check(source, policy, rate)?;
    Ok(rate)
}

fn cross_check(source: &SourceModel, policy: &CausalPolicy, rate: f64) -> Result<()> {
    let di = directed_information(source, policy)?.nats();
    if (rate - di).abs() > CONSISTENCY_TOL {
        return Err(RdfError::Internal(format!(
            "closed-form rate {rate} disagrees with directed information {di}"
        )));
    }
    Ok(())
}

/// Alternates the backward pass, the tilted policy and the output process
/// until `nu` moves by at most `fp_tol` on every reachable row.
pub fn fixed_point_solve(
    source: &SourceModel,
    spec: &DistortionSpec,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let ab = source.alphabets();
    let costs = spec.expand(ab)?;
    let s = config.s;
    let mut nu = match &config.nu_init {
        NuInit::Uniform => MarginalProcess::uniform(ab.clone()),
        NuInit::Given(m) => {
            if m.alphabets() != ab {
                return Err(RdfError::InvalidArgument(
                    "initial output process has the wrong alphabets".into(),
                ));
            }
            m.clone()
        }
    };
    let lambda = config.damping;
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let g = backward_g_with(source, &costs, &nu, s)?;
        let q = tilted_policy_with(ab, &costs, &nu, &g, s)?;
        let (fresh, masses) = forward_marginal(source, &q);
        residual = reachable_gap(ab, &nu, &fresh, &masses);
        if lambda == 1.0 {
            nu = fresh;
        } else {
            for (old, new) in nu.rows_mut().iter_mut().zip(fresh.rows()) {
                old.iter_mut()
                    .zip(new)
                    .for_each(|(o, n)| *o = (1.0 - lambda) * *o + lambda * n);
            }
        }
        if residual <= config.fp_tol {
            converged = true;
            break;
        }
    }
    let g = backward_g_with(source, &costs, &nu, s)?;
    let policy = tilted_policy_with(ab, &costs, &nu, &g, s)?;
    let (rate, dist) = closed_form(source, &costs, &policy, &nu, &g, s)?;
    if converged {
        cross_check(source, &policy, rate)?;
    }
    Ok(SolveResult {
        s,
        policy,
        nu,
        g,
        rate_nats: rate.max(0.0),
        distortion_total: dist,
        distortion_per_symbol: dist / ab.n_stages() as f64,
        sweeps_used: sweeps,
        converged,
        residual,
    })
}

fn reachable_gap(
    ab: &StageAlphabets,
    old: &MarginalProcess,
    new: &MarginalProcess,
    masses: &[Vec<f64>],
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..ab.n_stages() {
        for yp in 0..ab.y_histories(i) {
            if i > 0 && masses[i - 1][yp] <= 0.0 {
                continue;
            }
            for (a, b) in old.row(i, yp).iter().zip(new.row(i, yp)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}
