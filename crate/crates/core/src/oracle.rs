//! Brute-force references for tiny instances, sharing no code with the solver.
//!
//! The Lagrangian `I(X^n -> Y^n) - s E d` of a policy equals the minimum
//! over output processes `nu` of
//!
//! ```text
//! F(q, nu) = sum_i E[ log q_i(Y_i | Y^{i-1}, X^i) / nu_i(Y_i | Y^{i-1}) - s rho_{0,i} ]
//! ```
//!
//! so the grid search enumerates every grid point of every `nu` row and,
//! for each, picks every policy row from the grid by exhaustive comparison,
//! stage by stage from the last. The policy found is then polished by
//! re-picking its rows against its own output process, and scored through
//! [`crate::measures`].

use std::collections::HashMap;

use crate::error::{RdfError, Result};
use crate::measures::{
    directed_information, expected_distortion, joint_law, output_marginal, InfoValue, JointLaw,
};

const POLISH_ROUNDS: usize = 200;

fn lagrangian_of(
    source: &SourceModel,
    spec: &DistortionSpec,
    policy: &CausalPolicy,
    s: f64,
) -> Result<f64> {
    let di = directed_information(source, policy)?.nats();
    Ok(di - s * expected_distortion(source, policy, spec)?.total)
}
use crate::model::{decode_into, CausalPolicy, DistortionSpec, SourceModel, StageCosts};

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    /// Step on each simplex coordinate; `1 / resolution` must be an integer.
    pub resolution: f64,
    /// Cap on `(# nu grid points) x (policy row evaluations per nu point)`.
    pub max_cells: u128,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: 0.02,
            max_cells: 20_000_000_000,
        }
    }
}

impl GridSpec {
    pub fn with_resolution(resolution: f64) -> Self {
        Self {
            resolution,
            ..Self::default()
        }
    }

    fn steps(&self) -> Result<usize> {
        if !(self.resolution > 0.0 && self.resolution <= 0.5) {
            return Err(RdfError::InvalidArgument(format!(
                "grid resolution {} outside (0, 0.5]",
                self.resolution
            )));
        }
        let k = (1.0 / self.resolution).round();
        if (k * self.resolution - 1.0).abs() > 1e-9 {
            return Err(RdfError::InvalidArgument(format!(
                "1 / {} is not an integer",
                self.resolution
            )));
        }
        Ok(k as usize)
    }
}

/// All points of the `dim`-simplex with coordinates in `{0, 1/k, ..., 1}`,
/// in lexicographic order of the integer numerators.
fn simplex_grid(dim: usize, k: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / k as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(dim, left - c, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, k, k, &mut Vec::with_capacity(dim), &mut out);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// Lagrangian of `policy`, evaluated through `measures`; an upper bound
    /// on the minimum over grid policies.
    pub value: f64,
    /// Minimum of `F(q, nu)` over grid `q` and grid `nu`; never below `value`.
    pub envelope: f64,
    pub policy: CausalPolicy,
    pub nu_points: u128,
}

struct Candidates {
    points: Vec<Vec<f64>>,
    // sum_y c_y ln c_y
    neg_entropy: Vec<f64>,
    logs: Vec<Vec<f64>>,
}

impl Candidates {
    fn new(dim: usize, k: usize) -> Self {
        let points = simplex_grid(dim, k);
        let neg_entropy = points
            .iter()
            .map(|c| c.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum())
            .collect();
        let logs = points
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
                    .collect()
            })
            .collect();
        Self {
            points,
            neg_entropy,
            logs,
        }
    }

    /// `min_c sum_y c_y (ln c_y - ln nu_y + a_y)`, first minimizer on ties.
    fn best(&self, log_nu: &[f64], a: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (idx, c) in self.points.iter().enumerate() {
            let mut v = self.neg_entropy[idx];
            for y in 0..c.len() {
                if c[y] > 0.0 {
                    v += c[y] * (a[y] - log_nu[y]);
                }
            }
            if v < best.1 {
                best = (idx, v);
            }
        }
        best
    }
}

/// Layout of the enumerated `nu` rows: stage `i` contributes `|Y^{i-1}|` rows.
struct NuLayout {
    offsets: Vec<usize>,
    total_rows: usize,
}

/// Grid minimum of `I(X^n -> Y^n) - s E d_{0,n}` over policies whose rows lie
/// on the simplex grid.
pub fn brute_force_lagrangian_min(
    source: &SourceModel,
    spec: &DistortionSpec,
    s: f64,
    grid: &GridSpec,
) -> Result<OracleResult> {
    if !(s <= 0.0) || !s.is_finite() {
        return Err(RdfError::InvalidArgument(format!(
            "multiplier {s} must be <= 0"
        )));
    }
    let k = grid.steps()?;
    let ab = source.alphabets();
    let n = ab.n_stages();
    let costs = spec.expand(ab)?;
    let cands: Vec<Candidates> = (0..n).map(|i| Candidates::new(ab.y_size(i), k)).collect();

    let mut offsets = Vec::with_capacity(n);
    let mut total_rows = 0;
    let mut nu_points: u128 = 1;
    let mut per_point: u128 = 0;
    for i in 0..n {
        offsets.push(total_rows);
        let rows = ab.y_histories(i);
        total_rows += rows;
        let g = cands[i].points.len() as u128;
        nu_points = nu_points.saturating_mul(g.saturating_pow(rows as u32));
        per_point += (ab.y_histories(i) * ab.x_histories(i + 1)) as u128 * g;
    }
    let cells = nu_points.saturating_mul(per_point);
    if cells > grid.max_cells {
        return Err(RdfError::Budget {
            needed: cells,
            budget: grid.max_cells,
        });
    }
    let layout = NuLayout {
        offsets,
        total_rows,
    };

    // Last stage: each row's minimum depends only on its own nu row.
    let last = n - 1;
    let my = ab.y_size(last);
    let nx_last = ab.x_histories(last + 1);
    let g_last = cands[last].points.len();
    let mut last_best = vec![0.0; ab.y_histories(last) * g_last * nx_last];
    let mut a = vec![0.0; my];
    for yp in 0..ab.y_histories(last) {
        for (vi, log_nu) in cands[last].logs.iter().enumerate() {
            for xc in 0..nx_last {
                for y in 0..my {
                    a[y] = -s * costs.get(last, xc, yp * my + y);
                }
                last_best[(yp * g_last + vi) * nx_last + xc] = cands[last].best(log_nu, &a).1;
            }
        }
    }

    let radix: Vec<usize> = (0..n)
        .flat_map(|i| std::iter::repeat(cands[i].points.len()).take(ab.y_histories(i)))
        .collect();
    let mut choice = vec![0usize; layout.total_rows];
    let mut best_value = f64::INFINITY;
    let mut best_choice = choice.clone();
    'outer: loop {
        let v = envelope_value(
            source,
            &costs,
            s,
            &cands,
            NuRows::Grid(&layout, &choice),
            &last_best,
            None,
        );
        if v < best_value {
            best_value = v;
            best_choice.clone_from(&choice);
        }
        // mixed-radix counter over nu rows, last row fastest
        let mut pos = layout.total_rows;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < radix[pos] {
                break;
            }
            choice[pos] = 0;
        }
    }

    let mut kernels: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![0.0; ab.y_histories(i) * ab.x_histories(i + 1) * ab.y_size(i)])
        .collect();
    envelope_value(
        source,
        &costs,
        s,
        &cands,
        NuRows::Grid(&layout, &best_choice),
        &last_best,
        Some(&mut kernels),
    );
    let mut policy = CausalPolicy::new(ab.clone(), kernels.clone())?;
    let mut value = lagrangian_of(source, spec, &policy, s)?;

    // Polish: best grid rows against the policy's own output process. Each
    // step keeps a grid policy and does not raise the Lagrangian.
    for _ in 0..POLISH_ROUNDS {
        let nu = output_marginal(&joint_law(source, &policy)?);
        let logs: Vec<Vec<f64>> = nu
            .rows()
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
                    .collect()
            })
            .collect();
        envelope_value(
            source,
            &costs,
            s,
            &cands,
            NuRows::Logs(&logs),
            &last_best,
            Some(&mut kernels),
        );
        let next = CausalPolicy::new(ab.clone(), kernels.clone())?;
        let v = lagrangian_of(source, spec, &next, s)?;
        if v < value - 1e-15 {
            policy = next;
            value = v;
        } else {
            break;
        }
    }
    Ok(OracleResult {
        value,
        envelope: best_value,
        policy,
        nu_points,
    })
}

/// Where [`envelope_value`] reads `ln nu` rows from.
#[derive(Clone, Copy)]
enum NuRows<'a> {
    /// Grid indices per enumerated row.
    Grid(&'a NuLayout, &'a [usize]),
    /// `rows[i][y^{i-1} * |Y_i| + y_i]`.
    Logs(&'a [Vec<f64>]),
}

/// `min_q F(q, nu)` for the given `nu`; optionally writes the
/// minimizing policy rows.
#[allow(clippy::too_many_arguments)]
fn envelope_value(
    source: &SourceModel,
    costs: &StageCosts,
    s: f64,
    cands: &[Candidates],
    nu: NuRows<'_>,
    last_best: &[f64],
    mut kernels: Option<&mut Vec<Vec<f64>>>,
) -> f64 {
    let ab = source.alphabets();
    let n = ab.n_stages();
    // later[x^{i+1} * |Y^i| + y^i]: optimal cost-to-go of the row (y^i, x^{i+1})
    let mut later: Vec<f64> = Vec::new();
    for i in (0..n).rev() {
        let my = ab.y_size(i);
        let (nx, nyp) = (ab.x_histories(i + 1), ab.y_histories(i));
        let mut cur = vec![0.0; nx * nyp];
        let mut a = vec![0.0; my];
        for yp in 0..nyp {
            let (log_nu, grid_index) = match nu {
                NuRows::Grid(layout, choice) => {
                    let vi = choice[layout.offsets[i] + yp];
                    (&cands[i].logs[vi][..], Some(vi))
                }
                NuRows::Logs(rows) => (&rows[i][yp * my..(yp + 1) * my], None),
            };
            for xc in 0..nx {
                let shortcut = (i == n - 1 && kernels.is_none())
                    .then_some(grid_index)
                    .flatten();
                let (idx, v) = if let Some(vi) = shortcut {
                    let g = cands[i].points.len();
                    (0, last_best[(yp * g + vi) * nx + xc])
                } else {
                    for y in 0..my {
                        let yc = yp * my + y;
                        let mut cost = -s * costs.get(i, xc, yc);
                        if i + 1 < n {
                            let mx = ab.x_size(i + 1);
                            let nyc = ab.y_histories(i + 1);
                            cost += source
                                .kernel_row(i + 1, xc)
                                .iter()
                                .enumerate()
                                .map(|(x, &p)| p * later[(xc * mx + x) * nyc + yc])
                                .sum::<f64>();
                        }
                        a[y] = cost;
                    }
                    cands[i].best(log_nu, &a)
                };
                if let Some(ks) = kernels.as_deref_mut() {
                    let r = yp * nx + xc;
                    ks[i][r * my..(r + 1) * my].copy_from_slice(&cands[i].points[idx]);
                }
                cur[xc * nyp + yp] = v;
            }
        }
        later = cur;
    }
    source
        .kernel_row(0, 0)
        .iter()
        .zip(&later)
        .map(|(p, v)| if *p > 0.0 { p * v } else { 0.0 })
        .sum()
}

/// Directed information recomputed from a raw joint law: the causal
/// conditionals `P(y_i | y^{i-1}, x^i)` and `P(y_i | y^{i-1})` are rebuilt by
/// summing the joint over explicit symbol tuples.
pub fn exhaustive_directed_info(joint: &JointLaw) -> InfoValue {
    let ab = joint.alphabets();
    let n = ab.n_stages();
    let ny = ab.y_histories(n);
    let mut xs = vec![0; n];
    let mut ys = vec![0; n];
    // keyed by (x^i, y^i) and (x^i, y^{i-1}), and by y^i and y^{i-1}
    let mut with_x: HashMap<(Vec<usize>, Vec<usize>), f64> = HashMap::new();
    let mut without_x: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut cells = Vec::new();
    for (k, &p) in joint.table().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        decode_into(k / ny, ab.x_sizes(), &mut xs);
        decode_into(k % ny, ab.y_sizes(), &mut ys);
        for i in 0..n {
            *with_x
                .entry((xs[..=i].to_vec(), ys[..=i].to_vec()))
                .or_default() += p;
            *with_x
                .entry((xs[..=i].to_vec(), ys[..i].to_vec()))
                .or_default() += p;
            *without_x.entry(ys[..=i].to_vec()).or_default() += p;
        }
        *without_x.entry(Vec::new()).or_default() += p;
        cells.push((p, xs.clone(), ys.clone()));
    }
    let mut total = 0.0;
    for (p, xs, ys) in cells {
        for i in 0..n {
            let q = with_x[&(xs[..=i].to_vec(), ys[..=i].to_vec())]
                / with_x[&(xs[..=i].to_vec(), ys[..i].to_vec())];
            let v = without_x[&ys[..=i].to_vec()] / without_x[&ys[..i].to_vec()];
            total += p * (q / v).ln();
        }
    }
    InfoValue::from_nats(total)
}
