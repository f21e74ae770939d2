//! Joint, marginal and product laws, and the information and distortion
//! functionals evaluated on them.

use crate::error::{RdfError, Result};
use crate::model::{
    decode_into, full_joint_source, CausalPolicy, DistortionSpec, SourceModel, StageAlphabets,
};

/// Conditioning events lighter than this are ignored by the Markov-chain checks.
pub const EVENT_FLOOR: f64 = 1e-12;

/// Law of `(x^n, y^n)`, stored as `[x_code * |Y^n| + y_code]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointLaw {
    alphabets: StageAlphabets,
    table: Vec<f64>,
}

impl JointLaw {
    /// Wraps a raw table; mass must be 1 within 1e-10 and entries nonnegative.
    pub fn from_table(alphabets: StageAlphabets, table: Vec<f64>) -> Result<Self> {
        let n = alphabets.n_stages();
        let want = alphabets.x_histories(n) * alphabets.y_histories(n);
        if table.len() != want {
            return Err(RdfError::InvalidArgument(format!(
                "joint table has {} entries, expected {want}",
                table.len()
            )));
        }
        if table.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(RdfError::InvalidArgument(
                "joint entries must be finite and nonnegative".into(),
            ));
        }
        let mass: f64 = table.iter().sum();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(RdfError::InvalidArgument(format!(
                "joint mass is {mass}, expected 1"
            )));
        }
        Ok(Self { alphabets, table })
    }

    pub fn alphabets(&self) -> &StageAlphabets {
        &self.alphabets
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    fn ny(&self) -> usize {
        self.alphabets.y_histories(self.alphabets.n_stages())
    }

    pub fn get(&self, x_code: usize, y_code: usize) -> f64 {
        self.table[x_code * self.ny() + y_code]
    }

    /// Law of `x^n`.
    pub fn source_marginal(&self) -> Vec<f64> {
        self.table
            .chunks(self.ny())
            .map(|r| r.iter().sum())
            .collect()
    }

    /// Law of `y^n`.
    pub fn output_law(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ny()];
        for row in self.table.chunks(self.ny()) {
            out.iter_mut().zip(row).for_each(|(o, p)| *o += p);
        }
        out
    }
}

/// Output conditionals `nu_i(y_i | y^{i-1})`, stored as `[y_past * |Y_i| + y_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalProcess {
    alphabets: StageAlphabets,
    rows: Vec<Vec<f64>>,
}

impl MarginalProcess {
    pub fn uniform(alphabets: StageAlphabets) -> Self {
        let rows = (0..alphabets.n_stages())
            .map(|i| {
                let w = alphabets.y_size(i);
                vec![1.0 / w as f64; alphabets.y_histories(i) * w]
            })
            .collect();
        Self { alphabets, rows }
    }

    /// Validates shapes and rows, then renormalizes.
    pub fn new(alphabets: StageAlphabets, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != alphabets.n_stages() {
            return Err(RdfError::InvalidArgument(format!(
                "expected {} marginal stages, got {}",
                alphabets.n_stages(),
                rows.len()
            )));
        }
        let mut violations = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let w = alphabets.y_size(i);
            if r.len() != alphabets.y_histories(i) * w {
                return Err(RdfError::InvalidArgument(format!(
                    "stage {i} marginal has {} entries, expected {}",
                    r.len(),
                    alphabets.y_histories(i) * w
                )));
            }
            for (h, row) in r.chunks(w).enumerate() {
                crate::model::check_row(row, i, h, &mut violations);
            }
        }
        if let Some(v) = violations.first() {
            return Err(RdfError::InvalidArgument(format!(
                "marginal row invalid: {v}"
            )));
        }
        let mut m = Self { alphabets, rows };
        for i in 0..m.rows.len() {
            let w = m.alphabets.y_size(i);
            for row in m.rows[i].chunks_mut(w) {
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        Ok(m)
    }

    /// Conditionals from prefix masses `masses[i][code(y^i)] = P(y^i)`;
    /// rows behind zero-mass prefixes are uniform.
    pub(crate) fn from_prefix_masses(alphabets: StageAlphabets, masses: &[Vec<f64>]) -> Self {
        let mut rows = Vec::with_capacity(masses.len());
        for (i, mass) in masses.iter().enumerate() {
            let w = alphabets.y_size(i);
            let mut stage = vec![0.0; mass.len()];
            for (chunk, out) in mass.chunks(w).zip(stage.chunks_mut(w)) {
                let total: f64 = chunk.iter().sum();
                if total > 0.0 {
                    out.iter_mut().zip(chunk).for_each(|(o, m)| *o = m / total);
                } else {
                    out.iter_mut().for_each(|o| *o = 1.0 / w as f64);
                }
            }
            rows.push(stage);
        }
        Self { alphabets, rows }
    }

    pub fn alphabets(&self) -> &StageAlphabets {
        &self.alphabets
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub(crate) fn rows_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.rows
    }

    #[inline]
    pub fn row(&self, stage: usize, y_past: usize) -> &[f64] {
        let w = self.alphabets.y_size(stage);
        &self.rows[stage][y_past * w..(y_past + 1) * w]
    }

    /// Probability of the whole output trajectory with code `y_code`.
    pub fn path_probability(&self, y_code: usize) -> f64 {
        let n = self.alphabets.n_stages();
        let mut ys = vec![0; n];
        decode_into(y_code, self.alphabets.y_sizes(), &mut ys);
        let mut past = 0;
        let mut p = 1.0;
        for (i, &y) in ys.iter().enumerate() {
            p *= self.row(i, past)[y];
            past = past * self.alphabets.y_size(i) + y;
        }
        p
    }
}

/// An information quantity in nats.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct InfoValue(f64);

impl InfoValue {
    /// Rounding noise below zero is clipped.
    pub fn from_nats(nats: f64) -> Self {
        debug_assert!(nats >= -1e-9, "information value {nats} is negative");
        Self(nats.max(0.0))
    }

    pub fn nats(self) -> f64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 / std::f64::consts::LN_2
    }
}

/// Total and per-symbol expected distortion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distortion {
    pub total: f64,
    pub per_symbol: f64,
}

fn check_shapes(source: &SourceModel, policy: &CausalPolicy) -> Result<()> {
    if source.alphabets() != policy.alphabets() {
        return Err(RdfError::InvalidArgument(
            "source and policy alphabets differ".into(),
        ));
    }
    Ok(())
}

/// Extends the stage law of `(x^{i-1}, y^{i-1})` by stage `i`.
///
/// Both tables are laid out `[x_code * |Y^{len}| + y_code]`; the empty
/// prefix is the one-entry table `[1.0]`.
pub(crate) fn forward_stage(
    source: &SourceModel,
    policy: &CausalPolicy,
    stage: usize,
    prev: &[f64],
) -> Vec<f64> {
    let ab = source.alphabets();
    let (mx, my) = (ab.x_size(stage), ab.y_size(stage));
    let nyp = ab.y_histories(stage);
    let nxp = ab.x_histories(stage);
    let ny = nyp * my;
    let mut next = vec![0.0; nxp * mx * ny];
    for xp in 0..nxp {
        let krow = source.kernel_row(stage, xp);
        for yp in 0..nyp {
            let base = prev[xp * nyp + yp];
            if base == 0.0 {
                continue;
            }
            for (x, &px) in krow.iter().enumerate() {
                let w = base * px;
                if w == 0.0 {
                    continue;
                }
                let xc = xp * mx + x;
                let q = policy.row(stage, yp, xc);
                let dst = &mut next[xc * ny + yp * my..xc * ny + (yp + 1) * my];
                dst.iter_mut().zip(q).for_each(|(d, qy)| *d = w * qy);
            }
        }
    }
    next
}

/// `mu_{0,n} (x) Q_{0,n}`.
pub fn joint_law(source: &SourceModel, policy: &CausalPolicy) -> Result<JointLaw> {
    check_shapes(source, policy)?;
    let ab = source.alphabets();
    let n = ab.n_stages();
    ab.check_budget((ab.x_histories(n) * ab.y_histories(n)) as u128)?;
    let mut law = vec![1.0];
    for i in 0..n {
        law = forward_stage(source, policy, i, &law);
    }
    Ok(JointLaw {
        alphabets: ab.clone(),
        table: law,
    })
}

/// Prefix masses `P(y^i)` for `i = 0..n` from the law of `y^n`.
pub(crate) fn prefix_masses(alphabets: &StageAlphabets, output_law: &[f64]) -> Vec<Vec<f64>> {
    let n = alphabets.n_stages();
    let mut masses = vec![Vec::new(); n];
    masses[n - 1] = output_law.to_vec();
    for i in (0..n - 1).rev() {
        let w = alphabets.y_size(i + 1);
        masses[i] = masses[i + 1].chunks(w).map(|c| c.iter().sum()).collect();
    }
    masses
}

/// `nu_i(y_i | y^{i-1}) = P(y^i) / P(y^{i-1})`, uniform where `P(y^{i-1}) = 0`.
pub fn output_marginal(joint: &JointLaw) -> MarginalProcess {
    let masses = prefix_masses(&joint.alphabets, &joint.output_law());
    MarginalProcess::from_prefix_masses(joint.alphabets.clone(), &masses)
}

/// `I(X^n -> Y^n) = E log( Q(y^n|x^n) / nu(y^n) )`, with both factors
/// multiplied out stage by stage from the policy and its output conditionals.
pub fn directed_information(source: &SourceModel, policy: &CausalPolicy) -> Result<InfoValue> {
    let joint = joint_law(source, policy)?;
    let nu = output_marginal(&joint);
    let ab = source.alphabets();
    let n = ab.n_stages();
    let ny = ab.y_histories(n);
    let mut xs = vec![0; n];
    let mut ys = vec![0; n];
    let mut total = 0.0;
    for (idx, &p) in joint.table.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        decode_into(idx / ny, ab.x_sizes(), &mut xs);
        decode_into(idx % ny, ab.y_sizes(), &mut ys);
        let (mut xc, mut yp) = (0usize, 0usize);
        let mut log_ratio = 0.0;
        for i in 0..n {
            xc = xc * ab.x_size(i) + xs[i];
            let q = policy.row(i, yp, xc)[ys[i]];
            let v = nu.row(i, yp)[ys[i]];
            log_ratio += (q / v).ln();
            yp = yp * ab.y_size(i) + ys[i];
        }
        total += p * log_ratio;
    }
    Ok(InfoValue::from_nats(total))
}

/// Block mutual information `I(X^n; Y^n)`.
pub fn mutual_information(joint: &JointLaw) -> InfoValue {
    let px = joint.source_marginal();
    let py = joint.output_law();
    let ny = py.len();
    let total: f64 = joint
        .table
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(k, &p)| p * (p / (px[k / ny] * py[k % ny])).ln())
        .sum();
    InfoValue::from_nats(total)
}

/// `E d_{0,n}(X^n, Y^n)` and its per-symbol value.
pub fn expected_distortion(
    source: &SourceModel,
    policy: &CausalPolicy,
    spec: &DistortionSpec,
) -> Result<Distortion> {
    check_shapes(source, policy)?;
    let ab = source.alphabets();
    let costs = spec.expand(ab)?;
    let n = ab.n_stages();
    let mut law = vec![1.0];
    let mut total = 0.0;
    for i in 0..n {
        law = forward_stage(source, policy, i, &law);
        let ny = ab.y_histories(i + 1);
        total += law
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, &p)| p * costs.get(i, k / ny, k % ny))
            .sum::<f64>();
    }
    Ok(Distortion {
        total,
        per_symbol: total / n as f64,
    })
}

/// The four equivalent conditional-independence statements tying a joint
/// law to a nonanticipative reproduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McVariant {
    /// `P(y^n | x^n)` equals the product of its causal conditionals.
    CausalFactorization = 1,
    /// `Y_i <-> (X^i, Y^{i-1}) <-> X_{i+1}^n`.
    OutputGivenPast = 2,
    /// `Y^i <-> X^i <-> X_{i+1}`.
    PrefixGivenSource = 3,
    /// `X_{i+1}^n <-> X^i <-> Y^i`.
    FutureGivenSource = 4,
}

impl McVariant {
    pub const ALL: [McVariant; 4] = [
        McVariant::CausalFactorization,
        McVariant::OutputGivenPast,
        McVariant::PrefixGivenSource,
        McVariant::FutureGivenSource,
    ];

    pub fn from_index(k: u8) -> Option<Self> {
        Self::ALL.get(k.checked_sub(1)? as usize).copied()
    }
}

#[derive(Clone, Copy)]
enum Coord {
    X(usize),
    Y(usize),
}

struct Group(Vec<Coord>);

impl Group {
    fn xs(r: std::ops::Range<usize>) -> Vec<Coord> {
        r.map(Coord::X).collect()
    }

    fn ys(r: std::ops::Range<usize>) -> Vec<Coord> {
        r.map(Coord::Y).collect()
    }

    fn size(&self, ab: &StageAlphabets) -> usize {
        self.0
            .iter()
            .map(|c| match *c {
                Coord::X(j) => ab.x_size(j),
                Coord::Y(j) => ab.y_size(j),
            })
            .product()
    }

    fn code(&self, ab: &StageAlphabets, xs: &[usize], ys: &[usize]) -> usize {
        self.0.iter().fold(0, |acc, c| match *c {
            Coord::X(j) => acc * ab.x_size(j) + xs[j],
            Coord::Y(j) => acc * ab.y_size(j) + ys[j],
        })
    }
}

/// Sup-norm residual `max |P(a,b|c) - P(a|c) P(b|c)|` of the chosen
/// Markov chain over all stages `i < n`, ignoring conditioning events with
/// probability at most [`EVENT_FLOOR`].
pub fn markov_chain_check(joint: &JointLaw, variant: McVariant) -> f64 {
    let ab = &joint.alphabets;
    let n = ab.n_stages();
    if variant == McVariant::CausalFactorization {
        return factorization_residual(joint);
    }
    let mut worst: f64 = 0.0;
    for i in 0..n.saturating_sub(1) {
        let (a, b, c) = match variant {
            McVariant::OutputGivenPast => {
                let mut c = Group::xs(0..i + 1);
                c.extend(Group::ys(0..i));
                (vec![Coord::Y(i)], Group::xs(i + 1..n), c)
            }
            McVariant::PrefixGivenSource => (
                Group::ys(0..i + 1),
                vec![Coord::X(i + 1)],
                Group::xs(0..i + 1),
            ),
            McVariant::FutureGivenSource => (
                Group::xs(i + 1..n),
                Group::ys(0..i + 1),
                Group::xs(0..i + 1),
            ),
            McVariant::CausalFactorization => unreachable!(),
        };
        worst = worst.max(ci_residual(joint, &Group(a), &Group(b), &Group(c)));
    }
    worst
}

fn ci_residual(joint: &JointLaw, a: &Group, b: &Group, c: &Group) -> f64 {
    let ab = &joint.alphabets;
    let n = ab.n_stages();
    let ny = ab.y_histories(n);
    let (na, nb, nc) = (a.size(ab), b.size(ab), c.size(ab));
    let mut pabc = vec![0.0; na * nb * nc];
    let mut pac = vec![0.0; na * nc];
    let mut pbc = vec![0.0; nb * nc];
    let mut pc = vec![0.0; nc];
    let mut xs = vec![0; n];
    let mut ys = vec![0; n];
    for (k, &p) in joint.table.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        decode_into(k / ny, ab.x_sizes(), &mut xs);
        decode_into(k % ny, ab.y_sizes(), &mut ys);
        let (ka, kb, kc) = (
            a.code(ab, &xs, &ys),
            b.code(ab, &xs, &ys),
            c.code(ab, &xs, &ys),
        );
        pabc[(kc * na + ka) * nb + kb] += p;
        pac[kc * na + ka] += p;
        pbc[kc * nb + kb] += p;
        pc[kc] += p;
    }
    let mut worst: f64 = 0.0;
    for kc in 0..nc {
        let w = pc[kc];
        if w <= EVENT_FLOOR {
            continue;
        }
        for ka in 0..na {
            let pa = pac[kc * na + ka] / w;
            for kb in 0..nb {
                let pb = pbc[kc * nb + kb] / w;
                let pj = pabc[(kc * na + ka) * nb + kb] / w;
                worst = worst.max((pj - pa * pb).abs());
            }
        }
    }
    worst
}

fn factorization_residual(joint: &JointLaw) -> f64 {
    let ab = &joint.alphabets;
    let n = ab.n_stages();
    let ny = ab.y_histories(n);
    let nx = ab.x_histories(n);
    // stage_mass[i][x^i, y^i] and pre_mass[i][x^i, y^{i-1}]
    let mut stage_mass = Vec::with_capacity(n);
    let mut pre_mass = Vec::with_capacity(n);
    for i in 0..n {
        let x_div = nx / ab.x_histories(i + 1);
        let y_div = ny / ab.y_histories(i + 1);
        let nyi = ab.y_histories(i + 1);
        let mut m = vec![0.0; ab.x_histories(i + 1) * nyi];
        for (k, &p) in joint.table.iter().enumerate() {
            m[(k / ny / x_div) * nyi + (k % ny) / y_div] += p;
        }
        let my = ab.y_size(i);
        pre_mass.push(
            m.chunks(my)
                .map(|c| c.iter().sum::<f64>())
                .collect::<Vec<_>>(),
        );
        stage_mass.push(m);
    }
    let px = joint.source_marginal();
    let mut worst: f64 = 0.0;
    for x in 0..nx {
        if px[x] <= EVENT_FLOOR {
            continue;
        }
        for y in 0..ny {
            let direct = joint.table[x * ny + y] / px[x];
            let mut product = 1.0;
            for i in 0..n {
                let xi = x / (nx / ab.x_histories(i + 1));
                let nyi = ab.y_histories(i + 1);
                let yi = y / (ny / nyi);
                let den = pre_mass[i][xi * ab.y_histories(i) + yi / ab.y_size(i)];
                if den <= 0.0 {
                    product = 0.0;
                    break;
                }
                product *= stage_mass[i][xi * nyi + yi] / den;
            }
            worst = worst.max((direct - product).abs());
        }
    }
    worst
}

/// Shannon entropy of a probability vector in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// Entropy of `X^n` in nats.
pub fn source_entropy(source: &SourceModel) -> Result<f64> {
    Ok(entropy(&full_joint_source(source)?))
}
