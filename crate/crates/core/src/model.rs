//! Alphabets, source laws, distortion tables and reproduction policies.
//!
//! Every table in the crate is indexed by *history codes*: a prefix
//! `(a_0, ..., a_k)` with per-stage alphabet sizes `(m_0, ..., m_k)` is
//! encoded in mixed radix with stage 0 as the most significant digit,
//!
//! ```text
//! code = sum_j a_j * prod_{l > j} m_l
//! ```
//!
//! so extending a prefix by one symbol `a` maps `code` to `code * m + a`.
//! Both the source kernels and the reproduction kernels are stored as dense
//! row-major tables on top of these codes.

use std::fmt;

use crate::error::{RdfError, Result};

/// Default cap on the number of scalar entries of the largest table.
pub const DEFAULT_TABLE_BUDGET: u128 = 100_000_000;

/// Absolute tolerance on probability rows.
pub const ROW_TOL: f64 = 1e-12;

/// Number of stages `0..n_stages` together with the table budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Horizon {
    n_stages: usize,
    budget: u128,
}

impl Horizon {
    pub fn new(n_stages: usize) -> Result<Self> {
        Self::with_budget(n_stages, DEFAULT_TABLE_BUDGET)
    }

    pub fn with_budget(n_stages: usize, budget: u128) -> Result<Self> {
        if n_stages == 0 {
            return Err(RdfError::InvalidArgument(
                "a horizon needs at least one stage".into(),
            ));
        }
        Ok(Self { n_stages, budget })
    }

    pub fn n_stages(&self) -> usize {
        self.n_stages
    }

    pub fn budget(&self) -> u128 {
        self.budget
    }
}

/// Per-stage source and reproduction alphabet sizes.
///
/// Construction rejects alphabets whose full joint table over
/// `(x^n, y^n)` would exceed the horizon's budget; every other table in
/// the crate is no larger than that one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageAlphabets {
    horizon: Horizon,
    x_sizes: Vec<usize>,
    y_sizes: Vec<usize>,
    // x_prefix[k] = number of x-histories of length k.
    x_prefix: Vec<usize>,
    y_prefix: Vec<usize>,
}

impl StageAlphabets {
    pub fn new(horizon: Horizon, x_sizes: Vec<usize>, y_sizes: Vec<usize>) -> Result<Self> {
        let n = horizon.n_stages();
        if x_sizes.len() != n || y_sizes.len() != n {
            return Err(RdfError::InvalidArgument(format!(
                "expected {n} per-stage alphabet sizes, got {} (source) and {} (reproduction)",
                x_sizes.len(),
                y_sizes.len()
            )));
        }
        if let Some(i) = x_sizes.iter().chain(&y_sizes).position(|&s| s == 0) {
            return Err(RdfError::InvalidArgument(format!(
                "alphabet size at position {i} is zero"
            )));
        }
        let joint = x_sizes
            .iter()
            .chain(&y_sizes)
            .try_fold(1u128, |acc, &s| acc.checked_mul(s as u128))
            .unwrap_or(u128::MAX);
        if joint > horizon.budget() {
            return Err(RdfError::Budget {
                needed: joint,
                budget: horizon.budget(),
            });
        }
        let x_prefix = prefix_products(&x_sizes);
        let y_prefix = prefix_products(&y_sizes);
        Ok(Self {
            horizon,
            x_sizes,
            y_sizes,
            x_prefix,
            y_prefix,
        })
    }

    /// Same source and reproduction size at every stage.
    pub fn uniform(horizon: Horizon, x_size: usize, y_size: usize) -> Result<Self> {
        let n = horizon.n_stages();
        Self::new(horizon, vec![x_size; n], vec![y_size; n])
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn n_stages(&self) -> usize {
        self.horizon.n_stages()
    }

    pub fn x_sizes(&self) -> &[usize] {
        &self.x_sizes
    }

    pub fn y_sizes(&self) -> &[usize] {
        &self.y_sizes
    }

    pub fn x_size(&self, stage: usize) -> usize {
        self.x_sizes[stage]
    }

    pub fn y_size(&self, stage: usize) -> usize {
        self.y_sizes[stage]
    }

    /// Number of source histories of length `len` (`len = i + 1` for `x^i`).
    pub fn x_histories(&self, len: usize) -> usize {
        self.x_prefix[len]
    }

    pub fn y_histories(&self, len: usize) -> usize {
        self.y_prefix[len]
    }

    /// Fails with a budget error if a table of `entries` scalars is too large.
    pub fn check_budget(&self, entries: u128) -> Result<()> {
        if entries > self.horizon.budget() {
            Err(RdfError::Budget {
                needed: entries,
                budget: self.horizon.budget(),
            })
        } else {
            Ok(())
        }
    }
}

fn prefix_products(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len() + 1);
    out.push(1);
    for &s in sizes {
        out.push(out.last().unwrap() * s);
    }
    out
}

/// A prefix `a^k` packed into a single integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HistoryCode {
    /// Prefix length; a prefix ending at stage `i` has `len = i + 1`.
    pub len: usize,
    pub code: usize,
}

impl HistoryCode {
    pub const EMPTY: HistoryCode = HistoryCode { len: 0, code: 0 };

    /// The stage of the last symbol, `None` for the empty prefix.
    pub fn stage(&self) -> Option<usize> {
        self.len.checked_sub(1)
    }
}

/// Mixed-radix code of `symbols`, stage 0 most significant.
pub fn encode_history(symbols: &[usize], sizes: &[usize]) -> Result<HistoryCode> {
    if symbols.len() > sizes.len() {
        return Err(RdfError::InvalidArgument(format!(
            "prefix of length {} but only {} alphabet sizes",
            symbols.len(),
            sizes.len()
        )));
    }
    let mut code = 0usize;
    for (j, (&a, &m)) in symbols.iter().zip(sizes).enumerate() {
        if a >= m {
            return Err(RdfError::InvalidArgument(format!(
                "symbol {a} at position {j} is outside an alphabet of size {m}"
            )));
        }
        code = code * m + a;
    }
    Ok(HistoryCode {
        len: symbols.len(),
        code,
    })
}

/// Inverse of [`encode_history`].
pub fn decode_history(history: HistoryCode, sizes: &[usize]) -> Result<Vec<usize>> {
    if history.len > sizes.len() {
        return Err(RdfError::InvalidArgument(format!(
            "prefix of length {} but only {} alphabet sizes",
            history.len,
            sizes.len()
        )));
    }
    let mut out = vec![0; history.len];
    let mut code = history.code;
    for j in (0..history.len).rev() {
        out[j] = code % sizes[j];
        code /= sizes[j];
    }
    if code != 0 {
        return Err(RdfError::InvalidArgument(format!(
            "code {} out of range for a prefix of length {}",
            history.code, history.len
        )));
    }
    Ok(out)
}

pub(crate) fn decode_into(mut code: usize, sizes: &[usize], out: &mut [usize]) {
    for j in (0..out.len()).rev() {
        out[j] = code % sizes[j];
        code /= sizes[j];
    }
}

/// How much of the past a source kernel reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Memory {
    Full,
    /// Only the last `m` source symbols.
    Last(usize),
}

/// One defect found by [`validate_source`].
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub stage: usize,
    /// Row index in the stage's kernel table (the conditioning history code).
    pub history: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    Negative { symbol: usize, value: f64 },
    NotFinite { symbol: usize },
    RowSum { sum: f64, deficit: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} history {}: ", self.stage, self.history)?;
        match self.kind {
            ViolationKind::Negative { symbol, value } => {
                write!(f, "negative entry {value} at symbol {symbol}")
            }
            ViolationKind::NotFinite { symbol } => write!(f, "non-finite entry at symbol {symbol}"),
            ViolationKind::RowSum { sum, deficit } => {
                // 12 decimals: enough to show a 1e-12 deviation, short for typed inputs
                let r = |v: f64| (v * 1e12).round() / 1e12;
                write!(f, "row sums to {} (deficit {})", r(sum), r(deficit))
            }
        }
    }
}

pub(crate) fn check_row(row: &[f64], stage: usize, history: usize, out: &mut Vec<Violation>) {
    let mut bad = false;
    for (symbol, &v) in row.iter().enumerate() {
        if !v.is_finite() {
            out.push(Violation {
                stage,
                history,
                kind: ViolationKind::NotFinite { symbol },
            });
            bad = true;
        } else if v < 0.0 {
            out.push(Violation {
                stage,
                history,
                kind: ViolationKind::Negative { symbol, value: v },
            });
            bad = true;
        }
    }
    if bad {
        return;
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        out.push(Violation {
            stage,
            history,
            kind: ViolationKind::RowSum {
                sum,
                deficit: 1.0 - sum,
            },
        });
    }
}

fn renormalize_rows(table: &mut [f64], width: usize) {
    for row in table.chunks_mut(width) {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        }
    }
}

/// A nonstationary source given by its per-stage kernels `p_i(x_i | x^{i-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceModel {
    alphabets: StageAlphabets,
    memory: Memory,
    // kernels[i][ctx * |X_i| + x_i]
    kernels: Vec<Vec<f64>>,
}

impl SourceModel {
    /// Validates and renormalizes the kernels.
    pub fn new(alphabets: StageAlphabets, memory: Memory, kernels: Vec<Vec<f64>>) -> Result<Self> {
        let mut source = Self::new_unvalidated(alphabets, memory, kernels)?;
        let report = validate_source(&source);
        if !report.is_empty() {
            return Err(RdfError::InvalidSource(report));
        }
        for i in 0..source.alphabets.n_stages() {
            let w = source.alphabets.x_size(i);
            renormalize_rows(&mut source.kernels[i], w);
        }
        Ok(source)
    }

    /// Checks table shapes only; the rows may not be probability vectors.
    pub fn new_unvalidated(
        alphabets: StageAlphabets,
        memory: Memory,
        kernels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if kernels.len() != alphabets.n_stages() {
            return Err(RdfError::InvalidArgument(format!(
                "expected {} stage kernels, got {}",
                alphabets.n_stages(),
                kernels.len()
            )));
        }
        let source = Self {
            alphabets,
            memory,
            kernels,
        };
        for (i, k) in source.kernels.iter().enumerate() {
            let want = source.context_count(i) * source.alphabets.x_size(i);
            if k.len() != want {
                return Err(RdfError::InvalidArgument(format!(
                    "stage {i} kernel has {} entries, expected {want}",
                    k.len()
                )));
            }
        }
        Ok(source)
    }

    /// IID source with per-stage law `p` and equal reproduction alphabet.
    pub fn iid(horizon: Horizon, p: &[f64]) -> Result<Self> {
        let alphabets = StageAlphabets::uniform(horizon, p.len(), p.len())?;
        let kernels = vec![p.to_vec(); horizon.n_stages()];
        Self::new(alphabets, Memory::Last(0), kernels)
    }

    /// First-order Markov source, `transition[a][b] = P(X_{i+1} = b | X_i = a)`.
    pub fn markov(horizon: Horizon, initial: &[f64], transition: &[Vec<f64>]) -> Result<Self> {
        let m = initial.len();
        if transition.len() != m || transition.iter().any(|r| r.len() != m) {
            return Err(RdfError::InvalidArgument(format!(
                "transition matrix must be {m} x {m}"
            )));
        }
        let alphabets = StageAlphabets::uniform(horizon, m, m)?;
        let flat: Vec<f64> = transition.iter().flatten().copied().collect();
        let mut kernels = vec![initial.to_vec()];
        kernels.extend((1..horizon.n_stages()).map(|_| flat.clone()));
        Self::new(alphabets, Memory::Last(1), kernels)
    }

    /// Binary symmetric Markov chain with flip probability `flip`, uniform start.
    pub fn binary_markov(horizon: Horizon, flip: f64) -> Result<Self> {
        Self::markov(
            horizon,
            &[0.5, 0.5],
            &[vec![1.0 - flip, flip], vec![flip, 1.0 - flip]],
        )
    }

    /// Replaces the reproduction alphabet sizes.
    pub fn with_y_sizes(self, y_sizes: Vec<usize>) -> Result<Self> {
        let alphabets = StageAlphabets::new(
            self.alphabets.horizon(),
            self.alphabets.x_sizes().to_vec(),
            y_sizes,
        )?;
        Ok(Self { alphabets, ..self })
    }

    pub fn alphabets(&self) -> &StageAlphabets {
        &self.alphabets
    }

    pub fn memory(&self) -> Memory {
        self.memory
    }

    pub fn kernels(&self) -> &[Vec<f64>] {
        &self.kernels
    }

    /// Number of kernel rows at `stage`.
    pub fn context_count(&self, stage: usize) -> usize {
        match self.memory {
            Memory::Full => self.alphabets.x_histories(stage),
            Memory::Last(m) => {
                let k = m.min(stage);
                self.alphabets.x_sizes()[stage - k..stage].iter().product()
            }
        }
    }

    /// Kernel row index for the past `x^{stage-1}` with code `past`.
    pub fn context_of(&self, stage: usize, past: usize) -> usize {
        match self.memory {
            Memory::Full => past,
            Memory::Last(_) => past % self.context_count(stage),
        }
    }

    /// `p_stage(. | x^{stage-1})` for the past with code `past`.
    pub fn kernel_row(&self, stage: usize, past: usize) -> &[f64] {
        let w = self.alphabets.x_size(stage);
        let ctx = self.context_of(stage, past);
        &self.kernels[stage][ctx * w..(ctx + 1) * w]
    }
}

/// Lists every kernel row that is not a probability vector within
/// [`ROW_TOL`]. Empty iff the source is valid.
pub fn validate_source(source: &SourceModel) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, k) in source.kernels.iter().enumerate() {
        let w = source.alphabets.x_size(i);
        for (ctx, row) in k.chunks(w).enumerate() {
            check_row(row, i, ctx, &mut out);
        }
    }
    out
}

/// Dense law `mu_{0,n}` over all source trajectories, indexed by history code.
pub fn full_joint_source(source: &SourceModel) -> Result<Vec<f64>> {
    let ab = source.alphabets();
    let n = ab.n_stages();
    ab.check_budget(ab.x_histories(n) as u128)?;
    let mut law = vec![1.0];
    for i in 0..n {
        law = extend_source_law(source, i, &law);
    }
    Ok(law)
}

/// `mu_{0,i}` from `mu_{0,i-1}`.
pub(crate) fn extend_source_law(source: &SourceModel, stage: usize, prev: &[f64]) -> Vec<f64> {
    let w = source.alphabets().x_size(stage);
    let mut next = vec![0.0; prev.len() * w];
    for (past, &p) in prev.iter().enumerate() {
        let row = source.kernel_row(stage, past);
        for (x, &k) in row.iter().enumerate() {
            next[past * w + x] = p * k;
        }
    }
    next
}

/// Single-letter distortion `rho(x, y)` shared by all stages.
#[derive(Clone, Debug, PartialEq)]
pub struct LetterTable {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl LetterTable {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 || rows.iter().any(|r| r.len() != ny) {
            return Err(RdfError::InvalidArgument(
                "distortion table must be a nonempty rectangular matrix".into(),
            ));
        }
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        check_costs(&values)?;
        Ok(Self { nx, ny, values })
    }

    pub fn hamming(size: usize) -> Self {
        let values = (0..size * size)
            .map(|k| if k / size == k % size { 0.0 } else { 1.0 })
            .collect();
        Self {
            nx: size,
            ny: size,
            values,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.ny + y]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_costs(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite() || *v < 0.0) {
        Some(k) => Err(RdfError::InvalidArgument(format!(
            "distortion entry {k} is {} (must be finite and nonnegative)",
            values[k]
        ))),
        None => Ok(()),
    }
}

/// Additive distortion `d_{0,n} = sum_i rho_{0,i}(x^i, y^i)`.
#[derive(Clone, Debug, PartialEq)]
pub enum DistortionSpec {
    SingleLetter(LetterTable),
    /// `tables[i][x_code * |Y^i| + y_code]` over histories of length `i + 1`.
    StageTables(Vec<Vec<f64>>),
}

impl DistortionSpec {
    pub fn hamming(size: usize) -> Self {
        Self::SingleLetter(LetterTable::hamming(size))
    }

    pub fn single_letter(rows: &[Vec<f64>]) -> Result<Self> {
        LetterTable::new(rows).map(Self::SingleLetter)
    }

    pub fn stage_tables(alphabets: &StageAlphabets, tables: Vec<Vec<f64>>) -> Result<Self> {
        let spec = Self::StageTables(tables);
        spec.check_shape(alphabets)?;
        Ok(spec)
    }

    /// Verifies the spec fits `alphabets`.
    pub fn check_shape(&self, alphabets: &StageAlphabets) -> Result<()> {
        match self {
            Self::SingleLetter(t) => {
                for i in 0..alphabets.n_stages() {
                    if alphabets.x_size(i) != t.nx || alphabets.y_size(i) != t.ny {
                        return Err(RdfError::InvalidArgument(format!(
                            "single-letter table is {}x{} but stage {i} alphabets are {}x{}",
                            t.nx,
                            t.ny,
                            alphabets.x_size(i),
                            alphabets.y_size(i)
                        )));
                    }
                }
                Ok(())
            }
            Self::StageTables(tables) => {
                if tables.len() != alphabets.n_stages() {
                    return Err(RdfError::InvalidArgument(format!(
                        "expected {} stage tables, got {}",
                        alphabets.n_stages(),
                        tables.len()
                    )));
                }
                for (i, t) in tables.iter().enumerate() {
                    let want = alphabets.x_histories(i + 1) * alphabets.y_histories(i + 1);
                    if t.len() != want {
                        return Err(RdfError::InvalidArgument(format!(
                            "stage {i} distortion table has {} entries, expected {want}",
                            t.len()
                        )));
                    }
                    check_costs(t)?;
                }
                Ok(())
            }
        }
    }

    /// `rho_{0,stage}(x^stage, y^stage)`.
    pub fn lookup(
        &self,
        alphabets: &StageAlphabets,
        stage: usize,
        x_hist: HistoryCode,
        y_hist: HistoryCode,
    ) -> Result<f64> {
        let len = stage + 1;
        if stage >= alphabets.n_stages()
            || x_hist.len != len
            || y_hist.len != len
            || x_hist.code >= alphabets.x_histories(len)
            || y_hist.code >= alphabets.y_histories(len)
        {
            return Err(RdfError::InvalidArgument(format!(
                "histories {x_hist:?}, {y_hist:?} do not address stage {stage}"
            )));
        }
        match self {
            Self::SingleLetter(t) => {
                let x = x_hist.code % alphabets.x_size(stage);
                let y = y_hist.code % alphabets.y_size(stage);
                if x >= t.nx || y >= t.ny {
                    return Err(RdfError::InvalidArgument(format!(
                        "symbols ({x}, {y}) outside the single-letter table"
                    )));
                }
                Ok(t.get(x, y))
            }
            Self::StageTables(tables) => {
                let ny = alphabets.y_histories(len);
                tables
                    .get(stage)
                    .and_then(|t| t.get(x_hist.code * ny + y_hist.code))
                    .copied()
                    .ok_or_else(|| {
                        RdfError::InvalidArgument(format!("no table entry for stage {stage}"))
                    })
            }
        }
    }

    /// Dense per-stage tables; exact for the single-letter form.
    pub fn expand(&self, alphabets: &StageAlphabets) -> Result<StageCosts> {
        self.check_shape(alphabets)?;
        let n = alphabets.n_stages();
        let mut entries = 0u128;
        for i in 0..n {
            entries += (alphabets.x_histories(i + 1) * alphabets.y_histories(i + 1)) as u128;
        }
        alphabets.check_budget(entries)?;
        let tables = match self {
            Self::StageTables(t) => t.clone(),
            Self::SingleLetter(t) => (0..n)
                .map(|i| {
                    let nxh = alphabets.x_histories(i + 1);
                    let nyh = alphabets.y_histories(i + 1);
                    let (mx, my) = (alphabets.x_size(i), alphabets.y_size(i));
                    let mut tab = Vec::with_capacity(nxh * nyh);
                    for xc in 0..nxh {
                        for yc in 0..nyh {
                            tab.push(t.get(xc % mx, yc % my));
                        }
                    }
                    tab
                })
                .collect(),
        };
        Ok(StageCosts {
            y_counts: (0..n).map(|i| alphabets.y_histories(i + 1)).collect(),
            tables,
        })
    }
}

/// Expanded per-stage distortion tables.
#[derive(Clone, Debug, PartialEq)]
pub struct StageCosts {
    y_counts: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

impl StageCosts {
    #[inline]
    pub fn get(&self, stage: usize, x_code: usize, y_code: usize) -> f64 {
        self.tables[stage][x_code * self.y_counts[stage] + y_code]
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }
}

/// Reproduction kernels `q_i(y_i | y^{i-1}, x^i)`.
///
/// Stage `i` is stored as `[(y_past * |X^i| + x_code) * |Y_i| + y_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalPolicy {
    alphabets: StageAlphabets,
    kernels: Vec<Vec<f64>>,
}

impl CausalPolicy {
    /// Validates and renormalizes the kernels.
    pub fn new(alphabets: StageAlphabets, kernels: Vec<Vec<f64>>) -> Result<Self> {
        let mut policy = Self::new_unvalidated(alphabets, kernels)?;
        let report = policy.validate();
        if !report.is_empty() {
            return Err(RdfError::InvalidArgument(format!(
                "policy rows are not probability vectors: {}",
                report
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
        for i in 0..policy.alphabets.n_stages() {
            let w = policy.alphabets.y_size(i);
            renormalize_rows(&mut policy.kernels[i], w);
        }
        Ok(policy)
    }

    pub(crate) fn new_unvalidated(
        alphabets: StageAlphabets,
        kernels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if kernels.len() != alphabets.n_stages() {
            return Err(RdfError::InvalidArgument(format!(
                "expected {} stage kernels, got {}",
                alphabets.n_stages(),
                kernels.len()
            )));
        }
        for (i, k) in kernels.iter().enumerate() {
            let want = Self::row_count_for(&alphabets, i) * alphabets.y_size(i);
            if k.len() != want {
                return Err(RdfError::InvalidArgument(format!(
                    "stage {i} policy has {} entries, expected {want}",
                    k.len()
                )));
            }
        }
        Ok(Self { alphabets, kernels })
    }

    /// Builds a policy row by row; `fill(stage, y_past, x_code, row)`.
    pub fn from_fn(
        alphabets: StageAlphabets,
        mut fill: impl FnMut(usize, usize, usize, &mut [f64]),
    ) -> Result<Self> {
        let kernels = (0..alphabets.n_stages())
            .map(|i| {
                let w = alphabets.y_size(i);
                let nx = alphabets.x_histories(i + 1);
                let mut k = vec![0.0; Self::row_count_for(&alphabets, i) * w];
                for (r, row) in k.chunks_mut(w).enumerate() {
                    fill(i, r / nx, r % nx, row);
                }
                k
            })
            .collect();
        Self::new(alphabets, kernels)
    }

    pub fn uniform(alphabets: StageAlphabets) -> Self {
        Self::from_fn(alphabets, |_, _, _, row| {
            let w = row.len() as f64;
            row.iter_mut().for_each(|v| *v = 1.0 / w);
        })
        .expect("uniform rows are valid")
    }

    /// `y_i = x_i` deterministically; needs matching alphabet sizes.
    pub fn identity(alphabets: StageAlphabets) -> Result<Self> {
        if alphabets.x_sizes() != alphabets.y_sizes() {
            return Err(RdfError::InvalidArgument(
                "identity policy needs equal source and reproduction alphabets".into(),
            ));
        }
        let sizes = alphabets.x_sizes().to_vec();
        Self::from_fn(alphabets, |i, _, x, row| row[x % sizes[i]] = 1.0)
    }

    /// `y_i = symbol` regardless of everything.
    pub fn constant(alphabets: StageAlphabets, symbol: usize) -> Result<Self> {
        if alphabets.y_sizes().iter().any(|&m| symbol >= m) {
            return Err(RdfError::InvalidArgument(format!(
                "symbol {symbol} is outside a reproduction alphabet"
            )));
        }
        Self::from_fn(alphabets, |_, _, _, row| row[symbol] = 1.0)
    }

    fn row_count_for(alphabets: &StageAlphabets, stage: usize) -> usize {
        alphabets.y_histories(stage) * alphabets.x_histories(stage + 1)
    }

    pub fn alphabets(&self) -> &StageAlphabets {
        &self.alphabets
    }

    pub fn kernels(&self) -> &[Vec<f64>] {
        &self.kernels
    }

    pub fn row_count(&self, stage: usize) -> usize {
        Self::row_count_for(&self.alphabets, stage)
    }

    #[inline]
    pub fn row(&self, stage: usize, y_past: usize, x_code: usize) -> &[f64] {
        let w = self.alphabets.y_size(stage);
        let r = y_past * self.alphabets.x_histories(stage + 1) + x_code;
        &self.kernels[stage][r * w..(r + 1) * w]
    }

    pub fn row_mut(&mut self, stage: usize, y_past: usize, x_code: usize) -> &mut [f64] {
        let w = self.alphabets.y_size(stage);
        let r = y_past * self.alphabets.x_histories(stage + 1) + x_code;
        &mut self.kernels[stage][r * w..(r + 1) * w]
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, k) in self.kernels.iter().enumerate() {
            for (r, row) in k.chunks(self.alphabets.y_size(i)).enumerate() {
                check_row(row, i, r, &mut out);
            }
        }
        out
    }

    /// Entrywise `(1 - lambda) * self + lambda * other`.
    pub fn mix(&self, other: &CausalPolicy, lambda: f64) -> Result<CausalPolicy> {
        if self.alphabets != other.alphabets || !(0.0..=1.0).contains(&lambda) {
            return Err(RdfError::InvalidArgument(
                "policies must share alphabets and lambda must lie in [0, 1]".into(),
            ));
        }
        let kernels = self
            .kernels
            .iter()
            .zip(&other.kernels)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(u, v)| (1.0 - lambda) * u + lambda * v)
                    .collect()
            })
            .collect();
        Ok(CausalPolicy {
            alphabets: self.alphabets.clone(),
            kernels,
        })
    }
}
