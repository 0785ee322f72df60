//! Joint probability mass functions over named finite-alphabet variables,
//! and the distribution algebra built on them: marginalization, conditioning,
//! channel composition, and empirical types.
//!
//! Probabilities are stored as a flat row-major array over the variable list,
//! so the last variable varies fastest. All downstream quantities (entropies,
//! divergences, region bounds) are computed from these tables exactly, up to
//! floating point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for "sums to one" checks on pmfs and channel rows.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Probabilities at or below this are treated as structural zeros when
/// computing supports (keeps KL divergences stable under fp noise).
pub const STRUCTURAL_ZERO: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum PmfError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{0}` has zero alphabet size")]
    EmptyAlphabet(String),
    #[error("probabilities sum to {sum}, expected 1 within {NORMALIZATION_TOL}")]
    NotNormalized { sum: f64 },
    #[error("probability entry {index} is {value}, expected nonnegative")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probability array has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("channel row {row} sums to {sum}, expected 1 within {NORMALIZATION_TOL}")]
    BadChannelRow { row: usize, sum: f64 },
    #[error("channel has {got} input rows, expected {expected}")]
    ChannelInputMismatch { expected: usize, got: usize },
    #[error("channel output size {got} exceeds cap {cap}")]
    ChannelCapExceeded { got: usize, cap: usize },
    #[error("variable lists do not match")]
    ShapeMismatch,
    #[error("selectors overlap on variable `{0}`")]
    OverlappingSelectors(String),
    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("sequences have unequal lengths")]
    UnequalLengths,
    #[error("expected {expected} sequences, got {got}")]
    SequenceCountMismatch { expected: usize, got: usize },
    #[error("typicality slack mu must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("conditioning event has zero probability")]
    ZeroMassCondition,
    #[error("value {value} for `{name}` out of range [0, {size})")]
    ValueOutOfRange {
        name: String,
        value: usize,
        size: usize,
    },
}

/// A named variable together with its alphabet size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub size: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// A joint pmf over an ordered list of finite-alphabet variables.
///
/// Invariants, enforced at construction:
/// - entries are nonnegative,
/// - entries sum to 1 within [`NORMALIZATION_TOL`],
/// - the array length equals the product of the alphabet sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointPmfRepr", into = "JointPmfRepr")]
pub struct JointPMF {
    vars: Vec<Variable>,
    probs: Vec<f64>,
}

/// Wire format: `{"variables":[{"name":"X1","size":2},...],"probs":[...]}`.
#[derive(Serialize, Deserialize)]
struct JointPmfRepr {
    variables: Vec<Variable>,
    probs: Vec<f64>,
}

impl TryFrom<JointPmfRepr> for JointPMF {
    type Error = PmfError;
    fn try_from(r: JointPmfRepr) -> Result<Self, PmfError> {
        JointPMF::new(r.variables, r.probs)
    }
}

impl From<JointPMF> for JointPmfRepr {
    fn from(p: JointPMF) -> Self {
        JointPmfRepr {
            variables: p.vars,
            probs: p.probs,
        }
    }
}

impl JointPMF {
    pub fn new(vars: Vec<Variable>, probs: Vec<f64>) -> Result<Self, PmfError> {
        let mut cells = 1usize;
        for (i, v) in vars.iter().enumerate() {
            if v.size == 0 {
                return Err(PmfError::EmptyAlphabet(v.name.clone()));
            }
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(PmfError::DuplicateVariable(v.name.clone()));
            }
            cells = cells
                .checked_mul(v.size)
                .ok_or(PmfError::LengthMismatch {
                    expected: usize::MAX,
                    got: probs.len(),
                })?;
        }
        if probs.len() != cells {
            return Err(PmfError::LengthMismatch {
                expected: cells,
                got: probs.len(),
            });
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !(p >= 0.0) {
                return Err(PmfError::NegativeProbability { index: i, value: p });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(PmfError::NotNormalized { sum });
        }
        Ok(Self { vars, probs })
    }

    /// Internal constructor for tables produced by exact algebra on already
    /// validated inputs (marginalization, composition). Skips re-validation.
    pub(crate) fn from_valid_parts(vars: Vec<Variable>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), vars.iter().map(|v| v.size).product::<usize>());
        Self { vars, probs }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn var_index(&self, name: &str) -> Result<usize, PmfError> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| PmfError::UnknownVariable(name.to_string()))
    }

    pub fn size_of(&self, name: &str) -> Result<usize, PmfError> {
        Ok(self.vars[self.var_index(name)?].size)
    }

    /// Resolves a list of names to indices, rejecting unknowns and duplicates
    /// across the combined selector set.
    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>, PmfError> {
        names.iter().map(|n| self.var_index(n)).collect()
    }

    /// Row-major strides, one per variable.
    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.vars[i + 1].size;
        }
        s
    }

    /// Decodes a flat index into the value of variable `vi`.
    fn value_at(&self, flat: usize, vi: usize, strides: &[usize]) -> usize {
        (flat / strides[vi]) % self.vars[vi].size
    }

    /// Sums the pmf down to the named variables, preserving their order as
    /// given. Summing onto an empty list yields the scalar pmf `[1.0]`.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPMF, PmfError> {
        let idx = self.resolve(keep)?;
        for (k, &i) in idx.iter().enumerate() {
            if idx[..k].contains(&i) {
                return Err(PmfError::DuplicateVariable(keep[k].to_string()));
            }
        }
        let out_vars: Vec<Variable> = idx.iter().map(|&i| self.vars[i].clone()).collect();
        let out_cells: usize = out_vars.iter().map(|v| v.size).product();
        let strides = self.strides();
        let mut out_strides = vec![1usize; idx.len()];
        for i in (0..idx.len().saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * out_vars[i + 1].size;
        }
        let mut out = vec![0.0f64; out_cells.max(1)];
        for (flat, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut o = 0usize;
            for (k, &vi) in idx.iter().enumerate() {
                o += self.value_at(flat, vi, &strides) * out_strides[k];
            }
            out[o] += p;
        }
        Ok(JointPMF::from_valid_parts(out_vars, out))
    }

    /// Groups every variable of the pmf into the given (disjoint) index
    /// groups and accumulates the table over the grouped axes; variables in
    /// no group are summed out. Returns the grouped dimensions and the data
    /// in row-major order over the groups.
    pub(crate) fn grouped(&self, groups: &[&[usize]]) -> (Vec<usize>, Vec<f64>) {
        let strides = self.strides();
        let dims: Vec<usize> = groups
            .iter()
            .map(|g| g.iter().map(|&vi| self.vars[vi].size).product::<usize>())
            .collect();
        let cells: usize = dims.iter().product();
        let mut out = vec![0.0f64; cells.max(1)];
        for (flat, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut o = 0usize;
            for (k, g) in groups.iter().enumerate() {
                let mut gi = 0usize;
                for &vi in g.iter() {
                    gi = gi * self.vars[vi].size + self.value_at(flat, vi, &strides);
                }
                o = o * dims[k] + gi;
            }
            out[o] += p;
        }
        (dims, out)
    }

    pub(crate) fn indices_of(&self, names: &[&str]) -> Result<Vec<usize>, PmfError> {
        self.resolve(names)
    }

    /// Conditions on the event `{name = value, ...}` and removes the fixed
    /// variables, renormalizing the rest.
    pub fn condition(&self, on: &[(&str, usize)]) -> Result<JointPMF, PmfError> {
        let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(on.len());
        for &(name, value) in on {
            let vi = self.var_index(name)?;
            if value >= self.vars[vi].size {
                return Err(PmfError::ValueOutOfRange {
                    name: name.to_string(),
                    value,
                    size: self.vars[vi].size,
                });
            }
            if fixed.iter().any(|&(w, _)| w == vi) {
                return Err(PmfError::DuplicateVariable(name.to_string()));
            }
            fixed.push((vi, value));
        }
        let keep: Vec<usize> = (0..self.vars.len())
            .filter(|i| !fixed.iter().any(|&(vi, _)| vi == *i))
            .collect();
        let out_vars: Vec<Variable> = keep.iter().map(|&i| self.vars[i].clone()).collect();
        let out_cells: usize = out_vars.iter().map(|v| v.size).product::<usize>().max(1);
        let strides = self.strides();
        let mut out = vec![0.0f64; out_cells];
        let mut mass = 0.0f64;
        for (flat, &p) in self.probs.iter().enumerate() {
            if fixed
                .iter()
                .any(|&(vi, val)| self.value_at(flat, vi, &strides) != val)
            {
                continue;
            }
            let mut o = 0usize;
            for &vi in keep.iter() {
                o = o * self.vars[vi].size + self.value_at(flat, vi, &strides);
            }
            out[o] += p;
            mass += p;
        }
        if mass <= STRUCTURAL_ZERO {
            return Err(PmfError::ZeroMassCondition);
        }
        for v in out.iter_mut() {
            *v /= mass;
        }
        Ok(JointPMF::from_valid_parts(out_vars, out))
    }

    /// Extends the joint with a new variable `new_var` drawn from `channel`
    /// applied to the tuple `onto` (row index is row-major over the listed
    /// variables). The output satisfies the Markov condition
    /// `new_var <-> onto <-> (rest)` exactly by construction.
    pub fn compose_channel(
        &self,
        channel: &TestChannel,
        onto: &[&str],
        new_var: &str,
    ) -> Result<JointPMF, PmfError> {
        let idx = self.resolve(onto)?;
        if self.vars.iter().any(|v| v.name == new_var) {
            return Err(PmfError::DuplicateVariable(new_var.to_string()));
        }
        let input_cells: usize = idx.iter().map(|&i| self.vars[i].size).product();
        if channel.input_size() != input_cells {
            return Err(PmfError::ChannelInputMismatch {
                expected: input_cells,
                got: channel.input_size(),
            });
        }
        let strides = self.strides();
        let nu = channel.output_size();
        let mut out_vars = self.vars.clone();
        out_vars.push(Variable::new(new_var, nu));
        let mut out = vec![0.0f64; self.probs.len() * nu];
        for (flat, &p) in self.probs.iter().enumerate() {
            let mut row = 0usize;
            for &vi in idx.iter() {
                row = row * self.vars[vi].size + self.value_at(flat, vi, &strides);
            }
            let rowp = channel.row(row);
            let base = flat * nu;
            for (u, &c) in rowp.iter().enumerate() {
                out[base + u] = p * c;
            }
        }
        Ok(JointPMF::from_valid_parts(out_vars, out))
    }

    /// Largest absolute cellwise difference; errors on shape mismatch.
    pub fn max_abs_diff(&self, other: &JointPMF) -> Result<f64, PmfError> {
        if self.vars != other.vars {
            return Err(PmfError::ShapeMismatch);
        }
        Ok(self
            .probs
            .iter()
            .zip(other.probs.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// A conditional pmf `P(U | X)` with one row per input symbol.
///
/// Rows must be pmfs (nonnegative, summing to 1 within
/// [`NORMALIZATION_TOL`]). Output cardinality caps come from the caller;
/// see [`TestChannel::check_output_cap`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TestChannel {
    rows: Vec<Vec<f64>>,
    output_size: usize,
}

impl TryFrom<Vec<Vec<f64>>> for TestChannel {
    type Error = PmfError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, PmfError> {
        TestChannel::new(rows)
    }
}

impl From<TestChannel> for Vec<Vec<f64>> {
    fn from(ch: TestChannel) -> Self {
        ch.rows
    }
}

impl TestChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, PmfError> {
        if rows.is_empty() {
            return Err(PmfError::ChannelInputMismatch {
                expected: 1,
                got: 0,
            });
        }
        let output_size = rows[0].len();
        if output_size == 0 {
            return Err(PmfError::EmptyAlphabet("channel output".to_string()));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != output_size {
                return Err(PmfError::LengthMismatch {
                    expected: output_size,
                    got: row.len(),
                });
            }
            let mut sum = 0.0;
            for (i, &p) in row.iter().enumerate() {
                if !(p >= 0.0) {
                    return Err(PmfError::NegativeProbability { index: i, value: p });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(PmfError::BadChannelRow { row: r, sum });
            }
        }
        Ok(Self { rows, output_size })
    }

    /// Deterministic channel copying the input (padded with unreachable
    /// outputs when `output_size > input_size`).
    pub fn identity(input_size: usize, output_size: usize) -> Self {
        assert!(output_size >= input_size && input_size > 0);
        let rows = (0..input_size)
            .map(|x| {
                let mut row = vec![0.0; output_size];
                row[x] = 1.0;
                row
            })
            .collect();
        Self {
            rows,
            output_size,
        }
    }

    /// Channel whose rows are all equal, making the output independent of
    /// the input.
    pub fn constant(input_size: usize, output_pmf: Vec<f64>) -> Result<Self, PmfError> {
        let rows = vec![output_pmf; input_size.max(1)];
        Self::new(rows)
    }

    /// Binary symmetric channel with the given crossover probability.
    pub fn binary_symmetric(crossover: f64) -> Result<Self, PmfError> {
        Self::new(vec![
            vec![1.0 - crossover, crossover],
            vec![crossover, 1.0 - crossover],
        ])
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn check_output_cap(&self, cap: usize) -> Result<(), PmfError> {
        if self.output_size > cap {
            return Err(PmfError::ChannelCapExceeded {
                got: self.output_size,
                cap,
            });
        }
        Ok(())
    }

    /// Output marginal induced by `input_pmf`.
    pub fn output_marginal(&self, input_pmf: &[f64]) -> Result<Vec<f64>, PmfError> {
        if input_pmf.len() != self.rows.len() {
            return Err(PmfError::ChannelInputMismatch {
                expected: self.rows.len(),
                got: input_pmf.len(),
            });
        }
        let mut out = vec![0.0; self.output_size];
        for (x, row) in self.rows.iter().enumerate() {
            for (u, &c) in row.iter().enumerate() {
                out[u] += input_pmf[x] * c;
            }
        }
        Ok(out)
    }
}

/// Frequency pmf of parallel symbol sequences, one joint-type cell per
/// tuple of symbols. Variables are named `S1..Sk`.
pub fn empirical_joint_type(seqs: &[&[usize]], sizes: &[usize]) -> Result<JointPMF, PmfError> {
    if seqs.len() != sizes.len() {
        return Err(PmfError::SequenceCountMismatch {
            expected: sizes.len(),
            got: seqs.len(),
        });
    }
    if seqs.is_empty() || seqs[0].is_empty() {
        return Err(PmfError::EmptySequence);
    }
    let n = seqs[0].len();
    if seqs.iter().any(|s| s.len() != n) {
        return Err(PmfError::UnequalLengths);
    }
    let cells: usize = sizes.iter().product();
    let mut counts = vec![0u64; cells];
    for i in 0..n {
        let mut idx = 0usize;
        for (k, seq) in seqs.iter().enumerate() {
            let s = seq[i];
            if s >= sizes[k] {
                return Err(PmfError::SymbolOutOfRange {
                    symbol: s,
                    size: sizes[k],
                });
            }
            idx = idx * sizes[k] + s;
        }
        counts[idx] += 1;
    }
    let vars = sizes
        .iter()
        .enumerate()
        .map(|(k, &s)| Variable::new(format!("S{}", k + 1), s))
        .collect();
    let probs = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(JointPMF::from_valid_parts(vars, probs))
}

/// Frequency pmf of a single sequence.
pub fn empirical_type(seq: &[usize], size: usize) -> Result<JointPMF, PmfError> {
    empirical_joint_type(&[seq], &[size])
}
