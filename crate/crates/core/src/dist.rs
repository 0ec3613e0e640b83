//! Distribution types and the two-variable matrix algebra.
//!
//! Orientation is fixed across the crate: a conditional `P(X|Y)` is stored
//! column-stochastic, rows indexed by outcomes of `X` and columns by outcomes
//! of `Y`, so that `P(X) = P(X|Y) * P(Y)`. A joint stores the later variable
//! on rows and the earlier (preceding) variable on columns: the forward joint
//! `P(A,B)` has rows `a_i`, columns `b_j`, and `B` precedes `A`.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every operation that normalizes, divides
/// by a marginal, or inverts a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed deviation of a normalization sum from 1.
    pub sum_tol: f64,
    /// Largest accepted condition number before an inversion is refused.
    pub cond_max: f64,
    /// Marginal entries at or below this count as outside the support.
    pub support_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sum_tol: 1e-9,
            cond_max: 1e8,
            support_eps: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn new(sum_tol: f64, cond_max: f64, support_eps: f64) -> Result<Self> {
        for (name, v) in [
            ("sum_tol", sum_tol),
            ("cond_max", cond_max),
            ("support_eps", support_eps),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Tolerances {
            sum_tol,
            cond_max,
            support_eps,
        })
    }
}

pub(crate) fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn check_labels(labels: &[String], n: usize, what: &str) -> Result<()> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {} labels for {n} entries",
            labels.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::InvalidDistribution(format!("{what}: duplicate label `{l}`")));
        }
    }
    Ok(())
}

fn check_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    if values.into_iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDistribution(format!("{what}: non-finite entry")));
    }
    Ok(())
}

/// A real vector summing to one whose entries may be negative or exceed one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiVector {
    labels: Vec<String>,
    entries: DVector<f64>,
}

impl QuasiVector {
    pub fn new(entries: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        let labels = default_labels("x", entries.len());
        Self::with_labels(labels, entries, tol)
    }

    pub fn with_labels(labels: Vec<String>, entries: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        check_labels(&labels, entries.len(), "vector")?;
        check_finite(entries.iter().copied(), "vector")?;
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > tol.sum_tol {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, expected 1 within {:e}",
                tol.sum_tol
            )));
        }
        Ok(QuasiVector {
            labels,
            entries: DVector::from_vec(entries),
        })
    }

    /// Builds without checking normalization. Used for quantities that are
    /// normalized by construction, or deliberately off-normal diagnostics.
    pub fn from_parts_unchecked(labels: Vec<String>, entries: DVector<f64>) -> Self {
        debug_assert_eq!(labels.len(), entries.len());
        QuasiVector { labels, entries }
    }

    pub fn entries(&self) -> &DVector<f64> {
        &self.entries
    }

    pub fn as_slice(&self) -> &[f64] {
        self.entries.as_slice()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.entries.sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.min()
    }

    /// Indices whose entry lies outside `[0, 1]` by more than `slack`.
    pub fn out_of_unit_range(&self, slack: f64) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < -slack || v > 1.0 + slack)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn relabel(mut self, labels: Vec<String>) -> Result<Self> {
        check_labels(&labels, self.len(), "vector")?;
        self.labels = labels;
        Ok(self)
    }

    pub fn to_prob(&self, tol: &Tolerances) -> Result<ProbVector> {
        ProbVector::from_quasi(self.clone(), tol)
    }
}

/// A marginal distribution: non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(QuasiVector);

impl ProbVector {
    pub fn new(entries: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        Self::from_quasi(QuasiVector::new(entries, tol)?, tol)
    }

    pub fn with_labels(labels: Vec<String>, entries: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        Self::from_quasi(QuasiVector::with_labels(labels, entries, tol)?, tol)
    }

    pub fn from_quasi(q: QuasiVector, tol: &Tolerances) -> Result<Self> {
        if let Some((i, v)) = q.entries.iter().enumerate().find(|(_, &v)| v < -tol.sum_tol) {
            return Err(Error::InvalidDistribution(format!("entry {i} is negative ({v})")));
        }
        Ok(ProbVector(q))
    }

    pub fn uniform(n: usize) -> Self {
        let labels = default_labels("x", n);
        ProbVector(QuasiVector::from_parts_unchecked(
            labels,
            DVector::from_element(n, 1.0 / n as f64),
        ))
    }

    pub fn into_quasi(self) -> QuasiVector {
        self.0
    }
}

impl Deref for ProbVector {
    type Target = QuasiVector;
    fn deref(&self) -> &QuasiVector {
        &self.0
    }
}

/// A matrix whose columns each sum to one; entries are sign-unrestricted.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiStochasticMatrix {
    rows: Vec<String>,
    cols: Vec<String>,
    data: DMatrix<f64>,
}

impl QuasiStochasticMatrix {
    pub fn new(data: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let rows = default_labels("r", data.nrows());
        let cols = default_labels("c", data.ncols());
        Self::with_labels(rows, cols, data, tol)
    }

    pub fn with_labels(
        rows: Vec<String>,
        cols: Vec<String>,
        data: DMatrix<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        check_labels(&rows, data.nrows(), "matrix rows")?;
        check_labels(&cols, data.ncols(), "matrix columns")?;
        check_finite(data.iter().copied(), "matrix")?;
        if data.is_empty() {
            return Err(Error::InvalidDistribution("empty matrix".into()));
        }
        let m = QuasiStochasticMatrix { rows, cols, data };
        if let Some((j, dev)) = m
            .column_sum_deviations()
            .into_iter()
            .enumerate()
            .find(|(_, d)| *d > tol.sum_tol)
        {
            return Err(Error::InvalidDistribution(format!(
                "column {j} sum deviates from 1 by {dev:e}"
            )));
        }
        Ok(m)
    }

    pub fn from_parts_unchecked(rows: Vec<String>, cols: Vec<String>, data: DMatrix<f64>) -> Self {
        debug_assert_eq!(rows.len(), data.nrows());
        debug_assert_eq!(cols.len(), data.ncols());
        QuasiStochasticMatrix { rows, cols, data }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn row_labels(&self) -> &[String] {
        &self.rows
    }

    pub fn col_labels(&self) -> &[String] {
        &self.cols
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    /// `|sum(column j) - 1|` for every column.
    pub fn column_sum_deviations(&self) -> Vec<f64> {
        self.data
            .column_iter()
            .map(|c| (c.sum() - 1.0).abs())
            .collect()
    }

    /// Entries outside `[0, 1]` by more than `slack`, as `(row, col, value)`.
    pub fn out_of_unit_range(&self, slack: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                let v = self.data[(i, j)];
                if v < -slack || v > 1.0 + slack {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn to_stochastic(&self, tol: &Tolerances) -> Result<StochasticMatrix> {
        StochasticMatrix::from_quasi(self.clone(), tol)
    }
}

/// A conditional distribution `P(X|Y)`: non-negative, column-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(QuasiStochasticMatrix);

impl StochasticMatrix {
    pub fn new(data: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        Self::from_quasi(QuasiStochasticMatrix::new(data, tol)?, tol)
    }

    pub fn with_labels(
        rows: Vec<String>,
        cols: Vec<String>,
        data: DMatrix<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        Self::from_quasi(QuasiStochasticMatrix::with_labels(rows, cols, data, tol)?, tol)
    }

    pub fn from_quasi(q: QuasiStochasticMatrix, tol: &Tolerances) -> Result<Self> {
        if let Some(((i, j), v)) = q
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| ((k % q.nrows(), k / q.nrows()), *v))
            .find(|(_, v)| *v < -tol.sum_tol)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry ({i},{j}) is negative ({v})"
            )));
        }
        Ok(StochasticMatrix(q))
    }

    pub fn identity(n: usize) -> Self {
        StochasticMatrix(QuasiStochasticMatrix::from_parts_unchecked(
            default_labels("a", n),
            default_labels("b", n),
            DMatrix::identity(n, n),
        ))
    }

    pub fn into_quasi(self) -> QuasiStochasticMatrix {
        self.0
    }
}

impl Deref for StochasticMatrix {
    type Target = QuasiStochasticMatrix;
    fn deref(&self) -> &QuasiStochasticMatrix {
        &self.0
    }
}

/// A two-variable joint distribution for one ordering of the variables.
///
/// Rows belong to `row_var`, columns to `col_var`, and `col_var` precedes
/// `row_var`. Entries sum to one; reverse-ordering joints may be signed.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    row_var: String,
    col_var: String,
    rows: Vec<String>,
    cols: Vec<String>,
    data: DMatrix<f64>,
}

impl JointDist {
    /// Forward joint `P(A,B)` with default names and labels.
    pub fn new(data: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let rows = default_labels("a", data.nrows());
        let cols = default_labels("b", data.ncols());
        Self::with_labels("A", "B", rows, cols, data, tol)
    }

    pub fn from_rows(rows: &[&[f64]], tol: &Tolerances) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(n, m, |i, j| rows[i][j]), tol)
    }

    pub fn with_labels(
        row_var: &str,
        col_var: &str,
        rows: Vec<String>,
        cols: Vec<String>,
        data: DMatrix<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let j = Self::unchecked(row_var, col_var, rows, cols, data)?;
        let total = j.data.sum();
        if (total - 1.0).abs() > tol.sum_tol {
            return Err(Error::InvalidDistribution(format!(
                "joint sums to {total}, expected 1 within {:e}",
                tol.sum_tol
            )));
        }
        Ok(j)
    }

    /// Shape and label checks only; the total mass is not checked.
    pub fn unchecked(
        row_var: &str,
        col_var: &str,
        rows: Vec<String>,
        cols: Vec<String>,
        data: DMatrix<f64>,
    ) -> Result<Self> {
        check_labels(&rows, data.nrows(), "joint rows")?;
        check_labels(&cols, data.ncols(), "joint columns")?;
        check_finite(data.iter().copied(), "joint")?;
        if data.is_empty() {
            return Err(Error::InvalidDistribution("empty joint".into()));
        }
        if row_var == col_var {
            return Err(Error::InvalidDistribution(format!(
                "row and column variable are both `{row_var}`"
            )));
        }
        Ok(JointDist {
            row_var: row_var.to_string(),
            col_var: col_var.to_string(),
            rows,
            cols,
            data,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn row_var(&self) -> &str {
        &self.row_var
    }

    pub fn col_var(&self) -> &str {
        &self.col_var
    }

    pub fn row_labels(&self) -> &[String] {
        &self.rows
    }

    pub fn col_labels(&self) -> &[String] {
        &self.cols
    }

    /// Ordering tag, earliest variable first, e.g. `"B,A"` for `P(A,B)`.
    pub fn ordering_tag(&self) -> String {
        format!("{},{}", self.col_var, self.row_var)
    }

    pub fn total(&self) -> f64 {
        self.data.sum()
    }

    /// True when every entry is non-negative within `slack`.
    pub fn is_nonnegative(&self, slack: f64) -> bool {
        self.data.iter().all(|&v| v >= -slack)
    }

    /// The same numbers viewed under the opposite variable roles, i.e. the
    /// matrix transpose with names swapped. Under the Kolmogorov axioms this
    /// is the reverse-ordering joint.
    pub fn transposed(&self) -> JointDist {
        JointDist {
            row_var: self.col_var.clone(),
            col_var: self.row_var.clone(),
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            data: self.data.transpose(),
        }
    }
}

/// Row and column sums of a joint: `(P(row var), P(col var))`.
pub fn marginals(joint: &JointDist) -> (QuasiVector, QuasiVector) {
    let m = joint.matrix();
    let rows = DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.sum()));
    let cols = DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum()));
    (
        QuasiVector::from_parts_unchecked(joint.rows.clone(), rows),
        QuasiVector::from_parts_unchecked(joint.cols.clone(), cols),
    )
}

/// Conditional of the row variable given the column variable,
/// `P(row|col)(i,j) = J(i,j) / P(col_j)`.
pub fn conditional_from_joint(joint: &JointDist, tol: &Tolerances) -> Result<QuasiStochasticMatrix> {
    let (_, col_m) = marginals(joint);
    if let Some((index, &value)) = col_m
        .as_slice()
        .iter()
        .enumerate()
        .find(|(_, &v)| v.abs() <= tol.support_eps)
    {
        return Err(Error::ZeroMarginal { index, value });
    }
    Ok(divide_columns(joint, &col_m, None))
}

/// Conditional restricted to the support of the conditioning marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportConditional {
    /// Full-size matrix; columns outside the support are zero.
    pub matrix: QuasiStochasticMatrix,
    /// Column indices inside the support.
    pub support: Vec<usize>,
}

/// Like [`conditional_from_joint`], but columns whose marginal mass is at or
/// below `support_eps` are left at zero instead of raising `ZeroMarginal`.
pub fn conditional_on_support(joint: &JointDist, tol: &Tolerances) -> Result<SupportConditional> {
    let (_, col_m) = marginals(joint);
    let support: Vec<usize> = (0..col_m.len())
        .filter(|&j| col_m.as_slice()[j].abs() > tol.support_eps)
        .collect();
    if support.is_empty() {
        return Err(Error::ZeroMarginal {
            index: 0,
            value: col_m.as_slice()[0],
        });
    }
    Ok(SupportConditional {
        matrix: divide_columns(joint, &col_m, Some(&support)),
        support,
    })
}

fn divide_columns(
    joint: &JointDist,
    col_m: &QuasiVector,
    support: Option<&[usize]>,
) -> QuasiStochasticMatrix {
    let m = joint.matrix();
    let data = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if support.is_some_and(|s| !s.contains(&j)) {
            0.0
        } else {
            m[(i, j)] / col_m.as_slice()[j]
        }
    });
    QuasiStochasticMatrix::from_parts_unchecked(joint.rows.clone(), joint.cols.clone(), data)
}

/// `J(i,j) = M(i,j) * prior(j)`. The model may be a quasi-stochastic matrix
/// and the prior a quasi-vector; the joint then inherits their signs.
pub fn joint_from_model(model: &QuasiStochasticMatrix, prior: &QuasiVector) -> Result<JointDist> {
    if model.ncols() != prior.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} columns, prior has {} entries",
            model.ncols(),
            prior.len()
        )));
    }
    let m = model.matrix();
    let p = prior.as_slice();
    let data = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * p[j]);
    JointDist::unchecked(
        "A",
        "B",
        model.row_labels().to_vec(),
        model.col_labels().to_vec(),
        data,
    )
}

/// Singular values of `m`, largest first.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// 2-norm condition number `sigma_max / sigma_min`; infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// A checked matrix inverse together with its conditioning diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Inverse {
    pub inverse: DMatrix<f64>,
    /// 2-norm condition estimate of the input.
    pub condition: f64,
    /// `max(|M M^-1 - I|, |M^-1 M - I|)` in the entrywise max norm.
    pub residual: f64,
    /// A-priori bound on the residual, `n * eps * condition` scaled by a small
    /// safety factor.
    pub bound: f64,
}

/// Inverts a square matrix, refusing singular or ill-conditioned input.
pub fn invert(m: &DMatrix<f64>, tol: &Tolerances) -> Result<Inverse> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::NotSquare {
            rows: n,
            cols: m.ncols(),
        });
    }
    let sv = singular_values(m);
    let hi = sv[0];
    let lo = *sv.last().unwrap();
    // relative rank cut-off, same scale as LAPACK's default rcond
    if hi == 0.0 || lo <= hi * n as f64 * f64::EPSILON {
        return Err(Error::Singular { sigma_min: lo });
    }
    let condition = hi / lo;
    if condition > tol.cond_max {
        return Err(Error::IllConditioned {
            estimate: condition,
            cap: tol.cond_max,
        });
    }
    let inverse = m
        .clone()
        .try_inverse()
        .ok_or(Error::Singular { sigma_min: lo })?;
    let eye = DMatrix::<f64>::identity(n, n);
    let residual = (m * &inverse - &eye)
        .amax()
        .max((&inverse * m - &eye).amax());
    let bound = 16.0 * n as f64 * f64::EPSILON * condition;
    Ok(Inverse {
        inverse,
        condition,
        residual,
        bound,
    })
}

/// The joint for the opposite ordering of the two variables when the inverse
/// conditional is the reverse channel:
/// `P(B,A) = diag(P(B)) * P(A,B)^-1 * diag(P(A))`.
///
/// Requires a square, full-rank joint. See [`reverse_joint_on_support`] for
/// rank-deficient input.
pub fn reverse_joint(joint: &JointDist, tol: &Tolerances) -> Result<JointDist> {
    let inv = invert(joint.matrix(), tol)?;
    let (row_m, col_m) = marginals(joint);
    let data = DMatrix::from_fn(joint.data.ncols(), joint.data.nrows(), |j, i| {
        col_m.as_slice()[j] * inv.inverse[(j, i)] * row_m.as_slice()[i]
    });
    JointDist::unchecked(
        &joint.col_var,
        &joint.row_var,
        joint.cols.clone(),
        joint.rows.clone(),
        data,
    )
}

/// Result of reversing a joint on a restricted support.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedReverse {
    /// Full-size reverse joint (rows = original columns); entries outside the
    /// kept block are zero.
    pub joint: JointDist,
    /// Kept rows of the original joint.
    pub kept_rows: Vec<usize>,
    /// Kept columns of the original joint.
    pub kept_cols: Vec<usize>,
    /// Mass of the original joint outside the kept block. Zero when only
    /// zero-marginal rows and columns were dropped.
    pub dropped_mass: f64,
}

/// Reverses a joint after deleting rows and columns with zero marginal mass
/// and, if the remainder is still rank deficient, shrinking it to a
/// full-rank square block chosen by complete pivoting. The kept block is
/// renormalized before reversal and zeros are re-embedded afterwards.
pub fn reverse_joint_on_support(joint: &JointDist, tol: &Tolerances) -> Result<RestrictedReverse> {
    let (row_m, col_m) = marginals(joint);
    let rows: Vec<usize> = (0..row_m.len())
        .filter(|&i| row_m.as_slice()[i].abs() > tol.support_eps)
        .collect();
    let cols: Vec<usize> = (0..col_m.len())
        .filter(|&j| col_m.as_slice()[j].abs() > tol.support_eps)
        .collect();
    let block = joint.data.select_rows(&rows).select_columns(&cols);
    let (pr, pc) = full_rank_block(&block);
    let kept_rows: Vec<usize> = pr.iter().map(|&k| rows[k]).collect();
    let kept_cols: Vec<usize> = pc.iter().map(|&k| cols[k]).collect();
    if kept_rows.is_empty() {
        return Err(Error::Singular { sigma_min: 0.0 });
    }
    let sub = joint.data.select_rows(&kept_rows).select_columns(&kept_cols);
    let mass = sub.sum();
    if mass.abs() <= tol.support_eps {
        return Err(Error::ZeroMarginal { index: 0, value: mass });
    }
    let sub_joint = JointDist::unchecked(
        &joint.row_var,
        &joint.col_var,
        kept_rows.iter().map(|&i| joint.rows[i].clone()).collect(),
        kept_cols.iter().map(|&j| joint.cols[j].clone()).collect(),
        sub / mass,
    )?;
    let rev = reverse_joint(&sub_joint, tol)?;
    let mut data = DMatrix::zeros(joint.data.ncols(), joint.data.nrows());
    for (a, &j) in kept_cols.iter().enumerate() {
        for (b, &i) in kept_rows.iter().enumerate() {
            data[(j, i)] = rev.data[(a, b)];
        }
    }
    Ok(RestrictedReverse {
        joint: JointDist::unchecked(
            &joint.col_var,
            &joint.row_var,
            joint.cols.clone(),
            joint.rows.clone(),
            data,
        )?,
        kept_rows,
        kept_cols,
        dropped_mass: 1.0 - mass,
    })
}

/// Greedy complete-pivoting elimination; returns the pivot rows and columns
/// of a nonsingular square block of maximal size (sorted).
fn full_rank_block(m: &DMatrix<f64>) -> (Vec<usize>, Vec<usize>) {
    let mut a = m.clone();
    let (nr, nc) = a.shape();
    let scale = a.amax();
    let mut rows_left: Vec<usize> = (0..nr).collect();
    let mut cols_left: Vec<usize> = (0..nc).collect();
    let mut pr = Vec::new();
    let mut pc = Vec::new();
    if scale == 0.0 {
        return (pr, pc);
    }
    let cut = scale * (nr.max(nc) as f64) * f64::EPSILON * 1e3;
    loop {
        let mut best = (0usize, 0usize, 0.0f64);
        for (ri, &r) in rows_left.iter().enumerate() {
            for (ci, &c) in cols_left.iter().enumerate() {
                if a[(r, c)].abs() > best.2 {
                    best = (ri, ci, a[(r, c)].abs());
                }
            }
        }
        if best.2 <= cut {
            break;
        }
        let r = rows_left.remove(best.0);
        let c = cols_left.remove(best.1);
        let piv = a[(r, c)];
        for &rr in &rows_left {
            let f = a[(rr, c)] / piv;
            for &cc in &cols_left {
                a[(rr, cc)] -= f * a[(r, cc)];
            }
        }
        pr.push(r);
        pc.push(c);
        if rows_left.is_empty() || cols_left.is_empty() {
            break;
        }
    }
    pr.sort_unstable();
    pc.sort_unstable();
    (pr, pc)
}

/// True iff every entry of the joint is within `tol.sum_tol` of the outer
/// product of its marginals.
pub fn is_product(joint: &JointDist, tol: &Tolerances) -> bool {
    let (row_m, col_m) = marginals(joint);
    let m = joint.matrix();
    (0..m.nrows()).all(|i| {
        (0..m.ncols()).all(|j| (m[(i, j)] - row_m.as_slice()[i] * col_m.as_slice()[j]).abs() <= tol.sum_tol)
    })
}
