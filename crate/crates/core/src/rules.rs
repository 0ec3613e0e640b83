//! Inference rules as R-matrices.
//!
//! A rule fixes the reverse conditional through
//! `P(B|A) = diag(P(B)) * R^-1 * diag(P(A))^-1`. Any `R` with `R 1_B = 1_A`
//! and `R^T P(A) = P(B)` yields a posterior whose columns sum to one and that
//! maps `P(A)` onto `P(B)`. Bayes' rule is `R_K = (P(A|B)^T)^-1`; the
//! inversion rule is `R_I = diag(P(A))^-1 P(A|B) diag(P(B))` and gives
//! `P(B|A) = P(A|B)^-1`. First-order rules interpolate linearly between the
//! two at the R level, higher-order rules alternate products and inverses.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dist::{
    invert, joint_from_model, marginals, conditional_from_joint, JointDist, QuasiStochasticMatrix,
    QuasiVector, StochasticMatrix, Tolerances,
};
use crate::error::{Error, Result};

/// Model and marginals a rule is evaluated against.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleContext {
    model: StochasticMatrix,
    prior_b: QuasiVector,
    prior_a: QuasiVector,
}

impl RuleContext {
    /// Context whose `P(A)` is pushed forward from the prior: `P(A) = P(A|B) P(B)`.
    /// The prior may be signed (an inferred quasi-prior).
    pub fn new(model: StochasticMatrix, prior_b: QuasiVector) -> Result<Self> {
        if model.ncols() != prior_b.len() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} columns, prior has {} entries",
                model.ncols(),
                prior_b.len()
            )));
        }
        let pa = model.matrix() * prior_b.entries();
        let prior_a = QuasiVector::from_parts_unchecked(model.row_labels().to_vec(), pa);
        Ok(RuleContext {
            model,
            prior_b,
            prior_a,
        })
    }

    /// Context with an explicitly supplied `P(A)`, which must agree with
    /// `P(A|B) P(B)` within `sum_tol`.
    pub fn with_marginals(
        model: StochasticMatrix,
        prior_b: QuasiVector,
        prior_a: QuasiVector,
        tol: &Tolerances,
    ) -> Result<Self> {
        let ctx = Self::unchecked(model, prior_b, prior_a)?;
        let r = ctx.consistency_residual();
        if r > tol.sum_tol {
            return Err(Error::InvalidDistribution(format!(
                "P(A) differs from P(A|B) P(B) by {r:e}"
            )));
        }
        Ok(ctx)
    }

    /// Context without the `P(A) = P(A|B) P(B)` check. Only dimensions are
    /// validated. Used to evaluate rules against deliberately wrong marginals.
    pub fn unchecked(model: StochasticMatrix, prior_b: QuasiVector, prior_a: QuasiVector) -> Result<Self> {
        if model.ncols() != prior_b.len() || model.nrows() != prior_a.len() {
            return Err(Error::DimensionMismatch(format!(
                "model is {}x{}, marginals have {} and {} entries",
                model.nrows(),
                model.ncols(),
                prior_a.len(),
                prior_b.len()
            )));
        }
        Ok(RuleContext {
            model,
            prior_b,
            prior_a,
        })
    }

    /// Model `P(A|B)` and both marginals of a forward joint.
    pub fn from_joint(joint: &JointDist, tol: &Tolerances) -> Result<Self> {
        let model = conditional_from_joint(joint, tol)?.to_stochastic(tol)?;
        let (pa, pb) = marginals(joint);
        Self::with_marginals(model, pb, pa, tol)
    }

    pub fn model(&self) -> &StochasticMatrix {
        &self.model
    }

    pub fn prior_b(&self) -> &QuasiVector {
        &self.prior_b
    }

    pub fn prior_a(&self) -> &QuasiVector {
        &self.prior_a
    }

    /// `|P(A|B) P(B) - P(A)|_inf`.
    pub fn consistency_residual(&self) -> f64 {
        (self.model.matrix() * self.prior_b.entries() - self.prior_a.entries()).amax()
    }

    fn check_support(v: &QuasiVector, tol: &Tolerances) -> Result<()> {
        match v.as_slice().iter().enumerate().find(|(_, x)| x.abs() <= tol.support_eps) {
            Some((index, &value)) => Err(Error::ZeroMarginal { index, value }),
            None => Ok(()),
        }
    }
}

/// An R-matrix together with the consistency residuals measured against the
/// context it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    data: DMatrix<f64>,
    /// Closed-form inverse when the construction provides one.
    inverse: Option<DMatrix<f64>>,
    residual_ones: f64,
    residual_marginal: f64,
}

impl RMatrix {
    /// Wraps an arbitrary matrix, recording its residuals against `ctx`.
    pub fn from_matrix(data: DMatrix<f64>, ctx: &RuleContext) -> Result<Self> {
        Self::build(data, None, ctx)
    }

    fn build(data: DMatrix<f64>, inverse: Option<DMatrix<f64>>, ctx: &RuleContext) -> Result<Self> {
        let (ones, marg) = residuals(&data, ctx)?;
        Ok(RMatrix {
            data,
            inverse,
            residual_ones: ones,
            residual_marginal: marg,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Closed-form inverse, if the construction supplied one.
    pub fn known_inverse(&self) -> Option<&DMatrix<f64>> {
        self.inverse.as_ref()
    }

    /// `|R 1_B - 1_A|_inf` at construction time.
    pub fn residual_ones(&self) -> f64 {
        self.residual_ones
    }

    /// `|R^T P(A) - P(B)|_inf` at construction time.
    pub fn residual_marginal(&self) -> f64 {
        self.residual_marginal
    }

    fn inverse_or_compute(&self, tol: &Tolerances) -> Result<DMatrix<f64>> {
        match &self.inverse {
            Some(inv) => Ok(inv.clone()),
            None => Ok(invert(&self.data, tol)?.inverse),
        }
    }
}

fn residuals(r: &DMatrix<f64>, ctx: &RuleContext) -> Result<(f64, f64)> {
    let na = ctx.prior_a.len();
    let nb = ctx.prior_b.len();
    if r.shape() != (na, nb) {
        return Err(Error::DimensionMismatch(format!(
            "R is {}x{}, expected {na}x{nb}",
            r.nrows(),
            r.ncols()
        )));
    }
    let ones = (r * DVector::from_element(nb, 1.0) - DVector::from_element(na, 1.0)).amax();
    let marg = (r.transpose() * ctx.prior_a.entries() - ctx.prior_b.entries()).amax();
    Ok((ones, marg))
}

/// Bayes' rule: `R_K = (P(A|B)^T)^-1`.
pub fn r_bayes(ctx: &RuleContext, tol: &Tolerances) -> Result<RMatrix> {
    // transpose of the same inverse the inversion rule uses, so the conjugate
    // pair agrees to rounding in the diagonal scalings only
    let m = ctx.model.matrix();
    let inv = invert(m, tol)?;
    RMatrix::build(inv.inverse.transpose(), Some(m.transpose()), ctx)
}

/// The inversion rule: `R_I = diag(P(A))^-1 P(A|B) diag(P(B))`.
pub fn r_inversion(ctx: &RuleContext, tol: &Tolerances) -> Result<RMatrix> {
    RuleContext::check_support(&ctx.prior_a, tol)?;
    let m = ctx.model.matrix();
    let pa = ctx.prior_a.as_slice();
    let pb = ctx.prior_b.as_slice();
    let r = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * pb[j] / pa[i]);
    // R_I^-1 = diag(P(B))^-1 P(A|B)^-1 diag(P(A)), available when both exist
    let inverse = match (RuleContext::check_support(&ctx.prior_b, tol), invert(m, tol)) {
        (Ok(()), Ok(minv)) => Some(DMatrix::from_fn(m.ncols(), m.nrows(), |j, i| {
            minv.inverse[(j, i)] * pa[i] / pb[j]
        })),
        _ => None,
    };
    RMatrix::build(r, inverse, ctx)
}

/// The zeroth-order rule, whose posterior has every column equal to `P(B)`.
///
/// The inverse R-matrix of that posterior has all rows equal to `P(A)` and is
/// singular, so no invertible R exists. The returned matrix is
/// `1_A P(B)^T`, the transpose of the posterior, which satisfies both
/// consistency conditions; it carries no inverse and cannot be fed to
/// [`posterior_from_r`]. Use [`zeroth_posterior`] for the posterior itself.
pub fn r_zeroth(ctx: &RuleContext, tol: &Tolerances) -> Result<RMatrix> {
    let (na, nb) = (ctx.prior_a.len(), ctx.prior_b.len());
    if na != nb {
        return Err(Error::NotSquare { rows: na, cols: nb });
    }
    RuleContext::check_support(&ctx.prior_a, tol)?;
    RuleContext::check_support(&ctx.prior_b, tol)?;
    let pb = ctx.prior_b.as_slice();
    let r = DMatrix::from_fn(na, nb, |_, j| pb[j]);
    RMatrix::build(r, None, ctx)
}

/// Posterior of the zeroth-order rule: every column is `P(B)`. Defined for
/// rectangular models too.
pub fn zeroth_posterior(ctx: &RuleContext) -> QuasiStochasticMatrix {
    let pb = ctx.prior_b.as_slice();
    let data = DMatrix::from_fn(ctx.prior_b.len(), ctx.prior_a.len(), |j, _| pb[j]);
    QuasiStochasticMatrix::from_parts_unchecked(
        ctx.model.col_labels().to_vec(),
        ctx.model.row_labels().to_vec(),
        data,
    )
}

/// First-order rule `R = p R_I + (1 - p) R_K`.
///
/// The mixture lives at the R level: its posterior is the inverse of the
/// averaged R, not the average of the Bayes and inversion posteriors.
pub fn r_mix(ctx: &RuleContext, p: f64, tol: &Tolerances) -> Result<RMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("mixture weight must lie in [0, 1], got {p}")));
    }
    if p == 0.0 {
        return r_bayes(ctx, tol);
    }
    if p == 1.0 {
        return r_inversion(ctx, tol);
    }
    let rk = r_bayes(ctx, tol)?;
    let ri = r_inversion(ctx, tol)?;
    RMatrix::build(&ri.data * p + &rk.data * (1.0 - p), None, ctx)
}

/// Posterior `P(B|A) = diag(P(B)) R^-1 diag(P(A))^-1`; rows are outcomes of
/// `B`, columns outcomes of `A`.
pub fn posterior_from_r(r: &RMatrix, ctx: &RuleContext, tol: &Tolerances) -> Result<QuasiStochasticMatrix> {
    RuleContext::check_support(&ctx.prior_a, tol)?;
    let rinv = r.inverse_or_compute(tol)?;
    let pa = ctx.prior_a.as_slice();
    let pb = ctx.prior_b.as_slice();
    if rinv.shape() != (pb.len(), pa.len()) {
        return Err(Error::DimensionMismatch(format!(
            "R^-1 is {}x{}, expected {}x{}",
            rinv.nrows(),
            rinv.ncols(),
            pb.len(),
            pa.len()
        )));
    }
    let data = DMatrix::from_fn(pb.len(), pa.len(), |j, i| pb[j] * rinv[(j, i)] / pa[i]);
    Ok(QuasiStochasticMatrix::from_parts_unchecked(
        ctx.model.col_labels().to_vec(),
        ctx.model.row_labels().to_vec(),
        data,
    ))
}

/// Outcome of [`validate_r`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `|R 1_B - 1_A|_inf`.
    pub residual_ones: f64,
    /// `|R^T P(A) - P(B)|_inf`.
    pub residual_marginal: f64,
    /// Largest `|column sum - 1|` of the posterior, when R is invertible.
    pub posterior_colsum_dev: Option<f64>,
    /// `|P(B|A) P(A) - P(B)|_inf`, when R is invertible.
    pub posterior_marginal_residual: Option<f64>,
    pub ones_ok: bool,
    pub marginal_ok: bool,
    pub colsum_ok: Option<bool>,
    pub tol: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.ones_ok && self.marginal_ok && self.colsum_ok.unwrap_or(true)
    }
}

/// Measures both consistency conditions of `r` against `ctx` and, if `r` can
/// be inverted, the column sums of the posterior it induces.
pub fn validate_r(r: &RMatrix, ctx: &RuleContext, tol: f64) -> ValidationReport {
    let (ones, marg) = residuals(&r.data, ctx).unwrap_or((f64::INFINITY, f64::INFINITY));
    let post = posterior_from_r(r, ctx, &Tolerances::default()).ok();
    let colsum = post
        .as_ref()
        .map(|p| p.column_sum_deviations().into_iter().fold(0.0, f64::max));
    let post_marg = post
        .as_ref()
        .map(|p| (p.matrix() * ctx.prior_a.entries() - ctx.prior_b.entries()).amax());
    ValidationReport {
        residual_ones: ones,
        residual_marginal: marg,
        posterior_colsum_dev: colsum,
        posterior_marginal_residual: post_marg,
        ones_ok: ones <= tol,
        marginal_ok: marg <= tol,
        colsum_ok: colsum.map(|d| d <= tol),
        tol,
    }
}

/// Higher-order rule `R = R_1 R_2^-1 R_3 R_4^-1 ... R_n` for odd `n`.
///
/// When every term in an odd position has a closed-form inverse, the
/// composite keeps one too: `R^-1 = R_n^-1 ... R_3^-1 R_2 R_1^-1`.
pub fn compose(terms: &[RMatrix], ctx: &RuleContext, tol: &Tolerances) -> Result<RMatrix> {
    if terms.len().is_multiple_of(2) {
        return Err(Error::EvenLength(terms.len()));
    }
    let mut product = terms[0].data.clone();
    for (k, t) in terms.iter().enumerate().skip(1) {
        product = if k % 2 == 1 {
            product * t.inverse_or_compute(tol)?
        } else {
            product * &t.data
        };
    }
    let inverse = terms
        .iter()
        .enumerate()
        .rev()
        .try_fold(None::<DMatrix<f64>>, |acc, (k, t)| {
            let factor = if k % 2 == 0 { t.inverse.clone()? } else { t.data.clone() };
            Some(Some(match acc {
                None => factor,
                Some(a) => a * factor,
            }))
        })
        .flatten();
    RMatrix::build(product, inverse, ctx)
}

/// A first-order rule: `p = 0` is Bayes, `p = 1` the inversion rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrder(f64);

impl FirstOrder {
    pub const BAYES: FirstOrder = FirstOrder(0.0);
    pub const INVERSION: FirstOrder = FirstOrder(1.0);

    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(FirstOrder(p))
        } else {
            Err(Error::Domain(format!("mixture weight must lie in [0, 1], got {p}")))
        }
    }

    pub fn p(self) -> f64 {
        self.0
    }

    pub fn r_matrix(self, ctx: &RuleContext, tol: &Tolerances) -> Result<RMatrix> {
        r_mix(ctx, self.0, tol)
    }
}

impl fmt::Display for FirstOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0.0 {
            write!(f, "bayes")
        } else if self.0 == 1.0 {
            write!(f, "inversion")
        } else {
            write!(f, "mix:{}", self.0)
        }
    }
}

/// An inference rule.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleExpr {
    Zeroth,
    FirstOrder(FirstOrder),
    /// Odd-length alternating composition `R_1 R_2^-1 R_3 ...`.
    Composite(Vec<FirstOrder>),
}

impl RuleExpr {
    pub fn bayes() -> Self {
        RuleExpr::FirstOrder(FirstOrder::BAYES)
    }

    pub fn inversion() -> Self {
        RuleExpr::FirstOrder(FirstOrder::INVERSION)
    }

    /// `R_K R_I^-1 R_K`.
    pub fn third_order() -> Self {
        RuleExpr::Composite(vec![FirstOrder::BAYES, FirstOrder::INVERSION, FirstOrder::BAYES])
    }

    pub fn composite(terms: Vec<FirstOrder>) -> Result<Self> {
        if terms.len().is_multiple_of(2) {
            return Err(Error::EvenLength(terms.len()));
        }
        Ok(RuleExpr::Composite(terms))
    }

    /// The R-matrix of this rule, or `None` for the zeroth-order rule on a
    /// rectangular model, where none exists.
    pub fn r_matrix(&self, ctx: &RuleContext, tol: &Tolerances) -> Result<Option<RMatrix>> {
        match self {
            RuleExpr::Zeroth => {
                if ctx.prior_a.len() != ctx.prior_b.len() {
                    Ok(None)
                } else {
                    r_zeroth(ctx, tol).map(Some)
                }
            }
            RuleExpr::FirstOrder(f) => f.r_matrix(ctx, tol).map(Some),
            RuleExpr::Composite(terms) => {
                let rs = terms
                    .iter()
                    .map(|t| t.r_matrix(ctx, tol))
                    .collect::<Result<Vec<_>>>()?;
                compose(&rs, ctx, tol).map(Some)
            }
        }
    }

    /// The reverse conditional `P(B|A)` this rule assigns in `ctx`.
    pub fn posterior(&self, ctx: &RuleContext, tol: &Tolerances) -> Result<QuasiStochasticMatrix> {
        match self {
            RuleExpr::Zeroth => Ok(zeroth_posterior(ctx)),
            _ => {
                let r = self
                    .r_matrix(ctx, tol)?
                    .expect("non-zeroth rules always have an R-matrix");
                posterior_from_r(&r, ctx, tol)
            }
        }
    }

    /// Reverse-ordering joint `P(B,A)(j,i) = P(b_j|a_i) P(a_i)` under this rule.
    pub fn reverse_joint(&self, ctx: &RuleContext, tol: &Tolerances) -> Result<JointDist> {
        let post = self.posterior(ctx, tol)?;
        let j = joint_from_model(&post, &ctx.prior_a)?;
        let (a, b) = (ctx.model.row_labels().to_vec(), ctx.model.col_labels().to_vec());
        JointDist::unchecked("B", "A", b, a, j.matrix().clone())
    }
}

impl fmt::Display for RuleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleExpr::Zeroth => write!(f, "zeroth"),
            RuleExpr::FirstOrder(t) => write!(f, "{t}"),
            RuleExpr::Composite(terms) => {
                write!(f, "compose:")?;
                for (k, t) in terms.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_term(spec: &str, term: &str) -> Result<FirstOrder> {
    let bad = |reason: String| Error::RuleSpec {
        spec: spec.to_string(),
        reason,
    };
    match term.trim() {
        "bayes" => Ok(FirstOrder::BAYES),
        "inversion" => Ok(FirstOrder::INVERSION),
        t => match t.strip_prefix("mix:") {
            Some(p) => {
                let p: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("`{p}` is not a number")))?;
                FirstOrder::new(p).map_err(|e| bad(e.to_string()))
            }
            None => Err(bad(format!("unknown term `{t}`"))),
        },
    }
}

/// Grammar: `bayes | inversion | zeroth | mix:<p> | compose:<term>(,<term>)*`
/// where each term is `bayes | inversion | mix:<p>` and the term count is odd.
impl FromStr for RuleExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = s.trim();
        if spec == "zeroth" {
            return Ok(RuleExpr::Zeroth);
        }
        if let Some(rest) = spec.strip_prefix("compose:") {
            let terms = rest
                .split(',')
                .map(|t| parse_term(spec, t))
                .collect::<Result<Vec<_>>>()?;
            return RuleExpr::composite(terms);
        }
        parse_term(spec, spec).map(RuleExpr::FirstOrder)
    }
}
