//! Exact-rational Kolmogorov reference.
//!
//! Everything here runs on arbitrary-precision rationals and takes its own
//! code path: Bayes posteriors by direct division of joint entries, inverses
//! by cofactor expansion. The floating-point modules are checked against it,
//! never the other way round.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// `num / den` as an exact rational. Panics when `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A dense matrix of exact rationals, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(RationalMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RationalMatrix { rows, cols, data }
    }

    /// Integer numerators over a shared denominator.
    pub fn from_ints(rows: &[&[i64]], den: i64) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| ratio(rows[i][j], den))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Rational::one() } else { Rational::zero() })
    }

    pub fn diag(v: &[Rational]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| if i == j { v[i].clone() } else { Rational::zero() })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(Rational::zero(), |acc, k| acc + self.get(i, k) * other.get(k, j))
        }))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * s)
    }

    pub fn row_sums(&self) -> Vec<Rational> {
        (0..self.rows)
            .map(|i| (0..self.cols).fold(Rational::zero(), |a, j| a + self.get(i, j)))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<Rational> {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(Rational::zero(), |a, i| a + self.get(i, j)))
            .collect()
    }

    pub fn total(&self) -> Rational {
        self.data.iter().fold(Rational::zero(), |a, x| a + x)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(self.get(i, j)))
    }

    /// Largest `|self(i,j) - other(i,j)|` after rounding self to `f64`.
    pub fn max_abs_diff(&self, other: &DMatrix<f64>) -> f64 {
        assert_eq!((self.rows, self.cols), other.shape());
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| (to_f64(self.get(i, j)) - other[(i, j)]).abs())
            .fold(0.0, f64::max)
    }

    fn minor(&self, skip_r: usize, skip_c: usize) -> Self {
        let data = (0..self.rows)
            .filter(|&i| i != skip_r)
            .flat_map(|i| {
                (0..self.cols)
                    .filter(move |&j| j != skip_c)
                    .map(move |j| self.get(i, j).clone())
            })
            .collect();
        RationalMatrix {
            rows: self.rows - 1,
            cols: self.cols - 1,
            data,
        }
    }

    /// Determinant by Laplace expansion along the first row.
    pub fn determinant(&self) -> Result<Rational> {
        if self.rows != self.cols {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.laplace())
    }

    fn laplace(&self) -> Rational {
        match self.rows {
            0 => Rational::one(),
            1 => self.data[0].clone(),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            n => (0..n).fold(Rational::zero(), |acc, j| {
                let term = self.get(0, j) * self.minor(0, j).laplace();
                if j % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            }),
        }
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Exact `(P(row var), P(col var))`.
pub fn oracle_marginals(joint: &RationalMatrix) -> (Vec<Rational>, Vec<Rational>) {
    (joint.row_sums(), joint.col_sums())
}

/// Exact `P(A|B)`: each column of the joint divided by its sum.
pub fn oracle_conditional(joint: &RationalMatrix) -> Result<RationalMatrix> {
    let pb = joint.col_sums();
    if let Some(j) = pb.iter().position(Zero::is_zero) {
        return Err(Error::ZeroMarginal { index: j, value: 0.0 });
    }
    Ok(RationalMatrix::from_fn(joint.rows, joint.cols, |i, j| {
        joint.get(i, j) / &pb[j]
    }))
}

/// Exact Bayes posterior `P(B|A)` (rows `b`, columns `a`) by direct
/// division `P(a_i, b_j) / P(a_i)`.
pub fn oracle_bayes(joint: &RationalMatrix) -> Result<RationalMatrix> {
    let pa = joint.row_sums();
    if let Some(i) = pa.iter().position(Zero::is_zero) {
        return Err(Error::ZeroMarginal { index: i, value: 0.0 });
    }
    Ok(RationalMatrix::from_fn(joint.cols, joint.rows, |j, i| {
        joint.get(i, j) / &pa[i]
    }))
}

/// Largest dimension accepted by [`oracle_inverse`].
pub const MAX_EXACT_DIM: usize = 4;

/// Exact inverse via the adjugate: `M^-1 = adj(M) / det(M)`.
pub fn oracle_inverse(m: &RationalMatrix) -> Result<RationalMatrix> {
    if m.rows != m.cols {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    if m.rows > MAX_EXACT_DIM {
        return Err(Error::Domain(format!(
            "exact inverse limited to dimension {MAX_EXACT_DIM}, got {}",
            m.rows
        )));
    }
    let det = m.laplace();
    if det.is_zero() {
        return Err(Error::Singular { sigma_min: 0.0 });
    }
    let n = m.rows;
    if n == 1 {
        return Ok(RationalMatrix::from_fn(1, 1, |_, _| m.data[0].recip()));
    }
    // inverse(i,j) = cofactor(j,i) / det
    Ok(RationalMatrix::from_fn(n, n, |i, j| {
        let c = m.minor(j, i).laplace() / &det;
        if (i + j) % 2 == 0 {
            c
        } else {
            -c
        }
    }))
}

/// Exact reverse joint `diag(P(B)) * J^-1 * diag(P(A))`.
pub fn oracle_reverse_joint(joint: &RationalMatrix) -> Result<RationalMatrix> {
    let (pa, pb) = oracle_marginals(joint);
    let inv = oracle_inverse(joint)?;
    RationalMatrix::diag(&pb).mul(&inv)?.mul(&RationalMatrix::diag(&pa))
}

/// The 2x2 desk fixture `J0 = [[3/10, 2/10], [1/10, 4/10]]` and every
/// quantity derived from it, all exact.
#[derive(Clone, Debug)]
pub struct CanonicalFixture {
    pub joint: RationalMatrix,
    pub pa: Vec<Rational>,
    pub pb: Vec<Rational>,
    /// `P(A|B)`.
    pub model: RationalMatrix,
    pub model_inverse: RationalMatrix,
    pub bayes_posterior: RationalMatrix,
    /// Equal to `model_inverse`.
    pub inversion_posterior: RationalMatrix,
    /// `(P(A|B)^T)^-1`.
    pub r_bayes: RationalMatrix,
    /// `diag(P(A))^-1 P(A|B) diag(P(B))`.
    pub r_inversion: RationalMatrix,
    pub r_mix_half: RationalMatrix,
    pub mix_half_posterior: RationalMatrix,
    /// Posterior of `R_K R_I^-1 R_K`.
    pub third_order_posterior: RationalMatrix,
    pub reverse_joint: RationalMatrix,
}

impl CanonicalFixture {
    pub fn new() -> Self {
        Self::from_joint(RationalMatrix::from_ints(&[&[3, 2], &[1, 4]], 10))
            .expect("J0 is non-degenerate")
    }

    /// Derives the full fixture for any invertible square rational joint of
    /// dimension at most [`MAX_EXACT_DIM`].
    pub fn from_joint(joint: RationalMatrix) -> Result<Self> {
        let (pa, pb) = oracle_marginals(&joint);
        let model = oracle_conditional(&joint)?;
        let model_inverse = oracle_inverse(&model)?;
        let bayes_posterior = oracle_bayes(&joint)?;
        let r_bayes = model_inverse.transpose();
        let inv_pa: Vec<Rational> = pa.iter().map(|x| x.recip()).collect();
        let r_inversion = RationalMatrix::diag(&inv_pa)
            .mul(&model)?
            .mul(&RationalMatrix::diag(&pb))?;
        let half = ratio(1, 2);
        let r_mix_half = r_bayes.add(&r_inversion).scale(&half);
        let posterior_of = |r_inverse: &RationalMatrix| -> Result<RationalMatrix> {
            RationalMatrix::diag(&pb)
                .mul(r_inverse)?
                .mul(&RationalMatrix::diag(&inv_pa))
        };
        let mix_half_posterior = posterior_of(&oracle_inverse(&r_mix_half)?)?;
        // (R_K R_I^-1 R_K)^-1 = R_K^-1 R_I R_K^-1, and R_K^-1 = P(A|B)^T
        let rk_inv = model.transpose();
        let third = rk_inv.mul(&r_inversion)?.mul(&rk_inv)?;
        let third_order_posterior = posterior_of(&third)?;
        let reverse_joint = RationalMatrix::diag(&pb)
            .mul(&oracle_inverse(&joint)?)?
            .mul(&RationalMatrix::diag(&pa))?;
        Ok(CanonicalFixture {
            inversion_posterior: model_inverse.clone(),
            joint,
            pa,
            pb,
            model,
            model_inverse,
            bayes_posterior,
            r_bayes,
            r_inversion,
            r_mix_half,
            mix_half_posterior,
            third_order_posterior,
            reverse_joint,
        })
    }
}

impl Default for CanonicalFixture {
    fn default() -> Self {
        Self::new()
    }
}

/// Largest denominator used by [`random_rational_joint`].
pub const MAX_DENOMINATOR: i64 = 1000;

/// A strictly positive `dim x dim` joint with entries `w_ij / S`, where the
/// integer weights satisfy `S = sum(w) <= 1000`. Half of the weight budget
/// goes to the diagonal when `diagonal_heavy` is set, which keeps the
/// conditional well away from singular.
pub fn random_rational_joint<R: Rng>(dim: usize, diagonal_heavy: bool, rng: &mut R) -> RationalMatrix {
    assert!(dim >= 1);
    let n2 = (dim * dim) as i64;
    let (off_max, diag_max) = if diagonal_heavy {
        let off = (MAX_DENOMINATOR / (2 * n2)).max(1);
        let diag = ((MAX_DENOMINATOR - off * n2) / dim as i64).max(1);
        (off, diag)
    } else {
        ((MAX_DENOMINATOR / n2).max(1), 0)
    };
    let weights: Vec<i64> = (0..dim * dim)
        .map(|k| {
            let w = rng.random_range(1..=off_max);
            if k / dim == k % dim && diag_max > 0 {
                w + rng.random_range(0..=diag_max - 1)
            } else {
                w
            }
        })
        .collect();
    let total: i64 = weights.iter().sum();
    RationalMatrix::from_fn(dim, dim, |i, j| ratio(weights[i * dim + j], total))
}

/// A strictly positive joint whose inversion-rule posterior `P(A|B)^-1`
/// leaves `[0, 1]`.
#[derive(Clone, Debug)]
pub struct NegativeWitness {
    pub joint: RationalMatrix,
    /// Exact `P(A|B)^-1`.
    pub posterior: RationalMatrix,
    /// `(row, col, value)` for every posterior entry below 0 or above 1.
    pub offending: Vec<(usize, usize, Rational)>,
}

/// Checks whether a joint qualifies as a negative-entry witness.
pub fn negative_witness(joint: &RationalMatrix) -> Result<Option<NegativeWitness>> {
    if joint.data.iter().any(|x| !x.is_positive()) {
        return Ok(None);
    }
    let posterior = oracle_inverse(&oracle_conditional(joint)?)?;
    let one = Rational::one();
    let mut offending = Vec::new();
    for i in 0..posterior.rows {
        for j in 0..posterior.cols {
            let v = posterior.get(i, j);
            if v.is_negative() || *v > one {
                offending.push((i, j, v.clone()));
            }
        }
    }
    Ok((!offending.is_empty()).then(|| NegativeWitness {
        joint: joint.clone(),
        posterior,
        offending,
    }))
}

/// Random search for strictly positive joints whose inversion posterior has
/// an entry outside `[0, 1]`. Trial `t` draws from its own ChaCha stream, so
/// results do not depend on evaluation order. With `include_fixture` and
/// `dim == 2`, J0 is listed first.
pub fn search_negative_posterior(
    dim: usize,
    trials: usize,
    seed: u64,
    include_fixture: bool,
) -> Result<Vec<NegativeWitness>> {
    if !(2..=MAX_EXACT_DIM).contains(&dim) {
        return Err(Error::Domain(format!("search dimension must be 2..=4, got {dim}")));
    }
    let mut found = Vec::new();
    if include_fixture && dim == 2 {
        if let Some(w) = negative_witness(&CanonicalFixture::new().joint)? {
            found.push(w);
        }
    }
    let per_trial: Vec<Option<NegativeWitness>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let joint = random_rational_joint(dim, false, &mut rng);
            // singular draws simply do not qualify
            negative_witness(&joint).ok().flatten()
        })
        .collect();
    found.extend(per_trial.into_iter().flatten());
    Ok(found)
}
