//! Estimation on top of the rule family: recover a hidden marginal from an
//! observed one through the inverse model, then run any rule against the
//! inferred prior.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{
    invert, is_product, marginals, JointDist, ProbVector, QuasiStochasticMatrix, QuasiVector,
    StochasticMatrix, Tolerances,
};
use crate::error::{Error, Result};
use crate::io::format_float;
use crate::rules::{RuleContext, RuleExpr};

/// Observed outcome counts and their relative frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMarginal {
    pub counts: Vec<u64>,
    pub n: u64,
    pub estimate: ProbVector,
}

pub fn estimate_from_counts(counts: &[u64]) -> Result<EmpiricalMarginal> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let entries: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(EmpiricalMarginal {
        counts: counts.to_vec(),
        n,
        estimate: ProbVector::new(entries, &Tolerances::default())?,
    })
}

/// `P~(B) = P(A|B)^-1 P~(A)`. Negative entries are kept as they are.
pub fn infer_hidden_marginal(
    model: &StochasticMatrix,
    observed: &QuasiVector,
    tol: &Tolerances,
) -> Result<QuasiVector> {
    Ok(infer_with_condition(model, observed, tol)?.0)
}

fn infer_with_condition(
    model: &StochasticMatrix,
    observed: &QuasiVector,
    tol: &Tolerances,
) -> Result<(QuasiVector, f64)> {
    if model.nrows() != observed.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} rows, observed vector has {} entries",
            model.nrows(),
            observed.len()
        )));
    }
    let inv = invert(model.matrix(), tol)?;
    let pb = &inv.inverse * observed.entries();
    Ok((
        QuasiVector::from_parts_unchecked(model.col_labels().to_vec(), pb),
        inv.condition,
    ))
}

/// Diagnostics attached to every inference result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `|column sum - 1|` of the posterior, per column.
    pub colsum_dev: Vec<f64>,
    /// Indices of inferred-prior entries below zero.
    pub negative_prior: Vec<usize>,
    /// Posterior entries outside `[0, 1]`, as `(row, col)`.
    pub posterior_out_of_range: Vec<(usize, usize)>,
    /// 2-norm condition estimate of the model.
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub rule: RuleExpr,
    /// `P~(B)`.
    pub inferred_prior: QuasiVector,
    /// `P~(B|A)`, rows `b`, columns `a`.
    pub posterior: QuasiStochasticMatrix,
    pub diagnostics: Diagnostics,
}

/// Infers `P~(B)` from `observed` and evaluates `rule` in the context
/// `(P(A|B), P~(B), P~(A))`.
pub fn infer_with_rule(
    model: &StochasticMatrix,
    observed: &QuasiVector,
    rule: &RuleExpr,
    tol: &Tolerances,
) -> Result<InferenceResult> {
    if let Some((index, &value)) = observed
        .as_slice()
        .iter()
        .enumerate()
        .find(|(_, v)| **v <= tol.support_eps)
    {
        return Err(Error::ZeroMarginal { index, value });
    }
    let (prior, condition) = infer_with_condition(model, observed, tol)?;
    let ctx = RuleContext::unchecked(model.clone(), prior.clone(), observed.clone())?;
    let posterior = rule.posterior(&ctx, tol)?;
    let diagnostics = Diagnostics {
        colsum_dev: column_sum_diagnostic(&posterior),
        negative_prior: prior
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v < 0.0)
            .map(|(i, _)| i)
            .collect(),
        posterior_out_of_range: posterior
            .out_of_unit_range(0.0)
            .into_iter()
            .map(|(i, j, _)| (i, j))
            .collect(),
        condition,
    };
    Ok(InferenceResult {
        rule: rule.clone(),
        inferred_prior: prior,
        posterior,
        diagnostics,
    })
}

/// Bayes posterior with the inferred prior:
/// `P~(B|A) = diag(P(A|B)^-1 P~(A)) P(A|B)^T diag(P~(A))^-1`.
pub fn posterior_with_inferred_prior(
    model: &StochasticMatrix,
    observed: &QuasiVector,
    tol: &Tolerances,
) -> Result<InferenceResult> {
    infer_with_rule(model, observed, &RuleExpr::bayes(), tol)
}

/// `|column sum - 1|` for every column.
pub fn column_sum_diagnostic(posterior: &QuasiStochasticMatrix) -> Vec<f64> {
    posterior.column_sum_deviations()
}

/// Euclidean projection of a quasi-distribution onto the probability simplex.
///
/// This leaves the signed formalism: the result is a proper distribution but
/// no longer the exact image of the observation under the inverse model.
pub fn clip_project(v: &QuasiVector) -> ProbVector {
    let x = v.as_slice();
    let mut u: Vec<f64> = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    let p: Vec<f64> = x.iter().map(|&xi| (xi - theta).max(0.0)).collect();
    ProbVector::from_quasi(
        QuasiVector::from_parts_unchecked(v.labels().to_vec(), DVector::from_vec(p)),
        &Tolerances::default(),
    )
    .expect("simplex projection is non-negative")
}

/// Error norm used by the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L1,
    Linf,
}

impl Metric {
    pub fn of(self, diff: impl Iterator<Item = f64>) -> f64 {
        match self {
            Metric::L1 => diff.map(f64::abs).sum(),
            Metric::Linf => diff.map(f64::abs).fold(0.0, f64::max),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::Linf => "linf",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Metric::L1),
            "linf" => Ok(Metric::Linf),
            _ => Err(Error::Parse(format!("unknown metric `{s}` (expected l1 or linf)"))),
        }
    }
}

/// How the observed marginal is produced in each run.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationMode {
    /// Draw `n` samples of `A` from the true marginal.
    Sampled,
    /// Use the exact marginal, `P~(A) = P(A)`.
    Exact,
    /// `P~(A) = P(A) + eps * (e_1 - e_2)`; `n` in the report carries the
    /// index of `eps`.
    Perturbed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub rule: RuleExpr,
    pub sample_sizes: Vec<u64>,
    pub repetitions: usize,
    pub seed: u64,
    pub metric: Metric,
    pub mode: ObservationMode,
}

/// One `(n, repetition)` cell of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub n: u64,
    pub repetition: usize,
    /// Seed of the generator that produced this row.
    pub seed: u64,
    pub metric: Metric,
    /// Error of `P~(B)` against the true `P(B)`.
    pub error_prior: f64,
    /// Error of the posterior against the rule's posterior at the true
    /// marginals (for Bayes, direct division of the joint). NaN when the
    /// observed sample has an empty cell and no posterior exists.
    pub error_posterior: f64,
    /// Smallest entry of `P~(B)`; negative values flag quasi-priors.
    pub min_entry: f64,
    pub max_colsum_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub rule: String,
    pub rows: Vec<ExperimentRow>,
}

pub const CSV_HEADER: &str =
    "n,repetition,seed,metric,error_prior,error_posterior,min_entry,max_colsum_dev";

impl ExperimentReport {
    /// CSV with the fixed column set; floats use shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.n,
                r.repetition,
                r.seed,
                r.metric.name(),
                format_float(r.error_prior),
                format_float(r.error_posterior),
                format_float(r.min_entry),
                format_float(r.max_colsum_dev)
            ));
        }
        out
    }

    /// Median error of the inferred prior for each `n`, in input order.
    pub fn median_prior_error(&self) -> Vec<(u64, f64)> {
        let mut ns: Vec<u64> = Vec::new();
        for r in &self.rows {
            if !ns.contains(&r.n) {
                ns.push(r.n);
            }
        }
        ns.into_iter()
            .map(|n| {
                let mut e: Vec<f64> = self.rows.iter().filter(|r| r.n == n).map(|r| r.error_prior).collect();
                e.sort_by(f64::total_cmp);
                let m = e.len();
                let med = if m % 2 == 1 { e[m / 2] } else { 0.5 * (e[m / 2 - 1] + e[m / 2]) };
                (n, med)
            })
            .collect()
    }
}

/// SplitMix64 finalizer; decorrelates the per-cell seeds.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for cell `(size_index, repetition)` derived from the base seed.
pub fn cell_seed(base: u64, size_index: usize, repetition: usize) -> u64 {
    mix64(mix64(base ^ mix64(size_index as u64)) ^ repetition as u64)
}

/// Multinomial counts drawn as a chain of conditional binomials.
pub fn sample_counts(p: &[f64], n: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut counts = vec![0u64; p.len()];
    let mut left = n;
    let mut mass = 1.0f64;
    for (k, &pk) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == p.len() {
            counts[k] = left;
            break;
        }
        let q = if mass > 0.0 { (pk / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, q).expect("probability clamped to [0, 1]").sample(rng);
        counts[k] = c;
        left -= c;
        mass -= pk;
    }
    counts
}

/// Runs the inference pipeline against a known truth at several observation
/// sizes and records how far the estimates land from the exact answers.
///
/// Each `(n, repetition)` cell seeds its own generator from
/// [`cell_seed`], so the report is identical whatever order cells are run in.
pub fn convergence_experiment(
    truth: &JointDist,
    config: &ExperimentConfig,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    if config.sample_sizes.is_empty() && !matches!(config.mode, ObservationMode::Perturbed(_)) {
        return Err(Error::Domain("no sample sizes given".into()));
    }
    if is_product(truth, tol) {
        return Err(Error::Singular { sigma_min: 0.0 });
    }
    let ctx = RuleContext::from_joint(truth, tol)?;
    let model = ctx.model().clone();
    let (pa, pb) = marginals(truth);
    let reference = reference_posterior(truth, &config.rule, &ctx, tol)?;

    let cells: Vec<(usize, u64, usize)> = match &config.mode {
        ObservationMode::Perturbed(eps) => (0..eps.len())
            .flat_map(|k| (0..config.repetitions).map(move |r| (k, k as u64, r)))
            .collect(),
        _ => config
            .sample_sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &n)| (0..config.repetitions).map(move |r| (k, n, r)))
            .collect(),
    };

    let rows = cells
        .par_iter()
        .map(|&(k, n, rep)| -> Result<ExperimentRow> {
            let seed = cell_seed(config.seed, k, rep);
            let observed: Vec<f64> = match &config.mode {
                ObservationMode::Exact => pa.as_slice().to_vec(),
                ObservationMode::Perturbed(eps) => {
                    let mut v = pa.as_slice().to_vec();
                    v[0] += eps[k];
                    v[1] -= eps[k];
                    v
                }
                ObservationMode::Sampled => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let counts = sample_counts(pa.as_slice(), n, &mut rng);
                    estimate_from_counts(&counts)?.estimate.as_slice().to_vec()
                }
            };
            let observed = QuasiVector::from_parts_unchecked(
                pa.labels().to_vec(),
                DVector::from_vec(observed),
            );
            let prior = infer_hidden_marginal(&model, &observed, tol)?;
            let error_prior = config
                .metric
                .of(prior.as_slice().iter().zip(pb.as_slice()).map(|(a, b)| a - b));
            let (error_posterior, max_colsum_dev) = match infer_with_rule(&model, &observed, &config.rule, tol) {
                Ok(res) => (
                    config
                        .metric
                        .of(res.posterior.matrix().iter().zip(reference.iter()).map(|(a, b)| a - b)),
                    res.diagnostics.colsum_dev.iter().copied().fold(0.0, f64::max),
                ),
                Err(Error::ZeroMarginal { .. }) => (f64::NAN, f64::NAN),
                Err(e) => return Err(e),
            };
            Ok(ExperimentRow {
                n,
                repetition: rep,
                seed,
                metric: config.metric,
                error_prior,
                error_posterior,
                min_entry: prior.min_entry(),
                max_colsum_dev,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentReport {
        seed: config.seed,
        rule: config.rule.to_string(),
        rows,
    })
}

fn reference_posterior(
    truth: &JointDist,
    rule: &RuleExpr,
    ctx: &RuleContext,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    if *rule == RuleExpr::bayes() {
        // direct division, independent of the R-matrix route
        let (pa, _) = marginals(truth);
        let j = truth.matrix();
        return Ok(DMatrix::from_fn(j.ncols(), j.nrows(), |b, a| {
            j[(a, b)] / pa.as_slice()[a]
        }));
    }
    Ok(rule.posterior(ctx, tol)?.matrix().clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn j0() -> JointDist {
        JointDist::from_rows(&[&[0.3, 0.2], &[0.1, 0.4]], &tol()).unwrap()
    }

    fn j0_model() -> StochasticMatrix {
        RuleContext::from_joint(&j0(), &tol()).unwrap().model().clone()
    }

    fn qv(v: &[f64]) -> QuasiVector {
        QuasiVector::new(v.to_vec(), &tol()).unwrap()
    }

    #[test]
    fn hidden_marginal_of_j0() {
        let m = j0_model();
        let pb = infer_hidden_marginal(&m, &qv(&[0.5, 0.5]), &tol()).unwrap();
        assert!((pb.as_slice()[0] - 0.4).abs() < 1e-15);
        assert!((pb.as_slice()[1] - 0.6).abs() < 1e-15);
        let pb = infer_hidden_marginal(&m, &qv(&[0.6, 0.4]), &tol()).unwrap();
        assert!((pb.as_slice()[0] - 0.64).abs() < 1e-14);
        assert!((pb.as_slice()[1] - 0.36).abs() < 1e-14);
        let obs = qv(&[0.2, 0.3, 0.5]);
        let same = infer_hidden_marginal(&StochasticMatrix::identity(3), &obs, &tol()).unwrap();
        assert_eq!(same.as_slice(), obs.as_slice());
    }

    #[test]
    fn hidden_marginal_can_go_negative() {
        let pb = infer_hidden_marginal(&j0_model(), &qv(&[0.95, 0.05]), &tol()).unwrap();
        assert!(pb.min_entry() < 0.0);
        assert!((pb.sum() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_model_rejected() {
        let m = StochasticMatrix::new(DMatrix::from_row_slice(2, 2, &[0.3, 0.3, 0.7, 0.7]), &tol()).unwrap();
        assert!(matches!(
            infer_hidden_marginal(&m, &qv(&[0.5, 0.5]), &tol()),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn inferred_prior_posterior_on_j0() {
        let res = posterior_with_inferred_prior(&j0_model(), &qv(&[0.5, 0.5]), &tol()).unwrap();
        let p = res.posterior.matrix();
        let want = [[0.6, 0.2], [0.4, 0.8]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[(i, j)] - want[i][j]).abs() < 1e-14);
            }
        }
        let res = posterior_with_inferred_prior(&j0_model(), &qv(&[0.6, 0.4]), &tol()).unwrap();
        // diag(0.64, 0.36) P(A|B)^T diag(1/0.6, 1/0.4)
        let want = [[0.64 * 0.75 / 0.6, 0.64 * 0.25 / 0.4], [0.36 / 3.0 / 0.6, 0.36 * 2.0 / 3.0 / 0.4]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((res.posterior.matrix()[(i, j)] - want[i][j]).abs() < 1e-14);
            }
        }
        assert!(res.diagnostics.colsum_dev.iter().all(|&d| d < 1e-14));
    }

    #[test]
    fn identity_model_posterior_is_identity() {
        let res =
            posterior_with_inferred_prior(&StochasticMatrix::identity(3), &qv(&[0.2, 0.3, 0.5]), &tol()).unwrap();
        assert!((res.posterior.matrix() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn zero_observation_rejected() {
        let r = posterior_with_inferred_prior(&j0_model(), &qv(&[1.0, 0.0]), &tol());
        assert!(matches!(r, Err(Error::ZeroMarginal { index: 1, .. })));
    }

    #[test]
    fn counts() {
        assert_eq!(estimate_from_counts(&[5, 5]).unwrap().estimate.as_slice(), &[0.5, 0.5]);
        assert_eq!(estimate_from_counts(&[1, 0]).unwrap().estimate.as_slice(), &[1.0, 0.0]);
        assert_eq!(estimate_from_counts(&[3, 7]).unwrap().estimate.as_slice(), &[0.3, 0.7]);
        assert_eq!(estimate_from_counts(&[0, 0]), Err(Error::EmptySample));
    }

    #[test]
    fn projection_onto_simplex() {
        let p = clip_project(&qv(&[1.2, -0.2]));
        assert_eq!(p.as_slice(), &[1.0, 0.0]);
        let p = clip_project(&qv(&[0.3, 0.7]));
        assert!((p.as_slice()[0] - 0.3).abs() < 1e-15);
        let p = clip_project(&qv(&[0.7, 0.5, -0.2]));
        assert!((p.as_slice()[0] - 0.6).abs() < 1e-15 && (p.as_slice()[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn sampler_preserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = sample_counts(&[0.2, 0.5, 0.3], 10_000, &mut rng);
        assert_eq!(c.iter().sum::<u64>(), 10_000);
        assert!((c[1] as f64 / 1e4 - 0.5).abs() < 0.05);
        let c = sample_counts(&[0.0, 1.0], 50, &mut rng);
        assert_eq!(c, vec![0, 50]);
    }

    #[test]
    fn exact_mode_has_zero_error() {
        let cfg = ExperimentConfig {
            rule: RuleExpr::bayes(),
            sample_sizes: vec![1],
            repetitions: 1,
            seed: 0,
            metric: Metric::L1,
            mode: ObservationMode::Exact,
        };
        let rep = convergence_experiment(&j0(), &cfg, &tol()).unwrap();
        assert!(rep.rows[0].error_prior < 1e-15);
        assert!(rep.rows[0].error_posterior < 1e-15);
    }

    #[test]
    fn experiment_is_deterministic() {
        let cfg = ExperimentConfig {
            rule: RuleExpr::inversion(),
            sample_sizes: vec![100, 1000],
            repetitions: 4,
            seed: 42,
            metric: Metric::Linf,
            mode: ObservationMode::Sampled,
        };
        let a = convergence_experiment(&j0(), &cfg, &tol()).unwrap().to_csv();
        let b = convergence_experiment(&j0(), &cfg, &tol()).unwrap().to_csv();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 9);
        assert!(a.starts_with(CSV_HEADER));
    }

    #[test]
    fn product_truth_rejected() {
        let prod = JointDist::from_rows(&[&[0.2, 0.3], &[0.2, 0.3]], &tol()).unwrap();
        let cfg = ExperimentConfig {
            rule: RuleExpr::bayes(),
            sample_sizes: vec![10],
            repetitions: 1,
            seed: 0,
            metric: Metric::L1,
            mode: ObservationMode::Sampled,
        };
        assert!(convergence_experiment(&prod, &cfg, &tol()).unwrap_err().is_degenerate());
    }
}
