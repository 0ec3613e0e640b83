//! Acceptance suite: one `[PASS]` / `[FAIL]` line per criterion.
//!
//! Run with `cargo test -p quasibayes-cli --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use quasibayes::dist::{
    condition_number, conditional_from_joint, marginals, reverse_joint, JointDist, QuasiVector, StochasticMatrix,
    Tolerances,
};
use quasibayes::inference::{convergence_experiment, infer_with_rule, ExperimentConfig, Metric, ObservationMode};
use quasibayes::io::{parse_matrix_csv, parse_matrix_json};
use quasibayes::oracle::{oracle_bayes, random_rational_joint, search_negative_posterior, CanonicalFixture, RationalMatrix};
use quasibayes::rules::{validate_r, FirstOrder, RuleContext, RuleExpr};
use quasibayes::seqprob::{check_axioms, Axiom, ProbabilityAssignment, SequenceSpace, VariableSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{run, Fixtures};

type Check = fn() -> Result<String, String>;

const CORPUS_SEED: u64 = 20_240_601;
const PER_DIM: usize = 100;
const WELL_CONDITIONED: f64 = 1e6;
/// Third-order compositions carry entries of order cond^3 (in R for
/// `R_K R_I^-1 R_K`, in the posterior for `R_I R_K^-1 R_I`), so an absolute
/// 1e-9 residual is only representable in f64 for models up to about this
/// condition number. Compositions require well-conditioned interior inverses.
const COMPOSE_CONDITIONED: f64 = 1e2;

fn main() {
    let criteria: &[(&str, &str, Check)] = &[
        ("C1", "Bayes posterior matches the exact oracle", c1_bayes_oracle),
        ("C2", "inversion posterior is a two-sided inverse of the model", c2_inversion_identity),
        ("C3", "J0 golden values", c3_goldens),
        ("C4", "consistency conditions across the rule family", c4_consistency),
        ("C5", "conjugate-pair identities", c5_conjugacy),
        ("C6", "reverse joint marginals and involution", c6_reverse_joint),
        ("C7", "positive joints with out-of-range inversion posteriors", c7_negative_search),
        ("C8", "third-order column sums as a convergence diagnostic", c8_third_order),
        ("C9", "perturbation linearity and sampled convergence", c9_convergence),
        ("C10", "sequence-probability axioms", c10_axioms),
        ("C11", "CLI contract", c11_cli),
    ];
    let mut failed = 0;
    for (id, title, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] {id} {title} ({detail}; {secs:.2}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {title}: {detail} ({secs:.2}s)");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn linf(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

struct Case {
    exact: RationalMatrix,
    joint: JointDist,
    ctx: RuleContext,
    condition: f64,
}

/// 100 diagonal-heavy rational joints per dimension 2..=6, keeping those
/// whose model condition number is at most 1e6.
fn corpus() -> Vec<Case> {
    let t = tol();
    let mut out = Vec::new();
    for dim in 2..=6 {
        let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + dim as u64);
        let mut kept = 0;
        while kept < PER_DIM {
            let exact = random_rational_joint(dim, true, &mut rng);
            let joint = JointDist::new(exact.to_f64(), &t).expect("rational joint is normalized");
            let model = conditional_from_joint(&joint, &t).expect("positive joint");
            let condition = condition_number(model.matrix());
            if condition > WELL_CONDITIONED {
                continue;
            }
            kept += 1;
            let ctx = RuleContext::from_joint(&joint, &t).expect("positive joint");
            out.push(Case {
                exact,
                joint,
                ctx,
                condition,
            });
        }
    }
    out
}

fn c1_bayes_oracle() -> Result<String, String> {
    let start = Instant::now();
    let t = tol();
    let cases = corpus();
    let mut worst = 0.0f64;
    for c in &cases {
        let post = RuleExpr::bayes().posterior(&c.ctx, &t).map_err(|e| e.to_string())?;
        let exact = oracle_bayes(&c.exact).map_err(|e| e.to_string())?;
        worst = worst.max(exact.max_abs_diff(post.matrix()));
    }
    let elapsed = start.elapsed();
    ensure(cases.len() == 500, || format!("corpus has {} joints", cases.len()))?;
    ensure(worst <= 1e-10, || format!("max deviation {worst:e} > 1e-10"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("500 joints, max deviation {worst:e}"))
}

fn c2_inversion_identity() -> Result<String, String> {
    let t = tol();
    let mut worst = 0.0f64;
    let mut n = 0;
    for c in corpus().iter().filter(|c| c.condition <= 1e6) {
        let m = c.ctx.model().matrix();
        let post = RuleExpr::inversion().posterior(&c.ctx, &t).map_err(|e| e.to_string())?;
        let id = DMatrix::identity(m.nrows(), m.ncols());
        worst = worst.max(linf(&(post.matrix() * m), &id)).max(linf(&(m * post.matrix()), &id));
        n += 1;
    }
    ensure(worst <= 1e-8, || format!("max deviation from identity {worst:e} > 1e-8"))?;
    Ok(format!("{n} joints, max deviation {worst:e}"))
}

fn c3_goldens() -> Result<String, String> {
    let t = tol();
    let fx = CanonicalFixture::new();
    let lit = |rows: &[&[i64]], den: i64| RationalMatrix::from_ints(rows, den);
    let expected = [
        ("P(A|B)", lit(&[&[9, 4], &[3, 8]], 12), &fx.model),
        ("Bayes posterior", lit(&[&[3, 1], &[2, 4]], 5), &fx.bayes_posterior),
        ("inversion posterior", lit(&[&[8, -4], &[-3, 9]], 5), &fx.inversion_posterior),
        ("R_K", lit(&[&[8, -3], &[-4, 9]], 5), &fx.r_bayes),
        ("R_I", lit(&[&[3, 2], &[1, 4]], 5), &fx.r_inversion),
        ("mix 1/2 posterior", lit(&[&[26, 2], &[9, 33]], 35), &fx.mix_half_posterior),
        ("third-order posterior", lit(&[&[13, 11], &[17, 19]], 30), &fx.third_order_posterior),
    ];
    for (name, literal, oracle) in &expected {
        ensure(literal == *oracle, || format!("oracle {name} is {oracle}, expected {literal}"))?;
    }

    let joint = JointDist::from_rows(&[&[0.3, 0.2], &[0.1, 0.4]], &t).map_err(|e| e.to_string())?;
    let ctx = RuleContext::from_joint(&joint, &t).map_err(|e| e.to_string())?;
    let post = |rule: RuleExpr| rule.posterior(&ctx, &t).map(|p| p.matrix().clone());
    let r = |f: FirstOrder| f.r_matrix(&ctx, &t).map(|r| r.matrix().clone());
    let computed: Vec<(&str, DMatrix<f64>)> = vec![
        ("P(A|B)", ctx.model().matrix().clone()),
        ("Bayes posterior", post(RuleExpr::bayes()).map_err(|e| e.to_string())?),
        ("inversion posterior", post(RuleExpr::inversion()).map_err(|e| e.to_string())?),
        ("R_K", r(FirstOrder::BAYES).map_err(|e| e.to_string())?),
        ("R_I", r(FirstOrder::INVERSION).map_err(|e| e.to_string())?),
        (
            "mix 1/2 posterior",
            post(RuleExpr::FirstOrder(FirstOrder::new(0.5).unwrap())).map_err(|e| e.to_string())?,
        ),
        ("third-order posterior", post(RuleExpr::third_order()).map_err(|e| e.to_string())?),
    ];
    let mut worst = 0.0f64;
    for ((name, m), (_, literal, _)) in computed.iter().zip(&expected) {
        let d = literal.max_abs_diff(m);
        ensure(d <= 1e-12, || format!("{name} off by {d:e}"))?;
        worst = worst.max(d);
    }
    Ok(format!("7 matrices, max deviation {worst:e}"))
}

fn c4_consistency() -> Result<String, String> {
    let t = tol();
    // (rule, condition bound on the model)
    let mut rules: Vec<(RuleExpr, f64)> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&p| (RuleExpr::FirstOrder(FirstOrder::new(p).unwrap()), WELL_CONDITIONED))
        .collect();
    rules.push((
        RuleExpr::composite(vec![FirstOrder::INVERSION, FirstOrder::BAYES, FirstOrder::INVERSION]).unwrap(),
        COMPOSE_CONDITIONED,
    ));
    rules.push((RuleExpr::third_order(), COMPOSE_CONDITIONED));
    let cases = corpus();
    let mut worst = 0.0f64;
    let mut counts = Vec::new();
    for (rule, bound) in &rules {
        let mut n = 0;
        for c in cases.iter().filter(|c| c.condition <= *bound) {
            let r = rule
                .r_matrix(&c.ctx, &t)
                .map_err(|e| format!("{rule}: {e}"))?
                .expect("square model");
            let rep = validate_r(&r, &c.ctx, 1e-9);
            let colsum = rep
                .posterior_colsum_dev
                .ok_or_else(|| format!("{rule}: posterior not computable"))?;
            ensure(rep.passed() && colsum <= 1e-9, || {
                format!("{rule} failed at condition {:.3e}: {rep:?}", c.condition)
            })?;
            worst = worst.max(rep.residual_ones).max(rep.residual_marginal).max(colsum);
            n += 1;
        }
        counts.push(format!("{rule}: {n}"));
    }
    Ok(format!("joints per rule [{}], max residual {worst:e}", counts.join(", ")))
}

fn c5_conjugacy() -> Result<String, String> {
    let t = tol();
    let mut worst = 0.0f64;
    for c in &corpus() {
        let bayes = RuleExpr::bayes().posterior(&c.ctx, &t).map_err(|e| e.to_string())?;
        let inv = RuleExpr::inversion().posterior(&c.ctx, &t).map_err(|e| e.to_string())?;
        let r_i = FirstOrder::INVERSION.r_matrix(&c.ctx, &t).map_err(|e| e.to_string())?;
        let r_k = FirstOrder::BAYES.r_matrix(&c.ctx, &t).map_err(|e| e.to_string())?;
        worst = worst
            .max(linf(&bayes.matrix().transpose(), r_i.matrix()))
            .max(linf(&inv.matrix().transpose(), r_k.matrix()));
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e} > 1e-10"))?;
    Ok(format!("max deviation {worst:e}"))
}

fn c6_reverse_joint() -> Result<String, String> {
    let t = tol();
    let (mut marg, mut invol) = (0.0f64, 0.0f64);
    for c in &corpus() {
        let rev = reverse_joint(&c.joint, &t).map_err(|e| e.to_string())?;
        let (pa, pb) = marginals(&c.joint);
        // rows of the reverse joint are outcomes of B
        let rows: DVector<f64> = rev.matrix().column_sum();
        let cols: DVector<f64> = rev.matrix().row_sum().transpose();
        marg = marg
            .max((rows - pb.entries()).amax())
            .max((cols - pa.entries()).amax());
        let back = reverse_joint(&rev, &t).map_err(|e| e.to_string())?;
        invol = invol.max(linf(back.matrix(), c.joint.matrix()));
    }
    ensure(marg <= 1e-10, || format!("marginal deviation {marg:e} > 1e-10"))?;
    ensure(invol <= 1e-8, || format!("involution deviation {invol:e} > 1e-8"))?;
    Ok(format!("marginals {marg:e}, involution {invol:e}"))
}

fn c7_negative_search() -> Result<String, String> {
    let fx = CanonicalFixture::new();
    let two = search_negative_posterior(2, 200, 42, true).map_err(|e| e.to_string())?;
    let three = search_negative_posterior(3, 200, 42, false).map_err(|e| e.to_string())?;
    ensure(two.first().is_some_and(|w| w.joint == fx.joint), || "J0 not reported first".into())?;
    let total = two.len() + three.len();
    ensure(total >= 5, || format!("only {total} witnesses"))?;
    for w in two.iter().chain(&three) {
        ensure(!w.offending.is_empty(), || format!("witness {} has no offending entry", w.joint))?;
    }
    Ok(format!("{} witnesses at dim 2, {} at dim 3", two.len(), three.len()))
}

fn c8_third_order() -> Result<String, String> {
    let t = tol();
    let joint = JointDist::from_rows(&[&[0.3, 0.2], &[0.1, 0.4]], &t).map_err(|e| e.to_string())?;
    let ctx = RuleContext::from_joint(&joint, &t).map_err(|e| e.to_string())?;
    let dev = |ctx: &RuleContext| -> Result<f64, String> {
        let post = RuleExpr::third_order().posterior(ctx, &t).map_err(|e| e.to_string())?;
        Ok(post.column_sum_deviations().into_iter().fold(0.0, f64::max))
    };
    let mut exact = dev(&ctx)?;
    for c in &corpus() {
        exact = exact.max(dev(&c.ctx)?);
    }
    ensure(exact <= 1e-10, || format!("exact-marginal deviation {exact:e} > 1e-10"))?;

    // P(A) = (0.5, 0.5) moved by 0.05 in the max norm
    let pa = QuasiVector::new(vec![0.55, 0.45], &t).map_err(|e| e.to_string())?;
    let model: StochasticMatrix = ctx.model().clone();
    let perturbed = RuleContext::unchecked(model, ctx.prior_b().clone(), pa).map_err(|e| e.to_string())?;
    let off = dev(&perturbed)?;
    ensure(off > 1e-3, || format!("perturbed deviation {off:e} <= 1e-3"))?;
    Ok(format!("exact {exact:e}, perturbed {off:e}"))
}

fn c9_convergence() -> Result<String, String> {
    let start = Instant::now();
    let t = tol();
    let joint = JointDist::from_rows(&[&[0.3, 0.2], &[0.1, 0.4]], &t).map_err(|e| e.to_string())?;
    let eps = 1e-3;
    let lin = convergence_experiment(
        &joint,
        &ExperimentConfig {
            rule: RuleExpr::inversion(),
            sample_sizes: vec![],
            repetitions: 1,
            seed: 42,
            metric: Metric::L1,
            mode: ObservationMode::Perturbed(vec![eps, eps / 10.0]),
        },
        &t,
    )
    .map_err(|e| e.to_string())?;
    let ratio = lin.rows[0].error_prior / lin.rows[1].error_prior;
    ensure((9.0..=11.0).contains(&ratio), || format!("perturbation error ratio {ratio}"))?;

    let sampled = convergence_experiment(
        &joint,
        &ExperimentConfig {
            rule: RuleExpr::inversion(),
            sample_sizes: vec![100, 10_000, 1_000_000],
            repetitions: 50,
            seed: 42,
            metric: Metric::L1,
            mode: ObservationMode::Sampled,
        },
        &t,
    )
    .map_err(|e| e.to_string())?;
    let medians = sampled.median_prior_error();
    ensure(medians.len() == 3, || format!("{} sample sizes in report", medians.len()))?;
    ensure(medians.windows(2).all(|w| w[1].1 <= w[0].1), || {
        format!("medians not nonincreasing: {medians:?}")
    })?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    let m: Vec<String> = medians.iter().map(|(n, e)| format!("n={n}: {e:.2e}")).collect();
    Ok(format!("ratio {ratio:.4}, medians {}", m.join(", ")))
}

/// Three variables with three outcomes each. Every ordering shares a
/// positive base joint plus an ordering-specific term `d_s u(x) u(y) u(z)`
/// with `u = (1, -1, 0)`, which changes the full-sequence values but none of
/// the marginals.
fn three_variable_assignment() -> (SequenceSpace, ProbabilityAssignment) {
    let vars = ["A", "B", "C"]
        .iter()
        .map(|n| VariableSpec::sized(n, &n.to_lowercase(), 3).unwrap())
        .collect();
    let space = SequenceSpace::new(vars).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w: Vec<f64> = (0..27).map(|_| rng.random_range(1.0..10.0)).collect();
    let total: f64 = w.iter().sum();
    let orderings = space.orderings();
    let u = [1.0, -1.0, 0.0];
    let p = ProbabilityAssignment::from_fn(&space, |s, q| {
        let (a, b, c) = (q.outcome_of(0).unwrap(), q.outcome_of(1).unwrap(), q.outcome_of(2).unwrap());
        let k = orderings.iter().position(|o| o == s).unwrap();
        w[a * 9 + b * 3 + c] / total + 0.004 * (k + 1) as f64 * u[a] * u[b] * u[c]
    });
    (space, p)
}

fn c10_axioms() -> Result<String, String> {
    let t = tol();
    let joint = JointDist::from_rows(&[&[0.3, 0.2], &[0.1, 0.4]], &t).map_err(|e| e.to_string())?;
    let rev = reverse_joint(&joint, &t).map_err(|e| e.to_string())?;
    let space = SequenceSpace::two_variable(2, 2).unwrap();
    let p = ProbabilityAssignment::from_two_variable(&space, &joint, &rev).map_err(|e| e.to_string())?;
    let report = check_axioms(&space, &p, 1e-10);
    ensure(report.passed(), || format!("J0 with reverse fails:\n{report}"))?;

    let ab = space.ordering(&["A", "B"]).unwrap();
    let ba = space.ordering(&["B", "A"]).unwrap();
    let seq = |pairs: &[(&str, &str)]| space.sequence(pairs).unwrap();

    // total mass of one ordering raised by 10%
    let mut scaled = p.clone();
    scaled.scale_ordering(&ba, 1.1);
    let r = check_axioms(&space, &scaled, 1e-10);
    ensure(!r.check(Axiom::Normalization).passed(), || "scaled ordering not flagged".into())?;

    // mass moved from b1 to b2 within a1: same total, different P(B)
    let mut moved = p.clone();
    let (x, y) = (seq(&[("A", "a1"), ("B", "b1")]), seq(&[("A", "a1"), ("B", "b2")]));
    let (vx, vy) = (moved.get(&ab, &x).unwrap(), moved.get(&ab, &y).unwrap());
    moved.set(ab.clone(), x, vx - 0.05);
    moved.set(ab.clone(), y, vy + 0.05);
    let r = check_axioms(&space, &moved, 1e-10);
    ensure(r.check(Axiom::Normalization).passed(), || "moved mass broke normalization".into())?;
    ensure(!r.check(Axiom::Causality).passed(), || "moved mass not flagged as causality".into())?;

    // an undefined value
    let mut undefined = p.clone();
    undefined.set(ba.clone(), seq(&[("B", "b2"), ("A", "a2")]), f64::NAN);
    let r = check_axioms(&space, &undefined, 1e-10);
    ensure(!r.check(Axiom::Defined).passed(), || "NaN value not flagged".into())?;

    let (space3, p3) = three_variable_assignment();
    let r3 = check_axioms(&space3, &p3, 1e-10);
    ensure(r3.passed(), || format!("three-variable construction fails:\n{r3}"))?;
    let distinct = p3.get(&space3.orderings()[0], &space3.sequence(&[("A", "a1"), ("B", "b1"), ("C", "c1")]).unwrap())
        != p3.get(&space3.orderings()[1], &space3.sequence(&[("A", "a1"), ("C", "c1"), ("B", "b1")]).unwrap());
    ensure(distinct, || "three-variable orderings are not distinct".into())?;
    Ok(format!(
        "J0 worst residual {:e}; 3 corruptions flagged; 3-variable causality checks {}",
        report.checks.iter().map(|c| c.worst).fold(0.0, f64::max),
        r3.check(Axiom::Causality).checked
    ))
}

fn c11_cli() -> Result<String, String> {
    let fx = Fixtures::new();
    let code = |args: &[&str], want: i32| -> Result<(), String> {
        let r = run(args);
        ensure(r.code == want, || {
            format!("`{}` exited {} (want {want}): {}", args.join(" "), r.code, r.stderr.trim())
        })
    };
    code(&["validate", "--joint", &fx.j0], 0)?;
    code(&["validate", "--joint", &fx.j0_unnormalized], 1)?;
    code(&["validate", "--joint", &fx.malformed], 2)?;
    code(&["experiment", "--joint", &fx.product], 3)?;
    code(&["infer", "--model", &fx.j0, "--counts", "5,5", "--rule", "compose:bayes,inversion"], 4)?;
    code(&["search-negative", "--dim", "5"], 2)?;

    let exp = ["experiment", "--joint", &fx.j0, "--sizes", "100,10000", "--reps", "10", "--seed", "42"];
    let (first, second) = (run(&exp), run(&exp));
    ensure(first.code == 0, || first.stderr.clone())?;
    ensure(first.stdout == second.stdout, || "experiment CSV differs between runs".into())?;
    let rows = first
        .stdout
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count()
        - 1;
    ensure(rows == 20, || format!("{rows} data rows, want 20"))?;

    // matrices written by the CLI re-parse to the library's exact bits
    let t = tol();
    let joint = JointDist::from_rows(&[&[0.3, 0.2], &[0.1, 0.4]], &t).unwrap();
    let ctx = RuleContext::from_joint(&joint, &t).unwrap();
    let want = infer_with_rule(
        ctx.model(),
        ctx.prior_a(),
        &RuleExpr::FirstOrder(FirstOrder::new(0.5).unwrap()),
        &t,
    )
    .unwrap()
    .posterior;
    let obs = common::write(
        fx.dir.path(),
        "pa.json",
        r#"{"rows":["a1","a2"],"cols":["p"],"data":[[0.5],[0.5]]}"#,
    );
    let obs = obs.to_string_lossy().into_owned();
    let json = run(&["infer", "--model", &fx.j0, "--observed", &obs, "--rule", "mix:0.5"]);
    let value: serde_json::Value = serde_json::from_str(&json.stdout).map_err(|e| e.to_string())?;
    let parsed = parse_matrix_json(&value["posterior"].to_string()).map_err(|e| e.to_string())?;
    let csv = run(&["infer", "--model", &fx.j0, "--observed", &obs, "--rule", "mix:0.5", "--format", "csv"]);
    let parsed_csv = parse_matrix_csv(&csv.stdout).map_err(|e| e.to_string())?;
    for i in 0..2 {
        for j in 0..2 {
            let w = want.matrix()[(i, j)].to_bits();
            ensure(parsed.data[i][j].to_bits() == w && parsed_csv.data[i][j].to_bits() == w, || {
                format!("entry ({i},{j}) not bit-identical after round trip")
            })?;
        }
    }

    let alias = run(&["infer", "--model", &fx.j0, "--counts", "55,45", "--rule", "mix:0"]);
    let bayes = run(&["infer", "--model", &fx.j0, "--counts", "55,45", "--rule", "bayes"]);
    ensure(alias.code == 0 && alias.stdout == bayes.stdout, || "`mix:0` differs from `bayes`".into())?;
    Ok("exit codes 0-4, reproducible CSV, bit-exact round trip, mix:0 alias".into())
}
