use nalgebra::DMatrix;
use proptest::prelude::*;
use quasibayes::dist::{
    condition_number, conditional_from_joint, invert, marginals, reverse_joint, JointDist, Tolerances,
};
use quasibayes::inference::{infer_hidden_marginal, infer_with_rule};
use quasibayes::rules::{validate_r, FirstOrder, RuleContext, RuleExpr};
use quasibayes::seqprob::{check_axioms, ProbabilityAssignment, SequenceSpace};

const COND_LIMIT: f64 = 1e4;

/// Strictly positive square joints of dimension 2..=6 with a diagonal boost,
/// normalized in floating point.
fn joint_strategy() -> impl Strategy<Value = JointDist> {
    (2usize..=6)
        .prop_flat_map(|n| (Just(n), proptest::collection::vec(1u32..100, n * n), 0u32..400))
        .prop_map(|(n, w, boost)| {
            let m = DMatrix::from_fn(n, n, |i, j| {
                w[i * n + j] as f64 + if i == j { boost as f64 } else { 0.0 }
            });
            let total = m.sum();
            JointDist::new(m / total, &Tolerances::default()).unwrap()
        })
}

fn well_conditioned(j: &JointDist) -> bool {
    let tol = Tolerances::default();
    conditional_from_joint(j, &tol).is_ok_and(|m| condition_number(m.matrix()) <= COND_LIMIT)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bayes_posterior_is_a_conditional(j in joint_strategy()) {
        let tol = Tolerances::default();
        let ctx = RuleContext::from_joint(&j, &tol).unwrap();
        let post = RuleExpr::bayes().posterior(&ctx, &tol).unwrap();
        prop_assert!(post.matrix().iter().all(|&x| x >= -1e-12));
        prop_assert!(post.column_sum_deviations().iter().all(|&d| d <= 1e-9));
        let back = post.matrix() * ctx.prior_a().entries() - ctx.prior_b().entries();
        prop_assert!(back.amax() <= 1e-9);
    }

    #[test]
    fn first_order_rules_are_consistent(j in joint_strategy(), p in 0.0f64..=1.0) {
        prop_assume!(well_conditioned(&j));
        let tol = Tolerances::default();
        let ctx = RuleContext::from_joint(&j, &tol).unwrap();
        let r = FirstOrder::new(p).unwrap().r_matrix(&ctx, &tol).unwrap();
        let rep = validate_r(&r, &ctx, 1e-9);
        prop_assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn odd_compositions_are_consistent(
        j in joint_strategy(),
        ps in proptest::collection::vec(0.0f64..=1.0, 1..=2),
    ) {
        prop_assume!(well_conditioned(&j));
        let tol = Tolerances::default();
        let ctx = RuleContext::from_joint(&j, &tol).unwrap();
        let mut terms: Vec<FirstOrder> = Vec::new();
        for &p in &ps {
            terms.push(FirstOrder::new(p).unwrap());
            terms.push(FirstOrder::new(1.0 - p).unwrap());
        }
        terms.push(FirstOrder::BAYES);
        let rule = RuleExpr::composite(terms).unwrap();
        let r = rule.r_matrix(&ctx, &tol).unwrap().unwrap();
        let rep = validate_r(&r, &ctx, 1e-9);
        prop_assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn inversion_posterior_is_the_model_inverse(j in joint_strategy()) {
        prop_assume!(well_conditioned(&j));
        let tol = Tolerances::default();
        let ctx = RuleContext::from_joint(&j, &tol).unwrap();
        let post = RuleExpr::inversion().posterior(&ctx, &tol).unwrap();
        let inv = invert(ctx.model().matrix(), &tol).unwrap().inverse;
        prop_assert!(max_abs(&(post.matrix() - inv)) <= 1e-8);
    }

    #[test]
    fn exact_observation_recovers_the_prior(j in joint_strategy()) {
        prop_assume!(well_conditioned(&j));
        let tol = Tolerances::default();
        let ctx = RuleContext::from_joint(&j, &tol).unwrap();
        let inferred = infer_hidden_marginal(ctx.model(), ctx.prior_a(), &tol).unwrap();
        prop_assert!((inferred.entries() - ctx.prior_b().entries()).amax() <= 1e-10);
        // inferred prior, then Bayes: the same posterior as the true context
        let res = infer_with_rule(ctx.model(), ctx.prior_a(), &RuleExpr::bayes(), &tol).unwrap();
        let truth = RuleExpr::bayes().posterior(&ctx, &tol).unwrap();
        prop_assert!(max_abs(&(res.posterior.matrix() - truth.matrix())) <= 1e-8);
    }

    #[test]
    fn reverse_joint_swaps_marginals_and_is_involutive(j in joint_strategy()) {
        prop_assume!(well_conditioned(&j));
        let tol = Tolerances::default();
        let rev = reverse_joint(&j, &tol).unwrap();
        let (pa, pb) = marginals(&j);
        let (rb, ra) = marginals(&rev);
        prop_assert!((ra.entries() - pa.entries()).amax() <= 1e-10);
        prop_assert!((rb.entries() - pb.entries()).amax() <= 1e-10);
        let back = reverse_joint(&rev, &tol).unwrap();
        prop_assert!(max_abs(&(back.matrix() - j.matrix())) <= 1e-8);
    }

    #[test]
    fn joint_and_reverse_satisfy_the_axioms(j in joint_strategy()) {
        prop_assume!(j.matrix().nrows() <= 5 && well_conditioned(&j));
        let tol = Tolerances::default();
        let n = j.matrix().nrows();
        let space = SequenceSpace::two_variable(n, n).unwrap();
        let rev = reverse_joint(&j, &tol).unwrap();
        let p = ProbabilityAssignment::from_two_variable(&space, &j, &rev).unwrap();
        let report = check_axioms(&space, &p, 1e-10);
        prop_assert!(report.passed(), "{report}");
    }
}
