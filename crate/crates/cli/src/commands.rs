use std::path::Path;

use quasibayes::dist::{reverse_joint, JointDist, QuasiVector, StochasticMatrix, Tolerances};
use quasibayes::error::Error;
use quasibayes::inference::{
    clip_project, convergence_experiment, estimate_from_counts, infer_with_rule, ExperimentConfig, Metric, ObservationMode,
};
use quasibayes::io::{format_float, load_matrix, parse_assignment_json, AssignmentFile, MatrixFile};
use quasibayes::oracle::{search_negative_posterior, RationalMatrix};
use quasibayes::rules::{validate_r, RuleContext, RuleExpr};
use quasibayes::seqprob::{check_axioms, Axiom, ProbabilityAssignment, SequenceSpace};
use serde_json::{json, Value};

use crate::args::{Command, Format, Global, Mode};

/// Why a command did not succeed; each maps to one exit code.
#[derive(Debug)]
pub enum Failure {
    /// The checked property does not hold. The report is still written.
    Validation,
    Input(String),
    Degenerate(String),
    RuleSpec(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation => 1,
            Failure::Input(_) => 2,
            Failure::Degenerate(_) => 3,
            Failure::RuleSpec(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::RuleSpec { .. } | Error::EvenLength(_) => Failure::RuleSpec(msg),
            e if e.is_degenerate() => Failure::Degenerate(msg),
            _ => Failure::Input(msg),
        }
    }
}

pub struct Report {
    pub text: String,
    pub passed: bool,
}

pub fn tolerances(g: &Global) -> Result<Tolerances, Failure> {
    Tolerances::new(g.sum_tol, g.cond_max, g.support_eps).map_err(|e| Failure::Input(e.to_string()))
}

pub fn run(command: &Command, g: &Global) -> Result<Report, Failure> {
    let tol = tolerances(g)?;
    match command {
        Command::Validate { joint, rule, prior_a } => validate(g, &tol, joint, rule, prior_a.as_deref()),
        Command::Infer {
            model,
            observed,
            counts,
            rule,
            clip_project,
        } => infer(g, &tol, model, observed.as_deref(), counts.as_deref(), rule, *clip_project),
        Command::Experiment {
            joint,
            rule,
            sizes,
            reps,
            metric,
            mode,
            eps,
        } => experiment(g, &tol, joint, rule, sizes, *reps, metric, *mode, eps),
        Command::SearchNegative { dim, trials, no_fixture } => search(g, &tol, *dim, *trials, !*no_fixture),
        Command::Axioms {
            assignment,
            joint,
            rule,
            tol: axiom_tol,
        } => axioms(g, &tol, assignment.as_deref(), joint.as_deref(), rule, *axiom_tol),
    }
}

fn header(command: &str, g: &Global, tol: &Tolerances) -> Value {
    json!({
        "command": command,
        "tolerances": serde_json::to_value(tol).expect("plain data"),
        "normalize": g.normalize,
        "seed": g.seed,
    })
}

fn csv_header(command: &str, g: &Global, tol: &Tolerances) -> String {
    format!(
        "# quasibayes {command}\n# sum_tol={} cond_max={} support_eps={} normalize={} seed={}\n",
        format_float(tol.sum_tol),
        format_float(tol.cond_max),
        format_float(tol.support_eps),
        g.normalize,
        g.seed
    )
}

fn with_body(mut head: Value, body: Value) -> String {
    let obj = head.as_object_mut().expect("header is an object");
    for (k, v) in body.as_object().expect("body is an object") {
        obj.insert(k.clone(), v.clone());
    }
    let mut s = serde_json::to_string_pretty(&head).expect("plain data");
    s.push('\n');
    s
}

fn parse_rule(spec: &str) -> Result<RuleExpr, Failure> {
    spec.parse::<RuleExpr>().map_err(Failure::from)
}

fn load_joint(path: &Path, g: &Global, tol: &Tolerances) -> Result<JointDist, Failure> {
    let mut file = load_matrix(path)?;
    if g.normalize {
        file = file.normalized();
    }
    Ok(file.to_joint(tol)?)
}

fn load_vector(path: &Path, g: &Global, tol: &Tolerances) -> Result<QuasiVector, Failure> {
    let mut file = load_matrix(path)?;
    if g.normalize {
        file = file.normalized();
    }
    Ok(file.to_vector(tol)?)
}

/// A conditional file, or a joint (recognized by its `ordering` field)
/// conditioned on its column variable.
fn load_model(path: &Path, g: &Global, tol: &Tolerances) -> Result<StochasticMatrix, Failure> {
    let mut file = load_matrix(path)?;
    if file.ordering.is_some() {
        if g.normalize {
            file = file.normalized();
        }
        let joint = file.to_joint(tol)?;
        return Ok(RuleContext::from_joint(&joint, tol)?.model().clone());
    }
    if g.normalize {
        file = file.column_normalized();
    }
    Ok(StochasticMatrix::from_quasi(file.to_quasi_matrix(tol)?, tol)?)
}

/// One named pass/fail check of `validate`.
struct Check {
    name: &'static str,
    passed: bool,
    residual: f64,
}

fn validate(
    g: &Global,
    tol: &Tolerances,
    joint: &Path,
    rule: &str,
    prior_a: Option<&Path>,
) -> Result<Report, Failure> {
    let rule = parse_rule(rule)?;
    let mut file = load_matrix(joint)?;
    if g.normalize {
        file = file.normalized();
    }
    // normalization is one of the checks, so the joint is read as given
    let joint = file.to_joint_unchecked()?;
    let loose = Tolerances::new(f64::MAX, tol.cond_max, tol.support_eps).expect("positive");
    let mut checks = Vec::new();
    let total_dev = (joint.total() - 1.0).abs();
    checks.push(Check {
        name: "normalization",
        passed: total_dev <= tol.sum_tol,
        residual: total_dev,
    });
    let most_negative = joint.matrix().iter().copied().fold(0.0, f64::min);
    checks.push(Check {
        name: "nonnegative",
        passed: most_negative >= 0.0,
        residual: if most_negative < 0.0 { -most_negative } else { 0.0 },
    });

    let mut ctx = RuleContext::from_joint(&joint, &loose)?;
    if let Some(path) = prior_a {
        let pa = load_vector(path, g, tol)?;
        ctx = RuleContext::unchecked(ctx.model().clone(), ctx.prior_b().clone(), pa)?;
    }
    let r = rule
        .r_matrix(&ctx, tol)?
        .ok_or_else(|| Failure::Input(format!("rule `{rule}` has no R-matrix for a rectangular model")))?;
    let report = validate_r(&r, &ctx, tol.sum_tol);
    checks.push(Check {
        name: "r_ones",
        passed: report.ones_ok,
        residual: report.residual_ones,
    });
    checks.push(Check {
        name: "r_marginal",
        passed: report.marginal_ok,
        residual: report.residual_marginal,
    });
    if let Some(dev) = report.posterior_colsum_dev {
        checks.push(Check {
            name: "posterior_colsum",
            passed: dev <= tol.sum_tol,
            residual: dev,
        });
    }
    let posterior = rule.posterior(&ctx, tol).ok();

    // sequence axioms on the joint and the reverse joint this rule assigns
    let reverse = rule.reverse_joint(&ctx, tol)?;
    let (na, nb) = joint.matrix().shape();
    let space = SequenceSpace::two_variable(na, nb)?;
    let assignment = ProbabilityAssignment::from_two_variable(&space, &joint, &reverse)?;
    let axioms = check_axioms(&space, &assignment, tol.sum_tol);
    for c in &axioms.checks {
        checks.push(Check {
            name: axiom_name(c.axiom),
            passed: c.passed(),
            residual: c.worst,
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    let text = match g.format.unwrap_or(Format::Json) {
        Format::Json => with_body(
            header("validate", g, tol),
            json!({
                "rule": rule.to_string(),
                "passed": passed,
                "checks": checks.iter()
                    .map(|c| json!({"check": c.name, "passed": c.passed, "residual": c.residual}))
                    .collect::<Vec<_>>(),
                "rule_report": serde_json::to_value(&report).expect("plain data"),
                "axiom_report": serde_json::to_value(&axioms).expect("plain data"),
                "r_matrix": MatrixFile::from_matrix(ctx.prior_a().labels(), ctx.prior_b().labels(), r.matrix(), None),
                "posterior": posterior.as_ref().map(MatrixFile::from_quasi_matrix),
            }),
        ),
        Format::Csv => {
            let mut s = csv_header("validate", g, tol);
            s.push_str(&format!("# rule={rule}\n"));
            s.push_str("check,passed,residual\n");
            for c in &checks {
                s.push_str(&format!("{},{},{}\n", c.name, c.passed, format_float(c.residual)));
            }
            s
        }
    };
    Ok(Report { text, passed })
}

fn axiom_name(a: Axiom) -> &'static str {
    match a {
        Axiom::Defined => "axiom_defined",
        Axiom::Normalization => "axiom_normalization",
        Axiom::Additivity => "axiom_additivity",
        Axiom::Causality => "axiom_causality",
    }
}

fn infer(
    g: &Global,
    tol: &Tolerances,
    model: &Path,
    observed: Option<&Path>,
    counts: Option<&[u64]>,
    rule: &str,
    clip: bool,
) -> Result<Report, Failure> {
    let rule = parse_rule(rule)?;
    let model = load_model(model, g, tol)?;
    let observed = match (observed, counts) {
        (Some(path), _) => load_vector(path, g, tol)?,
        (None, Some(c)) => estimate_from_counts(c)?
            .estimate
            .into_quasi()
            .relabel(model.row_labels().to_vec())?,
        (None, None) => return Err(Failure::Input("give --observed or --counts".into())),
    };
    let res = infer_with_rule(&model, &observed, &rule, tol)?;
    let text = match g.format.unwrap_or(Format::Json) {
        Format::Json => with_body(
            header("infer", g, tol),
            json!({
                "rule": rule.to_string(),
                "observed": MatrixFile::from_vector(&observed),
                "inferred_prior": MatrixFile::from_vector(&res.inferred_prior),
                "posterior": MatrixFile::from_quasi_matrix(&res.posterior),
                "diagnostics": serde_json::to_value(&res.diagnostics).expect("plain data"),
                "clipped_prior": clip.then(|| MatrixFile::from_vector(&clip_project(&res.inferred_prior))),
            }),
        ),
        Format::Csv => {
            // posterior rows are `b`, so the inferred prior fits as a last column
            let mut file = MatrixFile::from_quasi_matrix(&res.posterior);
            file.cols.push("inferred_prior".into());
            for (row, p) in file.data.iter_mut().zip(res.inferred_prior.as_slice()) {
                row.push(*p);
            }
            if clip {
                let clipped = clip_project(&res.inferred_prior);
                file.cols.push("clipped_prior".into());
                for (row, p) in file.data.iter_mut().zip(clipped.as_slice()) {
                    row.push(*p);
                }
            }
            let mut s = csv_header("infer", g, tol);
            s.push_str(&format!("# rule={rule}\n"));
            s.push_str(&file.to_csv());
            s
        }
    };
    Ok(Report { text, passed: true })
}

#[allow(clippy::too_many_arguments)]
fn experiment(
    g: &Global,
    tol: &Tolerances,
    joint: &Path,
    rule: &str,
    sizes: &[u64],
    reps: usize,
    metric: &str,
    mode: Mode,
    eps: &[f64],
) -> Result<Report, Failure> {
    let rule = parse_rule(rule)?;
    let metric: Metric = metric.parse()?;
    let joint = load_joint(joint, g, tol)?;
    let mode = match mode {
        Mode::Sampled => ObservationMode::Sampled,
        Mode::Exact => ObservationMode::Exact,
        Mode::Perturbed if eps.is_empty() => {
            return Err(Failure::Input("--mode perturbed needs --eps".into()))
        }
        Mode::Perturbed => ObservationMode::Perturbed(eps.to_vec()),
    };
    let config = ExperimentConfig {
        rule: rule.clone(),
        sample_sizes: sizes.to_vec(),
        repetitions: reps,
        seed: g.seed,
        metric,
        mode,
    };
    let report = convergence_experiment(&joint, &config, tol)?;
    let text = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = csv_header("experiment", g, tol);
            s.push_str(&format!("# rule={rule}\n"));
            s.push_str(&report.to_csv());
            s
        }
        Format::Json => with_body(
            header("experiment", g, tol),
            json!({
                "rule": rule.to_string(),
                "median_prior_error": report.median_prior_error(),
                "rows": serde_json::to_value(&report.rows).expect("plain data"),
            }),
        ),
    };
    Ok(Report { text, passed: true })
}

fn rational_rows(m: &RationalMatrix) -> Vec<Vec<String>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m.get(i, j).to_string()).collect())
        .collect()
}

fn search(g: &Global, tol: &Tolerances, dim: usize, trials: usize, fixture: bool) -> Result<Report, Failure> {
    let found = search_negative_posterior(dim, trials, g.seed, fixture)?;
    let text = match g.format.unwrap_or(Format::Json) {
        Format::Json => {
            let witnesses: Vec<Value> = found
                .iter()
                .map(|w| {
                    json!({
                        "joint": rational_rows(&w.joint),
                        "posterior": rational_rows(&w.posterior),
                        "offending": w.offending.iter()
                            .map(|(i, j, v)| json!({"row": i, "col": j, "value": v.to_string()}))
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            with_body(
                header("search-negative", g, tol),
                json!({"dim": dim, "trials": trials, "found": found.len(), "witnesses": witnesses}),
            )
        }
        Format::Csv => {
            let mut s = csv_header("search-negative", g, tol);
            s.push_str("index,joint,posterior,offending\n");
            for (k, w) in found.iter().enumerate() {
                s.push_str(&format!("{k},\"{}\",\"{}\",{}\n", w.joint, w.posterior, w.offending.len()));
            }
            s
        }
    };
    Ok(Report { text, passed: true })
}

fn axioms(
    g: &Global,
    tol: &Tolerances,
    assignment: Option<&Path>,
    joint: Option<&Path>,
    rule: &str,
    axiom_tol: Option<f64>,
) -> Result<Report, Failure> {
    let (space, p): (SequenceSpace, ProbabilityAssignment) = match (assignment, joint) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let file: AssignmentFile = parse_assignment_json(&text)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            file.to_space()?
        }
        (None, Some(path)) => {
            let rule = parse_rule(rule)?;
            let joint = load_joint(path, g, tol)?;
            let reverse = if rule == RuleExpr::inversion() {
                reverse_joint(&joint, tol)?
            } else {
                rule.reverse_joint(&RuleContext::from_joint(&joint, tol)?, tol)?
            };
            let (na, nb) = joint.matrix().shape();
            let space = SequenceSpace::two_variable(na, nb)?;
            let p = ProbabilityAssignment::from_two_variable(&space, &joint, &reverse)?;
            (space, p)
        }
        (None, None) => return Err(Failure::Input("give --assignment or --joint".into())),
    };
    let check_tol = axiom_tol.unwrap_or(tol.sum_tol);
    if !(check_tol.is_finite() && check_tol > 0.0) {
        return Err(Failure::Input(format!("--tol must be positive, got {check_tol}")));
    }
    let report = check_axioms(&space, &p, check_tol);
    let passed = report.passed();
    let text = match g.format.unwrap_or(Format::Json) {
        Format::Json => with_body(
            header("axioms", g, tol),
            json!({
                "passed": passed,
                "report": serde_json::to_value(&report).expect("plain data"),
            }),
        ),
        Format::Csv => {
            let mut s = csv_header("axioms", g, tol);
            s.push_str(&format!("# tol={}\n", format_float(check_tol)));
            s.push_str("axiom,passed,checked,violations,worst\n");
            for c in &report.checks {
                s.push_str(&format!(
                    "{:?},{},{},{},{}\n",
                    c.axiom,
                    c.passed(),
                    c.checked,
                    c.violations,
                    format_float(c.worst)
                ));
            }
            s
        }
    };
    Ok(Report { text, passed })
}
