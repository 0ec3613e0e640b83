use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "quasibayes", version, about = "Bayes, inversion and mixed inference rules for discrete distributions")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Allowed deviation of a normalization sum from 1.
    #[arg(long, global = true, default_value_t = 1e-9, env = "QUASIBAYES_SUM_TOL")]
    pub sum_tol: f64,
    /// Refuse to invert matrices whose condition estimate exceeds this.
    #[arg(long, global = true, default_value_t = 1e8, env = "QUASIBAYES_COND_MAX")]
    pub cond_max: f64,
    /// Marginal entries at or below this are treated as zero.
    #[arg(long, global = true, default_value_t = 1e-12, env = "QUASIBAYES_SUPPORT_EPS")]
    pub support_eps: f64,
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 42, env = "QUASIBAYES_SEED")]
    pub seed: u64,
    /// Report format; each command has its own default.
    #[arg(long, global = true, value_enum, env = "QUASIBAYES_FORMAT")]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Rescale input that does not sum to one instead of rejecting it.
    #[arg(long, global = true)]
    pub normalize: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Sampled,
    Exact,
    Perturbed,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a joint's normalization, a rule's consistency conditions and the
    /// sequence axioms of the joint with its reverse.
    Validate {
        /// Joint distribution file (JSON or CSV).
        #[arg(long)]
        joint: PathBuf,
        /// bayes | inversion | zeroth | mix:<p> | compose:<t1>,<t2>,...
        #[arg(long, default_value = "bayes")]
        rule: String,
        /// Use this P(A) instead of the joint's row marginal.
        #[arg(long)]
        prior_a: Option<PathBuf>,
    },
    /// Infer the hidden marginal from an observed one and apply a rule.
    Infer {
        /// Conditional P(A|B), or a joint (a file with an `ordering` field).
        #[arg(long)]
        model: PathBuf,
        /// Observed marginal of A as a vector file.
        #[arg(long, conflicts_with = "counts", required_unless_present = "counts")]
        observed: Option<PathBuf>,
        /// Observed counts of A, comma separated.
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<u64>>,
        #[arg(long, default_value = "bayes")]
        rule: String,
        /// Also report the inferred prior projected onto the probability
        /// simplex. This is a post-processing step, not part of the rule.
        #[arg(long)]
        clip_project: bool,
    },
    /// Convergence of the inferred marginal and posterior with sample size.
    Experiment {
        #[arg(long)]
        joint: PathBuf,
        #[arg(long, default_value = "bayes")]
        rule: String,
        /// Sample sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "100,10000,1000000")]
        sizes: Vec<u64>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// l1 | linf
        #[arg(long, default_value = "l1")]
        metric: String,
        #[arg(long, value_enum, default_value_t = Mode::Sampled)]
        mode: Mode,
        /// Perturbation sizes for `--mode perturbed`, comma separated.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
    },
    /// Search for positive joints whose inversion posterior leaves [0, 1].
    SearchNegative {
        /// Joint dimension, 2 to 4.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Do not list the 2x2 reference joint first.
        #[arg(long)]
        no_fixture: bool,
    },
    /// Check the sequence-probability axioms.
    Axioms {
        /// Multi-ordering assignment file.
        #[arg(long, conflicts_with = "joint", required_unless_present = "joint")]
        assignment: Option<PathBuf>,
        /// Build the two-variable assignment from a joint and the reverse joint
        /// of `--rule`.
        #[arg(long)]
        joint: Option<PathBuf>,
        #[arg(long, default_value = "inversion")]
        rule: String,
        /// Residual tolerance; defaults to --sum-tol.
        #[arg(long)]
        tol: Option<f64>,
    },
}
