//! Inference for finite discrete distributions with a choice of inference
//! rule.
//!
//! Bayes' rule is one way to obtain the reverse conditional `P(B|A)` from a
//! model `P(A|B)` and marginals. This crate treats it as one member of a
//! family parameterized by R-matrices, alongside the inversion rule
//! `P(B|A) = P(A|B)^-1`, their convex mixtures and odd-length compositions.
//!
//! - [`dist`]: distribution types, conditionals, checked inversion, reverse joints
//! - [`rules`]: R-matrix constructions, consistency checks, posteriors
//! - [`inference`]: inferring a hidden marginal and running rules on it
//! - [`seqprob`]: sequence spaces and axiom checkers
//! - [`oracle`]: exact-rational reference used to verify the float code
//! - [`io`]: JSON/CSV file formats
//!
//! ```
//! use quasibayes::dist::{JointDist, Tolerances};
//! use quasibayes::rules::{RuleContext, RuleExpr};
//!
//! let tol = Tolerances::default();
//! let joint = JointDist::from_rows(&[&[0.3, 0.2], &[0.1, 0.4]], &tol).unwrap();
//! let ctx = RuleContext::from_joint(&joint, &tol).unwrap();
//! let post = RuleExpr::inversion().posterior(&ctx, &tol).unwrap();
//! assert!((post.matrix()[(0, 1)] + 0.8).abs() < 1e-12);
//! ```

pub mod dist;
pub mod error;
pub mod inference;
pub mod io;
pub mod oracle;
pub mod rules;
pub mod seqprob;

pub use error::{Error, Result};
