//! Sequence-based probability spaces and checkers for the axioms that replace
//! set intersection with ordered sequences.
//!
//! For `N` variables and an ordering `s` (a permutation of the variables),
//! `E_s` is the set of full sequences listing one outcome per variable in
//! the order `s`, and `F_s` is the set of their subsequences. A probability
//! assignment gives a real number, possibly negative, to every full sequence
//! of every ordering; the probability of a partial sequence is the sum over
//! the full sequences containing it. The checkers verify normalization per
//! ordering, additivity over disjoint partial sequences, and the causality
//! constraint: a partial sequence that is valid under several orderings must
//! receive the same marginal under each.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::JointDist;
use crate::error::{Error, Result};

pub const MAX_VARIABLES: usize = 4;
pub const MAX_ALPHABET: usize = 5;
/// Violations listed per axiom before the report stops recording instances.
pub const MAX_REPORTED: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    name: String,
    alphabet: Vec<String>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, alphabet: Vec<String>) -> Result<Self> {
        let name = name.into();
        if alphabet.is_empty() {
            return Err(Error::Sequence(format!("variable `{name}` has no outcomes")));
        }
        let unique: BTreeSet<&String> = alphabet.iter().collect();
        if unique.len() != alphabet.len() {
            return Err(Error::Sequence(format!("variable `{name}` repeats an outcome label")));
        }
        Ok(VariableSpec { name, alphabet })
    }

    /// Variable `name` with outcomes `<prefix>1 .. <prefix>size`.
    pub fn sized(name: &str, prefix: &str, size: usize) -> Result<Self> {
        Self::new(name, (1..=size).map(|i| format!("{prefix}{i}")).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }
}

/// A permutation of variable indices; position `k` holds the variable that
/// appears `k`-th in every sequence of this order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ordering(Vec<usize>);

impl Ordering {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &v in &perm {
            if v >= perm.len() || std::mem::replace(&mut seen[v], true) {
                return Err(Error::Sequence(format!("{perm:?} is not a permutation")));
            }
        }
        Ok(Ordering(perm))
    }

    pub fn identity(n: usize) -> Self {
        Ordering((0..n).collect())
    }

    /// All `n!` orderings in lexicographic order.
    pub fn all(n: usize) -> Vec<Ordering> {
        fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Ordering>) {
            if prefix.len() == used.len() {
                out.push(Ordering(prefix.clone()));
                return;
            }
            for v in 0..used.len() {
                if !used[v] {
                    used[v] = true;
                    prefix.push(v);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[v] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    pub fn perm(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn position(&self, var: usize) -> Option<usize> {
        self.0.iter().position(|&v| v == var)
    }
}

/// One element of a sequence: an outcome of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Item {
    pub var: usize,
    pub outcome: usize,
}

/// A finite sequence of outcomes with no variable repeated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Sequence(Vec<Item>);

impl Sequence {
    pub fn new(items: Vec<Item>) -> Result<Self> {
        let vars: BTreeSet<usize> = items.iter().map(|i| i.var).collect();
        if vars.len() != items.len() {
            return Err(Error::Sequence("a variable appears twice in a sequence".into()));
        }
        Ok(Sequence(items))
    }

    pub fn empty() -> Self {
        Sequence(Vec::new())
    }

    /// Shorthand from `(variable, outcome)` index pairs. Panics on a repeated
    /// variable.
    pub fn of(pairs: &[(usize, usize)]) -> Self {
        Self::new(pairs.iter().map(|&(var, outcome)| Item { var, outcome }).collect())
            .expect("no repeated variable")
    }

    pub fn items(&self) -> &[Item] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The set of elements appearing in the sequence.
    pub fn membership(&self) -> BTreeSet<Item> {
        self.0.iter().copied().collect()
    }

    pub fn outcome_of(&self, var: usize) -> Option<usize> {
        self.0.iter().find(|i| i.var == var).map(|i| i.outcome)
    }

    /// True when the items appear in the relative order given by `s`, i.e.
    /// the sequence belongs to `F_s`.
    pub fn has_order(&self, s: &Ordering) -> bool {
        let mut last = None;
        for item in &self.0 {
            match s.position(item.var) {
                Some(p) if last.is_none_or(|l| p > l) => last = Some(p),
                _ => return false,
            }
        }
        true
    }

    /// Subsequence by deleting elements (order-preserving embedding).
    pub fn is_subsequence_of(&self, other: &Sequence) -> bool {
        let mut it = other.0.iter();
        self.0.iter().all(|x| it.any(|y| y == x))
    }

    /// `self ⊆_s other`: both in `F_s` and the membership set of `self` is
    /// contained in that of `other`.
    pub fn contained_in(&self, other: &Sequence, s: &Ordering) -> bool {
        self.has_order(s) && other.has_order(s) && self.membership().is_subset(&other.membership())
    }
}

/// A finite collection of variables at desk scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSpace {
    vars: Vec<VariableSpec>,
}

impl SequenceSpace {
    pub fn new(vars: Vec<VariableSpec>) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::Sequence("at least one variable is required".into()));
        }
        if vars.len() > MAX_VARIABLES {
            return Err(Error::Sequence(format!(
                "{} variables exceeds the limit of {MAX_VARIABLES}",
                vars.len()
            )));
        }
        if let Some(v) = vars.iter().find(|v| v.size() > MAX_ALPHABET) {
            return Err(Error::Sequence(format!(
                "variable `{}` has {} outcomes, limit is {MAX_ALPHABET}",
                v.name,
                v.size()
            )));
        }
        let names: BTreeSet<&str> = vars.iter().map(|v| v.name.as_str()).collect();
        if names.len() != vars.len() {
            return Err(Error::Sequence("variable names must be unique".into()));
        }
        Ok(SequenceSpace { vars })
    }

    /// Two variables `A` (index 0) and `B` (index 1) with `a1..`, `b1..`.
    pub fn two_variable(na: usize, nb: usize) -> Result<Self> {
        Self::new(vec![VariableSpec::sized("A", "a", na)?, VariableSpec::sized("B", "b", nb)?])
    }

    pub fn vars(&self) -> &[VariableSpec] {
        &self.vars
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn orderings(&self) -> Vec<Ordering> {
        Ordering::all(self.vars.len())
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    fn check_ordering(&self, s: &Ordering) -> Result<()> {
        if s.len() != self.vars.len() {
            return Err(Error::Sequence(format!(
                "ordering over {} variables used in a space of {}",
                s.len(),
                self.vars.len()
            )));
        }
        Ok(())
    }

    fn check_sequence(&self, q: &Sequence, s: &Ordering) -> Result<()> {
        self.check_ordering(s)?;
        for item in q.items() {
            let ok = self.vars.get(item.var).is_some_and(|v| item.outcome < v.size());
            if !ok {
                return Err(Error::Sequence(format!("item {item:?} is outside the space")));
            }
        }
        if !q.has_order(s) {
            return Err(Error::Sequence(format!(
                "sequence {} does not have order {}",
                self.format_sequence(q),
                self.format_ordering(s)
            )));
        }
        Ok(())
    }

    /// `E_s`: every full sequence with order `s`, outcomes varying fastest at
    /// the last position.
    pub fn enumerate_full(&self, s: &Ordering) -> Result<Vec<Sequence>> {
        self.check_ordering(s)?;
        let sizes: Vec<usize> = s.perm().iter().map(|&v| self.vars[v].size()).collect();
        let total: usize = sizes.iter().product();
        Ok((0..total)
            .map(|mut code| {
                let mut outcomes = vec![0; sizes.len()];
                for k in (0..sizes.len()).rev() {
                    outcomes[k] = code % sizes[k];
                    code /= sizes[k];
                }
                Sequence(
                    s.perm()
                        .iter()
                        .zip(outcomes)
                        .map(|(&var, outcome)| Item { var, outcome })
                        .collect(),
                )
            })
            .collect())
    }

    /// `F_s`: every subsequence of a full sequence of order `s`, including
    /// the empty one.
    pub fn enumerate_partial(&self, s: &Ordering) -> Result<Vec<Sequence>> {
        self.check_ordering(s)?;
        let n = s.len();
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            let positions: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
            let sizes: Vec<usize> = positions.iter().map(|&k| self.vars[s.perm()[k]].size()).collect();
            let total: usize = sizes.iter().product();
            for mut code in 0..total {
                let mut items = vec![Item { var: 0, outcome: 0 }; positions.len()];
                for k in (0..positions.len()).rev() {
                    items[k] = Item {
                        var: s.perm()[positions[k]],
                        outcome: code % sizes[k],
                    };
                    code /= sizes[k];
                }
                out.push(Sequence(items));
            }
        }
        Ok(out)
    }

    /// `R_s(q)`: the full sequences of order `s` that contain `q`.
    pub fn containing_set(&self, q: &Sequence, s: &Ordering) -> Result<Vec<Sequence>> {
        self.check_sequence(q, s)?;
        Ok(self
            .enumerate_full(s)?
            .into_iter()
            .filter(|full| q.contained_in(full, s))
            .collect())
    }

    /// `q1 ∩_s q2 = R_s(q1) ∩ R_s(q2)`.
    pub fn meet(&self, q1: &Sequence, q2: &Sequence, s: &Ordering) -> Result<BTreeSet<Sequence>> {
        let a: BTreeSet<Sequence> = self.containing_set(q1, s)?.into_iter().collect();
        let b: BTreeSet<Sequence> = self.containing_set(q2, s)?.into_iter().collect();
        Ok(a.intersection(&b).cloned().collect())
    }

    /// `q1 ∪_s q2 = R_s(q1) ∪ R_s(q2)`.
    pub fn join(&self, q1: &Sequence, q2: &Sequence, s: &Ordering) -> Result<BTreeSet<Sequence>> {
        let mut a: BTreeSet<Sequence> = self.containing_set(q1, s)?.into_iter().collect();
        a.extend(self.containing_set(q2, s)?);
        Ok(a)
    }

    /// Marginal: the sum of `P` over `R_s(q)`. Unassigned full
    /// sequences count as zero.
    pub fn marginal(&self, p: &ProbabilityAssignment, q: &Sequence, s: &Ordering) -> Result<f64> {
        Ok(self
            .containing_set(q, s)?
            .iter()
            .map(|full| p.get(s, full).unwrap_or(0.0))
            .sum())
    }

    /// Builds a sequence from `(variable name, outcome label)` pairs.
    pub fn sequence(&self, pairs: &[(&str, &str)]) -> Result<Sequence> {
        let items = pairs
            .iter()
            .map(|(name, label)| {
                let var = self
                    .var_index(name)
                    .ok_or_else(|| Error::Sequence(format!("unknown variable `{name}`")))?;
                let outcome = self.vars[var]
                    .alphabet
                    .iter()
                    .position(|l| l == label)
                    .ok_or_else(|| Error::Sequence(format!("`{label}` is not an outcome of `{name}`")))?;
                Ok(Item { var, outcome })
            })
            .collect::<Result<Vec<_>>>()?;
        Sequence::new(items)
    }

    /// Ordering from variable names, earliest first.
    pub fn ordering(&self, names: &[&str]) -> Result<Ordering> {
        let perm = names
            .iter()
            .map(|n| {
                self.var_index(n)
                    .ok_or_else(|| Error::Sequence(format!("unknown variable `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if perm.len() != self.vars.len() {
            return Err(Error::Sequence(format!(
                "ordering names {} variables, space has {}",
                perm.len(),
                self.vars.len()
            )));
        }
        Ordering::new(perm)
    }

    pub fn format_ordering(&self, s: &Ordering) -> String {
        s.perm()
            .iter()
            .map(|&v| self.vars.get(v).map_or("?", |x| x.name.as_str()))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn format_sequence(&self, q: &Sequence) -> String {
        let parts: Vec<&str> = q
            .items()
            .iter()
            .map(|i| {
                self.vars
                    .get(i.var)
                    .and_then(|v| v.alphabet.get(i.outcome))
                    .map_or("?", |l| l.as_str())
            })
            .collect();
        format!("({})", parts.join(","))
    }

    /// Mixed-radix index of a full sequence within `enumerate_full(s)`.
    fn full_index(&self, full: &Sequence, s: &Ordering) -> usize {
        full.items()
            .iter()
            .zip(s.perm())
            .fold(0, |acc, (item, &v)| acc * self.vars[v].size() + item.outcome)
    }
}

/// Real-valued probabilities for the full sequences of every ordering.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbabilityAssignment {
    values: BTreeMap<(Ordering, Sequence), f64>,
}

impl ProbabilityAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assigns `f(s, Q)` to every full sequence `Q` of every ordering `s`.
    pub fn from_fn(space: &SequenceSpace, mut f: impl FnMut(&Ordering, &Sequence) -> f64) -> Self {
        let mut p = Self::new();
        for s in space.orderings() {
            for q in space.enumerate_full(&s).expect("ordering from the space") {
                let v = f(&s, &q);
                p.values.insert((s.clone(), q), v);
            }
        }
        p
    }

    /// Two-variable assignment: the ordering `B,A` takes its values from the
    /// forward joint `P(A,B)` (rows `a`, columns `b`) and the ordering `A,B`
    /// from the reverse joint `P(B,A)` (rows `b`, columns `a`).
    pub fn from_two_variable(space: &SequenceSpace, forward: &JointDist, reverse: &JointDist) -> Result<Self> {
        if space.n_vars() != 2 {
            return Err(Error::Sequence("two-variable assignment needs a two-variable space".into()));
        }
        let (na, nb) = (space.vars[0].size(), space.vars[1].size());
        if forward.matrix().shape() != (na, nb) || reverse.matrix().shape() != (nb, na) {
            return Err(Error::DimensionMismatch(format!(
                "space is {na}x{nb}, joints are {:?} and {:?}",
                forward.matrix().shape(),
                reverse.matrix().shape()
            )));
        }
        Ok(Self::from_fn(space, |s, q| {
            let a = q.outcome_of(0).unwrap();
            let b = q.outcome_of(1).unwrap();
            if s.perm() == [1, 0] {
                forward.matrix()[(a, b)]
            } else {
                reverse.matrix()[(b, a)]
            }
        }))
    }

    pub fn set(&mut self, s: Ordering, q: Sequence, value: f64) {
        self.values.insert((s, q), value);
    }

    pub fn get(&self, s: &Ordering, q: &Sequence) -> Option<f64> {
        self.values.get(&(s.clone(), q.clone())).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ordering, &Sequence, f64)> {
        self.values.iter().map(|((s, q), v)| (s, q, *v))
    }

    /// Multiplies every value of ordering `s` by `factor`.
    pub fn scale_ordering(&mut self, s: &Ordering, factor: f64) {
        for ((o, _), v) in self.values.iter_mut() {
            if o == s {
                *v *= factor;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    /// Every full sequence of every ordering carries a finite real value.
    Defined,
    /// `P(E_s) = 1` for each ordering.
    Normalization,
    /// Disjoint partial sequences add under the join.
    Additivity,
    /// Marginals agree across orderings.
    Causality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub ordering: String,
    pub sequences: Vec<String>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub checked: usize,
    pub violations: usize,
    /// Largest residual seen, violating or not.
    pub worst: f64,
    /// At most [`MAX_REPORTED`] violating instances.
    pub instances: Vec<Violation>,
}

impl AxiomCheck {
    fn new(axiom: Axiom) -> Self {
        AxiomCheck {
            axiom,
            checked: 0,
            violations: 0,
            worst: 0.0,
            instances: Vec::new(),
        }
    }

    fn record(&mut self, residual: f64, tol: f64, describe: impl FnOnce() -> Violation) {
        self.checked += 1;
        let r = if residual.is_nan() { f64::INFINITY } else { residual };
        self.worst = self.worst.max(r);
        if r > tol {
            self.violations += 1;
            if self.instances.len() < MAX_REPORTED {
                self.instances.push(describe());
            }
        }
    }

    fn merge(&mut self, other: AxiomCheck) {
        self.checked += other.checked;
        self.violations += other.violations;
        self.worst = self.worst.max(other.worst);
        let room = MAX_REPORTED - self.instances.len().min(MAX_REPORTED);
        self.instances.extend(other.instances.into_iter().take(room));
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub tol: f64,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(AxiomCheck::passed)
    }

    pub fn check(&self, axiom: Axiom) -> &AxiomCheck {
        self.checks.iter().find(|c| c.axiom == axiom).expect("every axiom is checked")
    }
}

/// Verifies every axiom on `p`. Negative values are never a failure by
/// themselves.
pub fn check_axioms(space: &SequenceSpace, p: &ProbabilityAssignment, tol: f64) -> AxiomReport {
    let orderings = space.orderings();

    let mut defined = AxiomCheck::new(Axiom::Defined);
    let mut expected: BTreeSet<(Ordering, Sequence)> = BTreeSet::new();
    for s in &orderings {
        for q in space.enumerate_full(s).expect("ordering from the space") {
            let v = p.get(s, &q);
            let residual = match v {
                Some(x) if x.is_finite() => 0.0,
                _ => f64::INFINITY,
            };
            defined.record(residual, tol, || Violation {
                ordering: space.format_ordering(s),
                sequences: vec![space.format_sequence(&q)],
                magnitude: f64::INFINITY,
            });
            expected.insert((s.clone(), q));
        }
    }
    for (s, q, _) in p.iter() {
        if !expected.contains(&(s.clone(), q.clone())) {
            defined.record(f64::INFINITY, tol, || Violation {
                ordering: space.format_ordering(s),
                sequences: vec![format!("unexpected key {}", space.format_sequence(q))],
                magnitude: f64::INFINITY,
            });
        }
    }

    let per_ordering: Vec<OrderingChecks> = orderings
        .par_iter()
        .map(|s| check_ordering(space, p, s, tol))
        .collect();

    let mut normalization = AxiomCheck::new(Axiom::Normalization);
    let mut additivity = AxiomCheck::new(Axiom::Additivity);
    let mut by_sequence: HashMap<Sequence, Vec<(usize, f64)>> = HashMap::new();
    for (k, (norm, add, marg)) in per_ordering.into_iter().enumerate() {
        normalization.merge(norm);
        additivity.merge(add);
        for (q, v) in marg {
            by_sequence.entry(q).or_default().push((k, v));
        }
    }

    let mut causality = AxiomCheck::new(Axiom::Causality);
    let mut shared: Vec<(Sequence, Vec<(usize, f64)>)> =
        by_sequence.into_iter().filter(|(_, v)| v.len() > 1).collect();
    shared.sort_by(|a, b| a.0.cmp(&b.0));
    for (q, values) in shared {
        let (k0, v0) = values[0];
        for &(k, v) in &values[1..] {
            causality.record((v - v0).abs(), tol, || Violation {
                ordering: format!(
                    "{} vs {}",
                    space.format_ordering(&orderings[k0]),
                    space.format_ordering(&orderings[k])
                ),
                sequences: vec![space.format_sequence(&q)],
                magnitude: (v - v0).abs(),
            });
        }
    }

    AxiomReport {
        tol,
        checks: vec![defined, normalization, additivity, causality],
    }
}

/// Normalization and additivity for one ordering, plus the marginal of every
/// partial sequence for the causality pass.
/// Normalization and additivity checks for one ordering, plus the marginal of
/// every partial sequence for the causality comparison.
type OrderingChecks = (AxiomCheck, AxiomCheck, Vec<(Sequence, f64)>);

fn check_ordering(
    space: &SequenceSpace,
    p: &ProbabilityAssignment,
    s: &Ordering,
    tol: f64,
) -> OrderingChecks {
    let full = space.enumerate_full(s).expect("ordering from the space");
    let values: Vec<f64> = full.iter().map(|q| p.get(s, q).unwrap_or(0.0)).collect();
    let words = full.len().div_ceil(64);
    let partial = space.enumerate_partial(s).expect("ordering from the space");

    // R_s(q) as a bitset over E_s, and its marginal
    let sets: Vec<(Vec<u64>, f64)> = partial
        .iter()
        .map(|q| {
            let mut bits = vec![0u64; words];
            let mut sum = 0.0;
            for (idx, f) in full.iter().enumerate() {
                if q.contained_in(f, s) {
                    debug_assert_eq!(space.full_index(f, s), idx);
                    bits[idx / 64] |= 1 << (idx % 64);
                    sum += values[idx];
                }
            }
            (bits, sum)
        })
        .collect();

    let mut normalization = AxiomCheck::new(Axiom::Normalization);
    let total: f64 = values.iter().sum();
    normalization.record((total - 1.0).abs(), tol, || Violation {
        ordering: space.format_ordering(s),
        sequences: vec!["E_s".into()],
        magnitude: (total - 1.0).abs(),
    });

    let mut additivity = AxiomCheck::new(Axiom::Additivity);
    for i in 0..partial.len() {
        for j in (i + 1)..partial.len() {
            let (bi, mi) = &sets[i];
            let (bj, mj) = &sets[j];
            if bi.iter().zip(bj).any(|(x, y)| x & y != 0) {
                continue;
            }
            let mut union = 0.0;
            for (w, (x, y)) in bi.iter().zip(bj).enumerate() {
                let mut word = x | y;
                while word != 0 {
                    let b = word.trailing_zeros() as usize;
                    union += values[w * 64 + b];
                    word &= word - 1;
                }
            }
            let residual = (union - (mi + mj)).abs();
            additivity.record(residual, tol, || Violation {
                ordering: space.format_ordering(s),
                sequences: vec![space.format_sequence(&partial[i]), space.format_sequence(&partial[j])],
                magnitude: residual,
            });
        }
    }

    let marginals = partial.into_iter().zip(sets.into_iter().map(|(_, m)| m)).collect();
    (normalization, additivity, marginals)
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:?}: {} ({} checked, {} violations, worst residual {:e})",
                c.axiom,
                if c.passed() { "pass" } else { "FAIL" },
                c.checked,
                c.violations,
                c.worst
            )?;
        }
        Ok(())
    }
}
