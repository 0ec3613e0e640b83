//! File formats for matrices, vectors and sequence assignments.
//!
//! Matrices and vectors are JSON objects
//! `{"rows": [...], "cols": [...], "data": [[...], ...], "ordering": "B,A"}`
//! with `data` row-major and `ordering` present for joints only, naming the
//! column variable first (it precedes the row variable). The CSV
//! alternative has a header row of column labels (first cell ignored) and
//! the row label in the first column of every data row.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::{JointDist, QuasiStochasticMatrix, QuasiVector, Tolerances};
use crate::error::{Error, Result};
use crate::seqprob::{Ordering, ProbabilityAssignment, Sequence, SequenceSpace, VariableSpec};

/// Shortest text that parses back to exactly `x`. Plain decimal for
/// moderate magnitudes, exponent form otherwise.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub data: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<String>,
}

impl MatrixFile {
    pub fn from_matrix(rows: &[String], cols: &[String], m: &DMatrix<f64>, ordering: Option<String>) -> Self {
        MatrixFile {
            rows: rows.to_vec(),
            cols: cols.to_vec(),
            data: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
            ordering,
        }
    }

    pub fn from_joint(j: &JointDist) -> Self {
        Self::from_matrix(j.row_labels(), j.col_labels(), j.matrix(), Some(j.ordering_tag()))
    }

    pub fn from_quasi_matrix(m: &QuasiStochasticMatrix) -> Self {
        Self::from_matrix(m.row_labels(), m.col_labels(), m.matrix(), None)
    }

    /// A column vector with the single column label `p`.
    pub fn from_vector(v: &QuasiVector) -> Self {
        MatrixFile {
            rows: v.labels().to_vec(),
            cols: vec!["p".into()],
            data: v.as_slice().iter().map(|&x| vec![x]).collect(),
            ordering: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.data.len() != self.rows.len() {
            return Err(Error::Parse(format!(
                "field `data`: {} rows, but `rows` has {} labels",
                self.data.len(),
                self.rows.len()
            )));
        }
        for (i, r) in self.data.iter().enumerate() {
            if r.len() != self.cols.len() {
                return Err(Error::Parse(format!(
                    "field `data`: row {i} has {} entries, but `cols` has {} labels",
                    r.len(),
                    self.cols.len()
                )));
            }
        }
        if self.rows.is_empty() || self.cols.is_empty() {
            return Err(Error::Parse("matrix has no entries".into()));
        }
        Ok(())
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.cols.len(), |i, j| self.data[i][j])
    }

    /// Multiplies every entry by `1 / total`.
    pub fn normalized(mut self) -> Self {
        let total: f64 = self.data.iter().flatten().sum();
        for x in self.data.iter_mut().flatten() {
            *x /= total;
        }
        self
    }

    /// Normalizes each column to sum to one.
    pub fn column_normalized(mut self) -> Self {
        for j in 0..self.cols.len() {
            let s: f64 = self.data.iter().map(|r| r[j]).sum();
            for r in self.data.iter_mut() {
                r[j] /= s;
            }
        }
        self
    }

    /// Joint with its ordering tag; defaults to `B,A` (variables `A` on rows,
    /// `B` on columns).
    pub fn to_joint(&self, tol: &Tolerances) -> Result<JointDist> {
        let (col_var, row_var) = match &self.ordering {
            None => ("B".to_string(), "A".to_string()),
            Some(tag) => {
                let parts: Vec<&str> = tag.split(',').map(str::trim).collect();
                match parts.as_slice() {
                    [c, r] if !c.is_empty() && !r.is_empty() => (c.to_string(), r.to_string()),
                    _ => {
                        return Err(Error::Parse(format!(
                            "field `ordering`: expected `<first>,<second>`, got `{tag}`"
                        )))
                    }
                }
            }
        };
        JointDist::with_labels(&row_var, &col_var, self.rows.clone(), self.cols.clone(), self.matrix(), tol)
    }

    /// Same as [`to_joint`](Self::to_joint) without the normalization check.
    pub fn to_joint_unchecked(&self) -> Result<JointDist> {
        let loose = Tolerances::new(f64::MAX, 1.0, 1.0).expect("positive");
        self.to_joint(&loose)
    }

    pub fn to_quasi_matrix(&self, tol: &Tolerances) -> Result<QuasiStochasticMatrix> {
        QuasiStochasticMatrix::with_labels(self.rows.clone(), self.cols.clone(), self.matrix(), tol)
    }

    /// Reads an `n x 1` or `1 x n` matrix as a vector.
    pub fn to_vector(&self, tol: &Tolerances) -> Result<QuasiVector> {
        let (labels, entries): (Vec<String>, Vec<f64>) = if self.cols.len() == 1 {
            (self.rows.clone(), self.data.iter().map(|r| r[0]).collect())
        } else if self.rows.len() == 1 {
            (self.cols.clone(), self.data[0].clone())
        } else {
            return Err(Error::Parse(format!(
                "expected a vector, got a {}x{} matrix",
                self.rows.len(),
                self.cols.len()
            )));
        };
        QuasiVector::with_labels(labels, entries, tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.cols.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (label, row) in self.rows.iter().zip(&self.data) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|&x| format_float(x)));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

pub fn parse_matrix_json(text: &str) -> Result<MatrixFile> {
    let m: MatrixFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    m.validate()?;
    Ok(m)
}

pub fn parse_matrix_csv(text: &str) -> Result<MatrixFile> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    let cols: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut it = rec.iter();
        rows.push(it.next().unwrap_or_default().to_string());
        let row = it
            .enumerate()
            .map(|(k, f)| {
                f.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {line}, field {}: `{f}` is not a number", k + 2))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        data.push(row);
    }
    let m = MatrixFile {
        rows,
        cols,
        data,
        ordering: None,
    };
    m.validate()?;
    Ok(m)
}

/// Reads a matrix file; `.csv` selects CSV, anything else JSON.
pub fn load_matrix(path: &Path) -> Result<MatrixFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        parse_matrix_csv(&text)
    } else {
        parse_matrix_json(&text)
    };
    parsed.map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableEntry {
    pub name: String,
    pub alphabet: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceValue {
    /// Outcome labels in the order of the enclosing ordering.
    pub sequence: Vec<String>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingEntry {
    /// Variable names, earliest first.
    pub ordering: Vec<String>,
    pub values: Vec<SequenceValue>,
}

/// Multi-ordering assignment file consumed by the axiom checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentFile {
    pub variables: Vec<VariableEntry>,
    pub assignments: Vec<OrderingEntry>,
}

impl AssignmentFile {
    pub fn from_assignment(space: &SequenceSpace, p: &ProbabilityAssignment) -> Self {
        let variables = space
            .vars()
            .iter()
            .map(|v| VariableEntry {
                name: v.name().to_string(),
                alphabet: v.alphabet().to_vec(),
            })
            .collect();
        let mut assignments: Vec<OrderingEntry> = Vec::new();
        for (s, q, v) in p.iter() {
            let names: Vec<String> = s.perm().iter().map(|&k| space.vars()[k].name().to_string()).collect();
            let seq: Vec<String> = q
                .items()
                .iter()
                .map(|i| space.vars()[i.var].alphabet()[i.outcome].clone())
                .collect();
            match assignments.last_mut() {
                Some(last) if last.ordering == names => last.values.push(SequenceValue { sequence: seq, p: v }),
                _ => assignments.push(OrderingEntry {
                    ordering: names,
                    values: vec![SequenceValue { sequence: seq, p: v }],
                }),
            }
        }
        AssignmentFile {
            variables,
            assignments,
        }
    }

    pub fn to_space(&self) -> Result<(SequenceSpace, ProbabilityAssignment)> {
        let vars = self
            .variables
            .iter()
            .map(|v| VariableSpec::new(v.name.clone(), v.alphabet.clone()))
            .collect::<Result<Vec<_>>>()?;
        let space = SequenceSpace::new(vars)?;
        let mut p = ProbabilityAssignment::new();
        for (k, entry) in self.assignments.iter().enumerate() {
            let names: Vec<&str> = entry.ordering.iter().map(String::as_str).collect();
            let s: Ordering = space
                .ordering(&names)
                .map_err(|e| Error::Parse(format!("assignments[{k}].ordering: {e}")))?;
            for (m, sv) in entry.values.iter().enumerate() {
                if sv.sequence.len() != names.len() {
                    return Err(Error::Parse(format!(
                        "assignments[{k}].values[{m}]: sequence has {} outcomes, ordering has {}",
                        sv.sequence.len(),
                        names.len()
                    )));
                }
                let pairs: Vec<(&str, &str)> =
                    names.iter().copied().zip(sv.sequence.iter().map(String::as_str)).collect();
                let q: Sequence = space
                    .sequence(&pairs)
                    .map_err(|e| Error::Parse(format!("assignments[{k}].values[{m}]: {e}")))?;
                p.set(s.clone(), q, sv.p);
            }
        }
        Ok((space, p))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

pub fn parse_assignment_json(text: &str) -> Result<AssignmentFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Helper for vectors held as plain slices.
pub fn vector_file(labels: &[String], values: &DVector<f64>) -> MatrixFile {
    MatrixFile {
        rows: labels.to_vec(),
        cols: vec!["p".into()],
        data: values.iter().map(|&x| vec![x]).collect(),
        ordering: None,
    }
}
