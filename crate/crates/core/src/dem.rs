//! Detector error models: the detector matrix, per-mechanism probabilities and
//! the logical map, stored column-wise (one entry per error mechanism).
//!
//! Text format, one directive per line:
//!
//! ```text
//! # comment
//! detectors 2
//! logicals 1
//! error(0.1) D0 L0
//! error(0.1) D0 D1
//! ```
//!
//! `detectors`/`logicals` headers are optional; counts are otherwise inferred
//! as one more than the largest index seen.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorErrorModel {
    pub num_detectors: usize,
    pub num_logicals: usize,
    /// Detector indices triggered by each mechanism.
    pub columns: Vec<Vec<usize>>,
    pub probs: Vec<f64>,
    /// Logical indices flipped by each mechanism.
    pub logical_columns: Vec<Vec<usize>>,
}

impl DetectorErrorModel {
    /// Builds and validates a model from its parts.
    pub fn new(
        num_detectors: usize,
        num_logicals: usize,
        columns: Vec<Vec<usize>>,
        probs: Vec<f64>,
        logical_columns: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let model = Self {
            num_detectors,
            num_logicals,
            columns,
            probs,
            logical_columns,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn num_mechanisms(&self) -> usize {
        self.columns.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.columns.len();
        if self.probs.len() != n || self.logical_columns.len() != n {
            return Err(Error::InvalidParameter(format!(
                "column count mismatch: {} detector columns, {} probabilities, {} logical columns",
                n,
                self.probs.len(),
                self.logical_columns.len()
            )));
        }
        for j in 0..n {
            let p = self.probs[j];
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Probability { line: j + 1, value: p });
            }
            check_column(&self.columns[j], self.num_detectors, 'D', j)?;
            check_column(&self.logical_columns[j], self.num_logicals, 'L', j)?;
        }
        Ok(())
    }

    /// Mechanisms whose detector support is larger than two.
    pub fn non_matchable_columns(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.len() > 2)
            .map(|(j, _)| j)
            .collect()
    }

    /// `(true, [])` iff every column triggers one or two detectors.
    ///
    /// Empty columns do not make a model non-matchable; graph construction
    /// rejects them separately.
    pub fn is_matchable(&self) -> (bool, Vec<usize>) {
        let bad = self.non_matchable_columns();
        (bad.is_empty(), bad)
    }

    /// Syndrome `H·x` and logical flips `L·x` of the mechanisms set in `fired`.
    pub fn apply(&self, fired: &[bool]) -> (Vec<bool>, Vec<bool>) {
        let mut s = vec![false; self.num_detectors];
        let mut l = vec![false; self.num_logicals];
        for (j, _) in fired.iter().enumerate().filter(|(_, &f)| f) {
            for &d in &self.columns[j] {
                s[d] ^= true;
            }
            for &k in &self.logical_columns[j] {
                l[k] ^= true;
            }
        }
        (s, l)
    }

    /// Returns a copy with every probability replaced by `p`.
    pub fn with_uniform_prob(&self, p: f64) -> Result<Self> {
        let mut out = self.clone();
        out.probs = vec![p; self.num_mechanisms()];
        out.validate()?;
        Ok(out)
    }

    /// Serializes to the text format; `parse_dem(to_text())` reproduces the model.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "detectors {}", self.num_detectors);
        let _ = writeln!(out, "logicals {}", self.num_logicals);
        for j in 0..self.num_mechanisms() {
            let _ = write!(out, "error({})", self.probs[j]);
            for d in &self.columns[j] {
                let _ = write!(out, " D{d}");
            }
            for l in &self.logical_columns[j] {
                let _ = write!(out, " L{l}");
            }
            out.push('\n');
        }
        out
    }
}

fn check_column(col: &[usize], bound: usize, tag: char, mechanism: usize) -> Result<()> {
    let mut seen = HashSet::new();
    for &i in col {
        if i >= bound {
            return Err(Error::InvalidParameter(format!(
                "mechanism {mechanism}: index {tag}{i} out of range ({bound})"
            )));
        }
        if !seen.insert(i) {
            return Err(Error::DuplicateTarget {
                line: mechanism + 1,
                target: format!("{tag}{i}"),
            });
        }
    }
    Ok(())
}

/// Parses the text format described in the module docs.
pub fn parse_dem(text: &str) -> Result<DetectorErrorModel> {
    let mut declared_detectors: Option<usize> = None;
    let mut declared_logicals: Option<usize> = None;
    let mut columns = Vec::new();
    let mut logical_columns = Vec::new();
    let mut probs = Vec::new();
    let mut max_det: Option<usize> = None;
    let mut max_log: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |msg: &str| Error::Syntax {
            line: line_no,
            msg: msg.to_string(),
        };
        let head = line.split_whitespace().next().unwrap_or("");

        if let Some(rest) = line.strip_prefix("error(") {
            let close = rest.find(')').ok_or_else(|| syntax("missing `)`"))?;
            let value: f64 = rest[..close].trim().parse().map_err(|_| syntax("bad probability"))?;
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::Probability { line: line_no, value });
            }
            let mut dets = Vec::new();
            let mut logs = Vec::new();
            let mut seen = HashSet::new();
            for tok in rest[close + 1..].split_whitespace() {
                let (target, list, max) = match tok.as_bytes().first() {
                    Some(b'D') => (&tok[1..], &mut dets, &mut max_det),
                    Some(b'L') => (&tok[1..], &mut logs, &mut max_log),
                    _ => return Err(syntax(&format!("bad target `{tok}`"))),
                };
                let index: usize = target.parse().map_err(|_| syntax(&format!("bad target `{tok}`")))?;
                if !seen.insert(tok) {
                    return Err(Error::DuplicateTarget {
                        line: line_no,
                        target: tok.to_string(),
                    });
                }
                list.push(index);
                *max = Some(max.map_or(index, |m: usize| m.max(index)));
            }
            columns.push(dets);
            logical_columns.push(logs);
            probs.push(value);
            continue;
        }

        match head {
            "detectors" | "logicals" => {
                let mut toks = line.split_whitespace().skip(1);
                let count: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| syntax("expected a count"))?;
                if toks.next().is_some() {
                    return Err(syntax("trailing tokens"));
                }
                if head == "detectors" {
                    declared_detectors = Some(count);
                } else {
                    declared_logicals = Some(count);
                }
            }
            h if h.starts_with("detector")
                || h.starts_with("logical_observable")
                || h.starts_with("shift_detectors")
                || h.starts_with("repeat")
                || h == "}" =>
            {
                return Err(Error::Unsupported {
                    line: line_no,
                    directive: h.split('(').next().unwrap_or(h).to_string(),
                });
            }
            _ => return Err(syntax(&format!("unknown directive `{head}`"))),
        }
    }

    let inferred_d = max_det.map_or(0, |m| m + 1);
    let inferred_l = max_log.map_or(0, |m| m + 1);
    let num_detectors = match declared_detectors {
        Some(d) if d < inferred_d => {
            return Err(Error::InvalidParameter(format!(
                "declared {d} detectors but D{} is used",
                inferred_d - 1
            )))
        }
        Some(d) => d,
        None => inferred_d,
    };
    let num_logicals = match declared_logicals {
        Some(k) if k < inferred_l => {
            return Err(Error::InvalidParameter(format!(
                "declared {k} logicals but L{} is used",
                inferred_l - 1
            )))
        }
        Some(k) => k,
        None => inferred_l,
    };
    DetectorErrorModel::new(num_detectors, num_logicals, columns, probs, logical_columns)
}
