//! Benchmark code families, noise samplers and check-matrix file IO.
//!
//! Rotated surface codes put data qubit `(r, c)` at index `r·d + c`. A check
//! with corner `(i, j)`, `i, j ∈ -1..d-1`, acts on the existing qubits among
//! `(i..=i+1) × (j..=j+1)`; it is Z-type when `i + j` is even. Two-body
//! Z-checks sit on the top and bottom edges, two-body X-checks on the left and
//! right, so bit-flip chains end on the left/right boundaries.

use std::path::Path;

use rand::Rng;

use crate::correlated::CorrelatedProblem;
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};
use crate::graph::DecodingGraph;

fn check_prob(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {p} not in (0,1)")))
    }
}

fn check_distance(d: usize) -> Result<()> {
    if d >= 3 && d % 2 == 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "distance {d} must be odd and at least 3"
        )))
    }
}

/// Bit-flip repetition code: qubit `j` triggers detectors `j-1` and `j`; the
/// logical is carried by qubit 0.
pub fn gen_repetition(d: usize, p: f64) -> Result<DetectorErrorModel> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("distance {d} must be at least 2")));
    }
    check_prob("p", p)?;
    let m = d - 1;
    let columns = (0..d)
        .map(|j| {
            let mut c = Vec::new();
            if j > 0 {
                c.push(j - 1);
            }
            if j < m {
                c.push(j);
            }
            c
        })
        .collect();
    let logical_columns = (0..d).map(|j| if j == 0 { vec![0] } else { vec![] }).collect();
    DetectorErrorModel::new(m, 1, columns, vec![p; d], logical_columns)
}

/// Check layout of the distance-`d` rotated surface code.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceLayout {
    pub d: usize,
    /// Z-type checks (detect bit flips), as qubit lists.
    pub z_checks: Vec<Vec<usize>>,
    /// X-type checks (detect phase flips).
    pub x_checks: Vec<Vec<usize>>,
    /// Corner `(i, j)` of each Z-check.
    pub z_corners: Vec<(isize, isize)>,
    pub x_corners: Vec<(isize, isize)>,
}

impl SurfaceLayout {
    pub fn new(d: usize) -> Result<Self> {
        check_distance(d)?;
        let di = d as isize;
        let mut out = SurfaceLayout {
            d,
            z_checks: Vec::new(),
            x_checks: Vec::new(),
            z_corners: Vec::new(),
            x_corners: Vec::new(),
        };
        for i in -1..di {
            for j in -1..di {
                let qubits: Vec<usize> = [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)]
                    .into_iter()
                    .filter(|&(r, c)| r >= 0 && r < di && c >= 0 && c < di)
                    .map(|(r, c)| (r * di + c) as usize)
                    .collect();
                let z_type = (i + j).rem_euclid(2) == 0;
                let top_bottom = i == -1 || i == di - 1;
                let left_right = j == -1 || j == di - 1;
                let keep = match qubits.len() {
                    4 => true,
                    2 => (z_type && top_bottom) || (!z_type && left_right),
                    _ => false,
                };
                if !keep {
                    continue;
                }
                if z_type {
                    out.z_checks.push(qubits);
                    out.z_corners.push((i, j));
                } else {
                    out.x_checks.push(qubits);
                    out.x_corners.push((i, j));
                }
            }
        }
        Ok(out)
    }

    pub fn num_qubits(&self) -> usize {
        self.d * self.d
    }

    /// Checks containing each qubit.
    fn incidence(checks: &[Vec<usize>], nq: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); nq];
        for (s, qs) in checks.iter().enumerate() {
            for &q in qs {
                out[q].push(s);
            }
        }
        out
    }

    /// Bit-flip model: Z-check detectors, logical on the column-0 qubits.
    pub fn bit_flip_model(&self, p: f64) -> Result<DetectorErrorModel> {
        let nq = self.num_qubits();
        let columns = Self::incidence(&self.z_checks, nq);
        let logical = (0..nq)
            .map(|q| if q % self.d == 0 { vec![0] } else { vec![] })
            .collect();
        DetectorErrorModel::new(self.z_checks.len(), 1, columns, vec![p; nq], logical)
    }

    /// Phase-flip model: X-check detectors, logical on the row-0 qubits.
    pub fn phase_flip_model(&self, p: f64) -> Result<DetectorErrorModel> {
        let nq = self.num_qubits();
        let columns = Self::incidence(&self.x_checks, nq);
        let logical = (0..nq).map(|q| if q < self.d { vec![0] } else { vec![] }).collect();
        DetectorErrorModel::new(self.x_checks.len(), 1, columns, vec![p; nq], logical)
    }
}

/// Rotated surface code under bit-flip noise.
///
/// With `meas_p` set, `d` noisy measurement rounds are followed by one perfect
/// round; detector `t·n_z + s` compares rounds `t` and `t-1` of check `s`. Data
/// mechanisms come first (round-major), then measurement mechanisms.
pub fn gen_surface(d: usize, p: f64, meas_p: Option<f64>) -> Result<DetectorErrorModel> {
    check_prob("p", p)?;
    let layout = SurfaceLayout::new(d)?;
    let Some(q) = meas_p else {
        return layout.bit_flip_model(p);
    };
    check_prob("meas_p", q)?;
    let nq = layout.num_qubits();
    let nz = layout.z_checks.len();
    let inc = SurfaceLayout::incidence(&layout.z_checks, nq);
    let mut columns = Vec::new();
    let mut probs = Vec::new();
    let mut logical = Vec::new();
    for t in 0..d {
        for (qb, checks) in inc.iter().enumerate() {
            columns.push(checks.iter().map(|&s| t * nz + s).collect());
            probs.push(p);
            logical.push(if qb % d == 0 { vec![0] } else { vec![] });
        }
    }
    for t in 0..d {
        for s in 0..nz {
            columns.push(vec![t * nz + s, (t + 1) * nz + s]);
            probs.push(q);
            logical.push(vec![]);
        }
    }
    DetectorErrorModel::new((d + 1) * nz, 1, columns, probs, logical)
}

/// Toric code on an `L × L` periodic lattice under bit-flip noise.
///
/// Horizontal edge `(r, c) → (r, c+1)` is mechanism `r·L + c`, vertical edge
/// `(r, c) → (r+1, c)` is `L² + r·L + c`; every vertex is a detector. Logical 0
/// is the column of horizontal edges at `c = 0`, logical 1 the row of vertical
/// edges at `r = 0`.
pub fn gen_toric(l: usize, p: f64) -> Result<DetectorErrorModel> {
    if l < 2 {
        return Err(Error::InvalidParameter(format!("lattice size {l} must be at least 2")));
    }
    check_prob("p", p)?;
    let vtx = |r: usize, c: usize| (r % l) * l + (c % l);
    let mut columns = Vec::with_capacity(2 * l * l);
    let mut logical = Vec::with_capacity(2 * l * l);
    for r in 0..l {
        for c in 0..l {
            columns.push(vec![vtx(r, c), vtx(r, c + 1)]);
            logical.push(if c == 0 { vec![0] } else { vec![] });
        }
    }
    for r in 0..l {
        for c in 0..l {
            columns.push(vec![vtx(r, c), vtx(r + 1, c)]);
            logical.push(if r == 0 { vec![1] } else { vec![] });
        }
    }
    DetectorErrorModel::new(l * l, 2, columns, vec![p; 2 * l * l], logical)
}

/// Depolarizing rotated surface code: bit- and phase-flip problems with prior
/// `2p/3` each, paired by data qubit.
pub fn gen_surface_depolarizing(d: usize, p: f64) -> Result<CorrelatedProblem> {
    if !(p > 0.0 && p < 0.75) {
        return Err(Error::InvalidParameter(format!("p = {p} not in (0, 0.75)")));
    }
    let layout = SurfaceLayout::new(d)?;
    let prior = 2.0 * p / 3.0;
    let model_x = layout.bit_flip_model(prior)?;
    let model_z = layout.phase_flip_model(prior)?;
    let nq = layout.num_qubits();
    CorrelatedProblem::new(model_z, model_x, (0..nq).map(Some).collect(), p)
}

/// Fires each mechanism independently with its probability.
pub fn sample_errors<R: Rng + ?Sized>(model: &DetectorErrorModel, rng: &mut R) -> Vec<bool> {
    model.probs.iter().map(|&p| rng.random::<f64>() < p).collect()
}

/// Single-qubit depolarizing errors as `(x part, z part)`; `Y` sets both.
pub fn sample_pauli<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> (Vec<bool>, Vec<bool>) {
    let mut x = vec![false; n];
    let mut z = vec![false; n];
    for q in 0..n {
        if rng.random::<f64>() < p {
            match rng.random_range(0..3) {
                0 => x[q] = true,
                1 => {
                    x[q] = true;
                    z[q] = true;
                }
                _ => z[q] = true,
            }
        }
    }
    (x, z)
}

fn parse_index_lines(text: &str, what: &str) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Syntax {
                    line: n + 1,
                    msg: format!("{what}: `{t}` is not a non-negative integer"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok(out)
}

/// Builds a model from check-matrix text: one line of detector indices per
/// mechanism, and one line of mechanism indices per logical. Blank lines and
/// `#` comments are ignored.
pub fn parse_check_matrices(error_text: &str, logical_text: &str, p: f64) -> Result<DetectorErrorModel> {
    check_prob("p", p)?;
    let columns = parse_index_lines(error_text, "error file")?;
    let logicals = parse_index_lines(logical_text, "logical file")?;
    let n = columns.len();
    let m = columns.iter().flatten().map(|&d| d + 1).max().unwrap_or(0);
    let mut logical_columns = vec![Vec::new(); n];
    for (i, row) in logicals.iter().enumerate() {
        for &j in row {
            if j >= n {
                return Err(Error::InvalidParameter(format!(
                    "logical {i} references mechanism {j}, but only {n} mechanisms exist"
                )));
            }
            logical_columns[j].push(i);
        }
    }
    DetectorErrorModel::new(m, logicals.len(), columns, vec![p; n], logical_columns)
}

pub fn load_check_matrices(
    error_file: impl AsRef<Path>,
    logical_file: impl AsRef<Path>,
    p: f64,
) -> Result<DetectorErrorModel> {
    let e = std::fs::read_to_string(error_file)?;
    let l = std::fs::read_to_string(logical_file)?;
    parse_check_matrices(&e, &l, p)
}

/// Inverse of [`parse_check_matrices`]: `(error text, logical text)`.
pub fn write_check_matrices(model: &DetectorErrorModel) -> (String, String) {
    let join = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
    let mut errors = String::new();
    for c in &model.columns {
        errors.push_str(&join(c));
        errors.push('\n');
    }
    let mut rows = vec![Vec::new(); model.num_logicals];
    for (j, ls) in model.logical_columns.iter().enumerate() {
        for &l in ls {
            rows[l].push(j);
        }
    }
    let mut logicals = String::new();
    for r in &rows {
        logicals.push_str(&join(r));
        logicals.push('\n');
    }
    (errors, logicals)
}

pub fn build_graph(model: &DetectorErrorModel) -> Result<DecodingGraph> {
    DecodingGraph::from_dem(model)
}
