//! Monte Carlo experiment harness.
//!
//! An experiment is a TOML file naming a code family, a grid of sizes and
//! error rates, a decoder and a trial count; it produces one CSV row per grid
//! point. Every trial draws its error and its decoder randomness from separate
//! ChaCha streams keyed by `(seed, point, trial)`, so output does not depend on
//! the thread schedule and two decoders run on the same grid see the same
//! errors.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{gen_repetition, gen_surface, gen_surface_depolarizing, gen_toric, load_check_matrices};
use crate::codes::{sample_errors, sample_pauli};
use crate::correlated::{iterative_parse, CorrelatedConfig, CorrelatedProblem};
use crate::decoder::{decode_with_rng, DecodeConfig};
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};
use crate::graph::{Chain, DecodingGraph, LogicalClass};
use crate::matching::mwpm_decode;
use crate::stats::{normal_quantile, wilson_interval};
use crate::worm::{symmetric_step, ReweightedGraph, Variant, WormState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeFamily {
    Repetition,
    /// Bit flips, perfect measurements.
    Surface,
    /// Bit flips and measurement errors over `d` rounds.
    SurfacePhenom,
    Toric,
    /// Depolarizing noise; decoders act on the bit-flip part.
    SurfaceDepolarizing,
    CheckMatrices,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Worm,
    Mwpm,
    CorrelatedWorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeFiles {
    pub label: String,
    pub error_file: PathBuf,
    pub logical_file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub code: CodeFamily,
    /// Distances (or lattice sizes); unused for `check_matrices`.
    #[serde(default)]
    pub distances: Vec<usize>,
    #[serde(default)]
    pub files: Vec<CodeFiles>,
    pub ps: Vec<f64>,
    /// Measurement error rate for `surface_phenom`; defaults to `p`.
    #[serde(default)]
    pub meas_p: Option<f64>,
    pub decoder: DecoderKind,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub thin: Option<usize>,
    #[serde(default)]
    pub step_cap: Option<u64>,
    /// Correlated decoder: marginal-estimation samples (defaults to `n_samples`).
    #[serde(default)]
    pub n_z: Option<usize>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_mwpm_cap")]
    pub mwpm_cap: usize,
    /// Fill the `wall_time` column; off by default so output is reproducible.
    #[serde(default)]
    pub timing: bool,
}

fn default_n_samples() -> usize {
    1000
}

fn default_rounds() -> usize {
    1
}

fn default_mwpm_cap() -> usize {
    32
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut spec = Self::from_toml(&std::fs::read_to_string(path)?)?;
        // Relative code files resolve against the config's directory.
        if let Some(dir) = path.parent() {
            for f in &mut spec.files {
                if f.error_file.is_relative() {
                    f.error_file = dir.join(&f.error_file);
                }
                if f.logical_file.is_relative() {
                    f.logical_file = dir.join(&f.logical_file);
                }
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.code == CodeFamily::CheckMatrices {
            if self.files.is_empty() {
                return Err(Error::InvalidParameter("check_matrices needs `files`".into()));
            }
        } else if self.distances.is_empty() {
            return Err(Error::InvalidParameter("`distances` is empty".into()));
        }
        if self.ps.is_empty() {
            return Err(Error::InvalidParameter("`ps` is empty".into()));
        }
        let correlated_code = self.code == CodeFamily::SurfaceDepolarizing;
        if (self.decoder == DecoderKind::CorrelatedWorm) && !correlated_code {
            return Err(Error::InvalidParameter(
                "correlated_worm requires code = surface_depolarizing".into(),
            ));
        }
        if self.n_samples == 0 || self.rounds == 0 {
            return Err(Error::InvalidParameter("n_samples and rounds must be positive".into()));
        }
        Ok(())
    }

    /// Grid points in output order: sizes outer, error rates inner.
    pub fn points(&self) -> Vec<Point> {
        let sizes: Vec<String> = if self.code == CodeFamily::CheckMatrices {
            self.files.iter().map(|f| f.label.clone()).collect()
        } else {
            self.distances.iter().map(|d| d.to_string()).collect()
        };
        let mut out = Vec::new();
        for (si, size) in sizes.iter().enumerate() {
            for &p in &self.ps {
                out.push(Point {
                    index: out.len() as u64,
                    size_index: si,
                    size: size.clone(),
                    p,
                });
            }
        }
        out
    }

    pub fn decode_config(&self) -> DecodeConfig {
        DecodeConfig {
            n_samples: self.n_samples,
            burn_in: self.burn_in,
            thin: self.thin,
            variant: self.variant,
            step_cap: self.step_cap,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: u64,
    pub size_index: usize,
    pub size: String,
    pub p: f64,
}

/// Code instance for one grid point.
#[derive(Debug, Clone)]
pub enum Instance {
    Plain {
        model: DetectorErrorModel,
        graph: DecodingGraph,
    },
    Depolarizing(Box<CorrelatedProblem>),
}

pub fn build_instance(spec: &ExperimentSpec, point: &Point) -> Result<Instance> {
    let p = point.p;
    let model = match spec.code {
        CodeFamily::SurfaceDepolarizing => {
            let d = spec.distances[point.size_index];
            return Ok(Instance::Depolarizing(Box::new(gen_surface_depolarizing(d, p)?)));
        }
        CodeFamily::Repetition => gen_repetition(spec.distances[point.size_index], p)?,
        CodeFamily::Surface => gen_surface(spec.distances[point.size_index], p, None)?,
        CodeFamily::SurfacePhenom => gen_surface(spec.distances[point.size_index], p, Some(spec.meas_p.unwrap_or(p)))?,
        CodeFamily::Toric => gen_toric(spec.distances[point.size_index], p)?,
        CodeFamily::CheckMatrices => {
            let f = &spec.files[point.size_index];
            load_check_matrices(&f.error_file, &f.logical_file, p)?
        }
    };
    let graph = DecodingGraph::from_dem(&model)?;
    Ok(Instance::Plain { model, graph })
}

/// Result of one decoding trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    /// Worm decoders only.
    pub p_succ: Option<f64>,
    pub steps: u64,
    /// The decoder gave up (worm step cap, matcher defect cap).
    pub timed_out: bool,
}

const ERROR_STREAM: u64 = 0;
const DECODER_STREAM: u64 = 1;

/// RNG for `(seed, point, trial, purpose)`.
pub fn trial_rng(seed: u64, point: u64, trial: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ point.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream((trial << 1) | purpose);
    rng
}

fn class_of(bits: &[bool]) -> LogicalClass {
    LogicalClass(crate::bits::BitSet::from_indices(
        bits.len(),
        bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i),
    ))
}

fn chain_of(bits: &[bool]) -> Chain {
    Chain::from_edges(bits.len(), bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i))
}

/// Runs one trial of `decoder` on `instance`.
pub fn run_trial(
    spec: &ExperimentSpec,
    decoder: DecoderKind,
    instance: &Instance,
    point: &Point,
    trial: u64,
) -> Result<TrialOutcome> {
    let mut err_rng = trial_rng(spec.seed, point.index, trial, ERROR_STREAM);
    let mut dec_rng = trial_rng(spec.seed, point.index, trial, DECODER_STREAM);
    let dcfg = spec.decode_config();
    let (graph, syndrome, truth, corr) = match instance {
        Instance::Plain { model, graph } => {
            let fired = sample_errors(model, &mut err_rng);
            let (s, _) = model.apply(&fired);
            (graph, s, graph.measure_logical(&chain_of(&fired)), None)
        }
        Instance::Depolarizing(prob) => {
            let (x, z) = sample_pauli(prob.model_x.num_mechanisms(), prob.p, &mut err_rng);
            let (sx, lx) = prob.model_x.apply(&x);
            let (sz, _) = prob.model_z.apply(&z);
            (&prob.g_x, sx, class_of(&lx), Some((prob, sz)))
        }
    };
    let timeout = TrialOutcome {
        success: false,
        p_succ: None,
        steps: 0,
        timed_out: true,
    };
    match decoder {
        DecoderKind::Mwpm => {
            let defects = graph.syndrome_defects(&syndrome)?;
            match mwpm_decode(graph, &defects, spec.mwpm_cap) {
                Ok(c) => Ok(TrialOutcome {
                    success: graph.measure_logical(&c) == truth,
                    p_succ: None,
                    steps: 0,
                    timed_out: false,
                }),
                Err(Error::TooManyDefects { .. }) => Ok(timeout),
                Err(e) => Err(e),
            }
        }
        DecoderKind::Worm | DecoderKind::CorrelatedWorm => {
            let r = match (decoder, corr) {
                (DecoderKind::CorrelatedWorm, Some((prob, sz))) => {
                    let ccfg = CorrelatedConfig {
                        n_z: spec.n_z.unwrap_or(spec.n_samples),
                        n_x: spec.n_samples,
                        base: dcfg,
                        seed: dec_rng.random(),
                        swap: false,
                    };
                    iterative_parse(prob, &syndrome, &sz, spec.rounds, &ccfg)
                }
                _ => decode_with_rng(graph, &syndrome, &dcfg, &mut dec_rng),
            };
            match r {
                Ok(r) => Ok(TrialOutcome {
                    success: r.class == truth,
                    p_succ: Some(r.p_succ_estimate),
                    steps: r.steps,
                    timed_out: false,
                }),
                Err(Error::Timeout(steps)) => Ok(TrialOutcome { steps, ..timeout }),
                Err(e) => Err(e),
            }
        }
    }
}

/// All trials of one grid point, in trial order.
pub fn run_point_trials(spec: &ExperimentSpec, decoder: DecoderKind, point: &Point) -> Result<Vec<TrialOutcome>> {
    let instance = build_instance(spec, point)?;
    (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(spec, decoder, &instance, point, t))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub code: String,
    pub d: String,
    pub p: f64,
    pub decoder: String,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    /// 95% Wilson interval on the failure rate.
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_p_succ_estimate: Option<f64>,
    pub mean_steps: f64,
    pub timeouts: usize,
    pub wall_time: Option<f64>,
}

pub fn summarize(spec: &ExperimentSpec, point: &Point, outcomes: &[TrialOutcome], wall: Option<f64>) -> Row {
    let n = outcomes.len();
    let failures = outcomes.iter().filter(|o| !o.success).count();
    let (lo, hi) = wilson_interval(failures, n, normal_quantile(0.05));
    let ps: Vec<f64> = outcomes.iter().filter_map(|o| o.p_succ).collect();
    let mean_p_succ = (!ps.is_empty()).then(|| ps.iter().sum::<f64>() / ps.len() as f64);
    let code = serde_json::to_value(spec.code)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let decoder = serde_json::to_value(spec.decoder)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    Row {
        code,
        d: point.size.clone(),
        p: point.p,
        decoder,
        trials: n,
        failures,
        failure_rate: if n == 0 { 0.0 } else { failures as f64 / n as f64 },
        ci_low: lo,
        ci_high: hi,
        mean_p_succ_estimate: mean_p_succ,
        mean_steps: if n == 0 {
            0.0
        } else {
            outcomes.iter().map(|o| o.steps as f64).sum::<f64>() / n as f64
        },
        timeouts: outcomes.iter().filter(|o| o.timed_out).count(),
        wall_time: wall,
    }
}

/// Runs every grid point; `trials = 0` yields no rows.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    spec.validate()?;
    if spec.trials == 0 {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for point in spec.points() {
        let start = Instant::now();
        let outcomes = run_point_trials(spec, spec.decoder, &point)?;
        let wall = spec.timing.then(|| start.elapsed().as_secs_f64());
        rows.push(summarize(spec, &point, &outcomes, wall));
    }
    Ok(rows)
}

pub fn write_csv<W: std::io::Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "code",
            "d",
            "p",
            "decoder",
            "trials",
            "failures",
            "failure_rate",
            "ci_low",
            "ci_high",
            "mean_p_succ_estimate",
            "mean_steps",
            "timeouts",
            "wall_time",
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// `χ̂₂ = (|V|/2)·T(C₂)/T(C₀)` over `steps` lazy symmetric steps from `∅`.
pub fn estimate_chi2_empirical<R: Rng + ?Sized>(rg: &ReweightedGraph<'_>, steps: u64, rng: &mut R) -> Result<f64> {
    let mut st = WormState::closed(rg.graph().empty_chain());
    let mut t0 = 0u64;
    let mut t2 = 0u64;
    for _ in 0..steps {
        symmetric_step(rg, &mut st, rng, true);
        if st.is_closed() {
            t0 += 1;
        } else {
            t2 += 1;
        }
    }
    if t0 == 0 {
        return Err(Error::InvalidParameter("chain never visited a cycle state".into()));
    }
    Ok(rg.num_vertices() as f64 / 2.0 * t2 as f64 / t0 as f64)
}

/// Relaxation-time bound `8Δ/w·|E|·[(1+χ₂)(2+|V|) + 2χ₄]`.
pub fn relaxation_bound(delta_max: f64, w: f64, n_e: f64, n_v: f64, chi2: f64, chi4: f64) -> Result<f64> {
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::InvalidParameter(format!("w = {w} not in (0,1)")));
    }
    if [delta_max, n_e, n_v, chi2, chi4].iter().any(|&x| x.is_nan() || x < 0.0) {
        return Err(Error::InvalidParameter("inputs must be nonnegative".into()));
    }
    Ok(8.0 * delta_max / w * n_e * ((1.0 + chi2) * (2.0 + n_v) + 2.0 * chi4))
}

/// First crossing of two curves sampled on the same grid, by linear
/// interpolation of their difference.
pub fn crossing(ps: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    for i in 1..ps.len() {
        let (d0, d1) = (diff[i - 1], diff[i]);
        if d0 == 0.0 {
            return Some(ps[i - 1]);
        }
        if d0.signum() != d1.signum() {
            return Some(ps[i - 1] + (ps[i] - ps[i - 1]) * d0 / (d0 - d1));
        }
    }
    None
}

/// Root of the least-squares line through `a - b` against `p`.
pub fn fit_crossing(ps: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let n = ps.len() as f64;
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mx = ps.iter().sum::<f64>() / n;
    let my = diff.iter().sum::<f64>() / n;
    let sxx: f64 = ps.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = ps.iter().zip(&diff).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 || sxy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(mx - my / slope)
}
