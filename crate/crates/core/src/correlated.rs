//! Correlated decoding for depolarizing noise.
//!
//! A `Y` error flips the same qubit in both the bit-flip and phase-flip
//! problems. Edge marginals sampled on one problem condition the priors of the
//! other: with `α` the posterior probability of a phase flip on a qubit,
//! `P(x = 1) = α/2 + (1 - α)·q` where `q = (p/3)/(1 - 2p/3)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::{decode_with_rng, DecodeConfig, DecodeResult};
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};
use crate::graph::DecodingGraph;

#[derive(Debug, Clone)]
pub struct CorrelatedProblem {
    /// Phase-flip model and graph (detectors are X-type checks).
    pub model_z: DetectorErrorModel,
    pub g_z: DecodingGraph,
    /// Bit-flip model and graph (detectors are Z-type checks).
    pub model_x: DetectorErrorModel,
    pub g_x: DecodingGraph,
    /// Z-edge → X-edge on the same qubit.
    pub edge_map: Vec<Option<usize>>,
    pub p: f64,
}

impl CorrelatedProblem {
    pub fn new(
        model_z: DetectorErrorModel,
        model_x: DetectorErrorModel,
        edge_map: Vec<Option<usize>>,
        p: f64,
    ) -> Result<Self> {
        if !(p > 0.0 && p < 0.75) {
            return Err(Error::InvalidParameter(format!("p = {p} not in (0, 0.75)")));
        }
        let g_z = DecodingGraph::from_dem(&model_z)?;
        let g_x = DecodingGraph::from_dem(&model_x)?;
        if edge_map.len() != g_z.num_edges() {
            return Err(Error::InvalidParameter(format!(
                "edge map has {} entries for {} Z-edges",
                edge_map.len(),
                g_z.num_edges()
            )));
        }
        let mut seen = vec![false; g_x.num_edges()];
        for &x in edge_map.iter().flatten() {
            if x >= g_x.num_edges() || std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidParameter(format!(
                    "edge map target {x} is out of range or repeated"
                )));
            }
        }
        Ok(Self {
            model_z,
            g_z,
            model_x,
            g_x,
            edge_map,
            p,
        })
    }

    /// X-edge → Z-edge.
    pub fn inverse_map(&self) -> Vec<Option<usize>> {
        let mut inv = vec![None; self.g_x.num_edges()];
        for (z, &x) in self.edge_map.iter().enumerate() {
            if let Some(x) = x {
                inv[x] = Some(z);
            }
        }
        inv
    }
}

/// Posterior edge occupation `α_e` of one decoding problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalVector(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrelatedConfig {
    /// Samples for the marginal-estimation stages.
    pub n_z: usize,
    /// Samples for the final decode.
    pub n_x: usize,
    /// Sampler settings shared by every stage; `n_samples` is ignored.
    pub base: DecodeConfig,
    pub seed: u64,
    /// Estimate on the bit-flip problem and decode the phase-flip problem.
    pub swap: bool,
}

impl Default for CorrelatedConfig {
    fn default() -> Self {
        Self {
            n_z: 1000,
            n_x: 1000,
            base: DecodeConfig::default(),
            seed: 0,
            swap: false,
        }
    }
}

/// `P/(1 - P)` for `P = α/2 + (1 - α)(p/3)/(1 - 2p/3)`.
pub fn correlated_weight(alpha: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} not in [0,1]")));
    }
    if !(p > 0.0 && p < 0.75) {
        return Err(Error::InvalidParameter(format!("p = {p} not in (0, 0.75)")));
    }
    let q = (p / 3.0) / (1.0 - 2.0 * p / 3.0);
    let big_p = alpha / 2.0 + (1.0 - alpha) * q;
    Ok(big_p / (1.0 - big_p))
}

/// Sampled occupation of each edge in the error chains consistent with `s`.
pub fn estimate_marginals(g: &DecodingGraph, s: &[bool], cfg: &DecodeConfig) -> Result<MarginalVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    estimate_marginals_with_rng(g, s, cfg, &mut rng)
}

pub fn estimate_marginals_with_rng<R: Rng + ?Sized>(
    g: &DecodingGraph,
    s: &[bool],
    cfg: &DecodeConfig,
    rng: &mut R,
) -> Result<MarginalVector> {
    let cfg = DecodeConfig {
        marginals: true,
        early_stop: None,
        ..cfg.clone()
    };
    let r = decode_with_rng(g, s, &cfg, rng)?;
    Ok(MarginalVector(r.marginals.expect("marginals requested")))
}

/// Prior graph `target` with each mapped edge reweighted from `alpha` on the
/// source problem; unmapped edges keep their prior weight.
fn conditioned(
    target: &DecodingGraph,
    alpha: &MarginalVector,
    target_to_source: &[Option<usize>],
    p: f64,
) -> Result<DecodingGraph> {
    let mut w = target.weights();
    for (e, src) in target_to_source.iter().enumerate() {
        if let Some(s) = *src {
            w[e] = correlated_weight(alpha.0[s].clamp(0.0, 1.0), p)?;
        }
    }
    Ok(target.with_weights(&w))
}

struct Sides<'a> {
    /// Estimated first; conditions the decoded side.
    first: &'a DecodingGraph,
    first_s: &'a [bool],
    second: &'a DecodingGraph,
    second_s: &'a [bool],
    second_to_first: Vec<Option<usize>>,
    first_to_second: Vec<Option<usize>>,
}

fn sides<'a>(prob: &'a CorrelatedProblem, sx: &'a [bool], sz: &'a [bool], swap: bool) -> Sides<'a> {
    if swap {
        Sides {
            first: &prob.g_x,
            first_s: sx,
            second: &prob.g_z,
            second_s: sz,
            second_to_first: prob.edge_map.clone(),
            first_to_second: prob.inverse_map(),
        }
    } else {
        Sides {
            first: &prob.g_z,
            first_s: sz,
            second: &prob.g_x,
            second_s: sx,
            second_to_first: prob.inverse_map(),
            first_to_second: prob.edge_map.clone(),
        }
    }
}

/// Estimates phase-flip marginals, reweights the bit-flip graph and decodes it.
pub fn correlated_decode(
    prob: &CorrelatedProblem,
    sx: &[bool],
    sz: &[bool],
    cfg: &CorrelatedConfig,
) -> Result<DecodeResult> {
    iterative_parse(prob, sx, sz, 1, cfg)
}

/// Alternates marginal estimation between the two problems `rounds` times
/// before the final decode; `rounds = 1` is [`correlated_decode`].
pub fn iterative_parse(
    prob: &CorrelatedProblem,
    sx: &[bool],
    sz: &[bool],
    rounds: usize,
    cfg: &CorrelatedConfig,
) -> Result<DecodeResult> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sd = sides(prob, sx, sz, cfg.swap);
    let est = DecodeConfig {
        n_samples: cfg.n_z,
        ..cfg.base.clone()
    };
    let fin = DecodeConfig {
        n_samples: cfg.n_x,
        ..cfg.base.clone()
    };
    let alpha = estimate_marginals_with_rng(sd.first, sd.first_s, &est, &mut rng)?;
    let mut second = conditioned(sd.second, &alpha, &sd.second_to_first, prob.p)?;
    for _ in 1..rounds {
        let beta = estimate_marginals_with_rng(&second, sd.second_s, &est, &mut rng)?;
        let first = conditioned(sd.first, &beta, &sd.first_to_second, prob.p)?;
        let alpha = estimate_marginals_with_rng(&first, sd.first_s, &est, &mut rng)?;
        second = conditioned(sd.second, &alpha, &sd.second_to_first, prob.p)?;
    }
    decode_with_rng(&second, sd.second_s, &fin, &mut rng)
}
