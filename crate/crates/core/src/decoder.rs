//! The worm decoder: sample cycles of the reweighted graph, tally their
//! logical classes, and return the most populated class with a recovery chain.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Chain, DecodingGraph, LogicalClass};
use crate::matching::reference_matching;
use crate::stats::{normal_quantile, wilson_interval};
use crate::worm::{reweight, SamplerConfig, Variant, WormSampler};

/// Samples drawn before the stopping rule is first consulted, and between checks.
const EARLY_STOP_STRIDE: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub n_samples: usize,
    /// Sweeps before the first record; `None` uses `|E|`.
    pub burn_in: Option<usize>,
    /// Sweeps between records; `None` uses `max(1, |E|/|V|)`.
    pub thin: Option<usize>,
    pub variant: Variant,
    pub seed: u64,
    /// Stop once the leading class beats the runner-up at confidence `1 - alpha`.
    pub early_stop: Option<f64>,
    pub lazy: bool,
    /// Elementary-move cap per sweep; `None` uses `10⁴·|E|`.
    pub step_cap: Option<u64>,
    /// Also accumulate per-edge occupation of the sampled error chains.
    pub marginals: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            burn_in: None,
            thin: None,
            variant: Variant::Directed,
            seed: 0,
            early_stop: None,
            lazy: true,
            step_cap: None,
            marginals: false,
        }
    }
}

impl DecodeConfig {
    pub fn sampler_config(&self, g: &DecodingGraph) -> SamplerConfig {
        let d = SamplerConfig::defaults_for(g, self.variant);
        SamplerConfig {
            variant: self.variant,
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            thin: self.thin.unwrap_or(d.thin),
            lazy: self.lazy,
            step_cap: self.step_cap.unwrap_or(d.step_cap),
        }
    }
}

/// Counts of sampled logical classes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogicalTally {
    counts: BTreeMap<LogicalClass, usize>,
    total: usize,
}

impl LogicalTally {
    pub fn add(&mut self, class: LogicalClass) {
        *self.counts.entry(class).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn count(&self, class: &LogicalClass) -> usize {
        self.counts.get(class).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LogicalClass, usize)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    /// Most populated class; ties go to the lexicographically smallest label.
    pub fn argmax(&self) -> Option<(&LogicalClass, usize)> {
        let mut best: Option<(&LogicalClass, usize)> = None;
        for (k, &v) in &self.counts {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        best
    }

    /// Leading and second-largest counts.
    fn top_two(&self) -> (usize, usize) {
        let mut a = 0;
        let mut b = 0;
        for &v in self.counts.values() {
            if v > a {
                b = a;
                a = v;
            } else if v > b {
                b = v;
            }
        }
        (a, b)
    }

    /// Relabels every class `Γ ↦ Γ ⊕ shift`.
    fn shifted(self, shift: &LogicalClass) -> Self {
        let counts = self
            .counts
            .into_iter()
            .map(|(k, v)| (LogicalClass(k.xor(shift)), v))
            .collect();
        Self {
            counts,
            total: self.total,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub class: LogicalClass,
    pub recovery: Chain,
    pub tally: LogicalTally,
    pub p_succ_estimate: f64,
    pub reference: Chain,
    pub steps: u64,
    /// Set when the sequential stopping rule ended sampling early.
    pub early_stopped: bool,
    /// Per-edge frequency in the sampled error chains, when requested.
    pub marginals: Option<Vec<f64>>,
    pub sampler: SamplerConfig,
}

/// JSON form of a decode, including the timeout case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeRecord {
    pub class: Option<String>,
    pub recovery_edges: Vec<usize>,
    pub tally: BTreeMap<String, usize>,
    pub p_succ: Option<f64>,
    pub n_samples: usize,
    pub steps: u64,
    pub timed_out: bool,
    pub early_stopped: bool,
    pub variant: Variant,
    pub burn_in: usize,
    pub thin: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginals: Option<Vec<f64>>,
}

impl DecodeResult {
    pub fn to_record(&self) -> DecodeRecord {
        DecodeRecord {
            class: Some(self.class.to_bit_string()),
            recovery_edges: self.recovery.edges(),
            tally: self.tally.iter().map(|(k, v)| (k.to_bit_string(), v)).collect(),
            p_succ: Some(self.p_succ_estimate),
            n_samples: self.tally.total(),
            steps: self.steps,
            timed_out: false,
            early_stopped: self.early_stopped,
            variant: self.sampler.variant,
            burn_in: self.sampler.burn_in,
            thin: self.sampler.thin,
            marginals: self.marginals.clone(),
        }
    }
}

impl DecodeRecord {
    pub fn timed_out(steps: u64, sampler: &SamplerConfig) -> Self {
        Self {
            class: None,
            recovery_edges: Vec::new(),
            tally: BTreeMap::new(),
            p_succ: None,
            n_samples: 0,
            steps,
            timed_out: true,
            early_stopped: false,
            variant: sampler.variant,
            burn_in: sampler.burn_in,
            thin: sampler.thin,
            marginals: None,
        }
    }
}

/// Decodes one syndrome with an RNG seeded from `cfg.seed`.
pub fn decode(g: &DecodingGraph, syndrome: &[bool], cfg: &DecodeConfig) -> Result<DecodeResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    decode_with_rng(g, syndrome, cfg, &mut rng)
}

pub fn decode_with_rng<R: Rng + ?Sized>(
    g: &DecodingGraph,
    syndrome: &[bool],
    cfg: &DecodeConfig,
    rng: &mut R,
) -> Result<DecodeResult> {
    if cfg.n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    if let Some(a) = cfg.early_stop {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!("early_stop alpha {a} not in (0,1)")));
        }
    }
    let defects = g.syndrome_defects(syndrome)?;
    let m0 = reference_matching(g, &defects)?;
    let rg = reweight(g, m0.clone());
    let scfg = cfg.sampler_config(g);
    let mut sampler = WormSampler::new(&rg, scfg, g.empty_chain())?;
    let z = cfg.early_stop.map(normal_quantile);

    let mut tally = LogicalTally::default();
    let mut first: HashMap<LogicalClass, Chain> = HashMap::new();
    let mut occupancy = cfg.marginals.then(|| vec![0usize; g.num_edges()]);
    let mut early_stopped = false;
    for i in 0..cfg.n_samples {
        let c = sampler.next_sample(rng)?;
        let class = g.measure_logical(c);
        if let Some(occ) = occupancy.as_mut() {
            for e in c.iter() {
                occ[e] += 1;
            }
        }
        if !first.contains_key(&class) {
            first.insert(class.clone(), c.clone());
        }
        tally.add(class);
        if let Some(z) = z {
            let n = i + 1;
            if n % EARLY_STOP_STRIDE == 0 && n < cfg.n_samples {
                let (a, b) = tally.top_two();
                if wilson_interval(a, a + b, z).0 > 0.5 {
                    early_stopped = true;
                    break;
                }
            }
        }
    }

    let shift = g.measure_logical(&m0);
    // Tie-breaking is on the final labels, so shift before choosing.
    let tally = tally.shifted(&shift);
    let (class, count) = {
        let (k, v) = tally.argmax().expect("at least one sample");
        (k.clone(), v)
    };
    let class_m = LogicalClass(class.xor(&shift));
    let recovery = Chain(first[&class_m].xor(&m0));
    assert_eq!(g.boundary(&recovery), defects, "recovery boundary mismatch");
    assert_eq!(g.measure_logical(&recovery), class, "recovery class mismatch");
    let total = tally.total();
    let marginals = occupancy.map(|occ| {
        occ.iter()
            .enumerate()
            .map(|(e, &k)| {
                let f = k as f64 / total as f64;
                if m0.contains(e) {
                    1.0 - f
                } else {
                    f
                }
            })
            .collect()
    });
    Ok(DecodeResult {
        class,
        recovery,
        tally,
        p_succ_estimate: count as f64 / total as f64,
        reference: m0,
        steps: sampler.steps(),
        early_stopped,
        marginals,
        sampler: scfg,
    })
}

/// Smallest `T` with `T ≥ (t_rel + ½) · ln(2/α) / (2(δ − ε)²)`.
pub fn sample_budget(delta: f64, epsilon: f64, alpha: f64, t_rel: f64) -> Result<u64> {
    if !(epsilon >= 0.0 && epsilon < delta) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= epsilon < delta, got epsilon={epsilon}, delta={delta}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} not in (0,1)")));
    }
    if t_rel.is_nan() || t_rel < 0.0 {
        return Err(Error::InvalidParameter(format!("t_rel {t_rel} is negative")));
    }
    let gap = delta - epsilon;
    let t = (t_rel + 0.5) * (2.0 / alpha).ln() / (2.0 * gap * gap);
    Ok(t.ceil() as u64)
}

/// Keep iff the estimated error probability `1 - p_succ` is below `eps_threshold`.
pub fn postselect(result: &DecodeResult, eps_threshold: f64) -> bool {
    1.0 - result.p_succ_estimate < eps_threshold
}
