//! Worm Markov chains over cycles of a reweighted decoding graph.
//!
//! Given a reference chain `M` with `∂M = S`, error chains consistent with `S`
//! are `C ⊕ M` for cycles `C`, and `P(C ⊕ M) ∝ Π_{e∈C} w̃_e` where `w̃_e` is
//! `w_e` off `M` and `1/w_e` on `M`. The chains here sample that cycle measure:
//!
//! * [`symmetric`]: the lazy two-defect chain with an explicit transition kernel,
//! * [`directed`]: one mobile head, one fixed tail, a sweep per closed loop,
//! * [`dimer`]: a rejection-free worm on a gadget-decorated graph.

pub mod dimer;
pub mod directed;
pub mod symmetric;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Chain, DecodingGraph};

pub use dimer::{dimer_decorate, dimer_worm_sweep, DecoratedGraph, DimerConfig};
pub use directed::directed_worm_sweep;
pub use symmetric::{ps_weight, symmetric_kernel, symmetric_step, Defects, WormState};

/// Elementary moves allowed per sweep, per edge.
pub const STEP_CAP_PER_EDGE: u64 = 10_000;

/// Decoding graph with per-edge weights inverted on a reference chain.
#[derive(Debug, Clone)]
pub struct ReweightedGraph<'g> {
    graph: &'g DecodingGraph,
    reference: Chain,
    weights: Vec<f64>,
    inv_weights: Vec<f64>,
}

impl<'g> ReweightedGraph<'g> {
    pub fn new(graph: &'g DecodingGraph, reference: Chain) -> Self {
        let weights: Vec<f64> = graph
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                if reference.contains(i) {
                    1.0 / e.weight
                } else {
                    e.weight
                }
            })
            .collect();
        let inv_weights = weights.iter().map(|w| 1.0 / w).collect();
        Self {
            graph,
            reference,
            weights,
            inv_weights,
        }
    }

    pub fn graph(&self) -> &'g DecodingGraph {
        self.graph
    }

    pub fn reference(&self) -> &Chain {
        &self.reference
    }

    /// `w̃_e`.
    #[inline]
    pub fn weight(&self, e: usize) -> f64 {
        self.weights[e]
    }

    #[inline]
    pub fn inv_weight(&self, e: usize) -> f64 {
        self.inv_weights[e]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight ratio `λ(A ⊕ e) / λ(A)` for toggling `e` in `a`.
    #[inline]
    pub fn toggle_ratio(&self, a: &Chain, e: usize) -> f64 {
        if a.contains(e) {
            self.inv_weights[e]
        } else {
            self.weights[e]
        }
    }

    /// `λ(A) = Π_{e∈A} w̃_e`.
    pub fn lambda(&self, a: &Chain) -> f64 {
        a.iter().map(|e| self.weights[e]).product()
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    pub fn step_cap(&self) -> u64 {
        STEP_CAP_PER_EDGE * self.num_edges().max(1) as u64
    }
}

/// `w̃` for reference `m`.
pub fn reweight(graph: &DecodingGraph, m: Chain) -> ReweightedGraph<'_> {
    ReweightedGraph::new(graph, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Symmetric,
    #[default]
    Directed,
    Dimer,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Variant::Symmetric),
            "directed" => Ok(Variant::Directed),
            "dimer" => Ok(Variant::Dimer),
            _ => Err(Error::InvalidParameter(format!("unknown worm variant `{s}`"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Symmetric => "symmetric",
            Variant::Directed => "directed",
            Variant::Dimer => "dimer",
        })
    }
}

/// Burn-in and thinning, in sweeps.
///
/// A directed sweep is one worm closure; a dimer sweep is one dimer-worm
/// closure; a symmetric sweep is `|E|` elementary lazy steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub variant: Variant,
    pub burn_in: usize,
    pub thin: usize,
    /// Symmetric chain only: include the `1/2` holding probability.
    pub lazy: bool,
    /// Elementary-move budget per sweep (directed, dimer) or per wait for a
    /// cycle state (symmetric).
    pub step_cap: u64,
}

impl SamplerConfig {
    pub fn defaults_for(graph: &DecodingGraph, variant: Variant) -> Self {
        Self {
            variant,
            burn_in: default_burn_in(graph),
            thin: default_thin(graph),
            lazy: true,
            step_cap: STEP_CAP_PER_EDGE * graph.num_edges().max(1) as u64,
        }
    }
}

pub fn default_burn_in(graph: &DecodingGraph) -> usize {
    graph.num_edges()
}

pub fn default_thin(graph: &DecodingGraph) -> usize {
    (graph.num_edges() / graph.num_vertices().max(1)).max(1)
}

enum Engine {
    Symmetric(WormState),
    Directed(Chain),
    Dimer(Box<(DecoratedGraph, DimerConfig)>),
}

/// Stream of cycle configurations from one worm chain.
pub struct WormSampler<'a, 'g> {
    rg: &'a ReweightedGraph<'g>,
    cfg: SamplerConfig,
    engine: Engine,
    current: Chain,
    burned: bool,
    steps: u64,
}

impl<'a, 'g> WormSampler<'a, 'g> {
    /// Starts from the cycle `initial` (usually `∅`).
    pub fn new(rg: &'a ReweightedGraph<'g>, cfg: SamplerConfig, initial: Chain) -> Result<Self> {
        if !rg.graph().boundary(&initial).is_empty() {
            return Err(Error::InvalidParameter("initial configuration must be a cycle".into()));
        }
        let engine = match cfg.variant {
            Variant::Symmetric => Engine::Symmetric(WormState::closed(initial.clone())),
            Variant::Directed => Engine::Directed(initial.clone()),
            Variant::Dimer => {
                let dg = dimer_decorate(rg);
                let dc = dg.dimers_from_loops(&initial);
                Engine::Dimer(Box::new((dg, dc)))
            }
        };
        Ok(Self {
            rg,
            cfg,
            engine,
            current: initial,
            burned: false,
            steps: 0,
        })
    }

    /// Elementary moves performed so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn sweeps<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> Result<()> {
        let cap = self.cfg.step_cap;
        match &mut self.engine {
            Engine::Directed(sigma) => {
                for _ in 0..n {
                    self.steps += directed_worm_sweep(self.rg, sigma, rng, cap)?;
                }
            }
            Engine::Dimer(b) => {
                let (dg, dc) = &mut **b;
                for _ in 0..n {
                    self.steps += dimer::sweep_unchecked(dg, dc, rng, cap)?;
                }
            }
            Engine::Symmetric(state) => {
                let steps = n as u64 * self.rg.num_edges().max(1) as u64;
                for _ in 0..steps {
                    symmetric_step(self.rg, state, rng, self.cfg.lazy);
                }
                self.steps += steps;
            }
        }
        Ok(())
    }

    /// Advances the chain and returns the next recorded cycle.
    ///
    /// The symmetric chain is observed every `thin` sweeps and a record is
    /// taken at the next observation that lands on a cycle state.
    pub fn next_sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<&Chain> {
        if !self.burned {
            self.sweeps(self.cfg.burn_in, rng)?;
            self.burned = true;
        }
        match self.cfg.variant {
            Variant::Symmetric => {
                let block = self.cfg.thin as u64 * self.rg.num_edges().max(1) as u64;
                let block = block.max(1);
                let Engine::Symmetric(state) = &mut self.engine else {
                    unreachable!()
                };
                let mut waited = 0u64;
                loop {
                    for _ in 0..block {
                        symmetric_step(self.rg, state, rng, self.cfg.lazy);
                    }
                    self.steps += block;
                    waited += block;
                    if state.is_closed() {
                        break;
                    }
                    if waited >= self.cfg.step_cap {
                        return Err(Error::Timeout(waited));
                    }
                }
                self.current.clone_from(&state.config);
            }
            Variant::Directed => {
                self.sweeps(self.cfg.thin, rng)?;
                let Engine::Directed(sigma) = &self.engine else {
                    unreachable!()
                };
                self.current.clone_from(sigma);
            }
            Variant::Dimer => {
                self.sweeps(self.cfg.thin, rng)?;
                let Engine::Dimer(b) = &self.engine else { unreachable!() };
                self.current = b.0.loops_from_dimers(&b.1);
            }
        }
        Ok(&self.current)
    }
}

/// Collects `n_samples` cycle configurations starting from `∅`.
pub fn sample<R: Rng + ?Sized>(
    rg: &ReweightedGraph<'_>,
    n_samples: usize,
    cfg: SamplerConfig,
    rng: &mut R,
) -> Result<Vec<Chain>> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    let mut sampler = WormSampler::new(rg, cfg, rg.graph().empty_chain())?;
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        out.push(sampler.next_sample(rng)?.clone());
    }
    Ok(out)
}
