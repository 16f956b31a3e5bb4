//! The lazy symmetric worm.
//!
//! From a cycle, a vertex `v` and an incident edge are drawn uniformly and the
//! flip is Metropolised against the PS measure (`|V|·λ` on cycles, `2·λ` on
//! two-defect states). From a two-defect state one defect is drawn uniformly
//! and moved along a uniformly chosen incident edge. The resulting kernel is
//!
//! ```text
//! A ∈ C₀:        r̂ · (1/d(u) + 1/d(v)) / (2|V|)
//! A ⊕ uv ∈ C₀:   r̂ · (1/d(u) + 1/d(v)) / 4
//! C₂ → C₂:       min(1, r · d(u)/d(v)) / (4 d(u))     (u ∈ ∂A moves to v)
//! ```
//!
//! with `r = λ(A ⊕ uv)/λ(A)` and `r̂ = min(1, r)`. Without laziness every
//! entry doubles.

use rand::Rng;

use super::ReweightedGraph;
use crate::graph::Chain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Defects {
    Closed,
    /// Odd vertices of the configuration; `head` is the one that moved last.
    Open {
        head: usize,
        tail: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WormState {
    pub config: Chain,
    pub defects: Defects,
    pub steps: u64,
}

impl WormState {
    pub fn closed(config: Chain) -> Self {
        Self {
            config,
            defects: Defects::Closed,
            steps: 0,
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.defects, Defects::Closed)
    }
}

/// Unnormalised PS weight `Ψ(A)·λ(A)`: `Ψ = |V|` on cycles, `2` otherwise.
pub fn ps_weight(rg: &ReweightedGraph<'_>, state: &WormState) -> f64 {
    let psi = match state.defects {
        Defects::Closed => rg.num_vertices() as f64,
        Defects::Open { .. } => 2.0,
    };
    psi * rg.lambda(&state.config)
}

/// One elementary transition, applied in place.
pub fn symmetric_step<R: Rng + ?Sized>(rg: &ReweightedGraph<'_>, state: &mut WormState, rng: &mut R, lazy: bool) {
    state.steps += 1;
    if lazy && rng.random::<bool>() {
        return;
    }
    let g = rg.graph();
    match state.defects {
        Defects::Closed => {
            let nv = g.num_vertices();
            if nv == 0 {
                return;
            }
            let v = rng.random_range(0..nv);
            let inc = g.incident(v);
            if inc.is_empty() {
                return;
            }
            let (e, u) = inc[rng.random_range(0..inc.len())];
            let r = rg.toggle_ratio(&state.config, e);
            if r >= 1.0 || rng.random::<f64>() < r {
                state.config.toggle(e);
                state.defects = Defects::Open { head: u, tail: v };
            }
        }
        Defects::Open { head, tail } => {
            let (x, other) = if rng.random::<bool>() {
                (head, tail)
            } else {
                (tail, head)
            };
            let inc = g.incident(x);
            let (e, y) = inc[rng.random_range(0..inc.len())];
            let r = rg.toggle_ratio(&state.config, e);
            let a = if y == other {
                r
            } else {
                r * g.degree(x) as f64 / g.degree(y) as f64
            };
            if a >= 1.0 || rng.random::<f64>() < a {
                state.config.toggle(e);
                state.defects = if y == other {
                    Defects::Closed
                } else {
                    Defects::Open { head: y, tail: other }
                };
            }
        }
    }
}

/// Exact off-diagonal transition probabilities out of `config`, as
/// `(edge, P(A → A ⊕ edge))`. Returns `None` unless `|∂A| ∈ {0, 2}`.
pub fn symmetric_kernel(rg: &ReweightedGraph<'_>, config: &Chain, lazy: bool) -> Option<Vec<(usize, f64)>> {
    let g = rg.graph();
    let odd = g.boundary(config);
    let hold = if lazy { 0.5 } else { 1.0 };
    let mut out = vec![0.0; g.num_edges()];
    match odd.len() {
        0 => {
            let nv = g.num_vertices() as f64;
            for v in 0..g.num_vertices() {
                let inc = g.incident(v);
                for &(e, _) in inc {
                    let r = rg.toggle_ratio(config, e).min(1.0);
                    out[e] += hold * r / (nv * inc.len() as f64);
                }
            }
        }
        2 => {
            for (x, other) in [(odd[0], odd[1]), (odd[1], odd[0])] {
                let inc = g.incident(x);
                let dx = inc.len() as f64;
                for &(e, y) in inc {
                    let r = rg.toggle_ratio(config, e);
                    let a = if y == other { r } else { r * dx / g.degree(y) as f64 };
                    out[e] += hold * 0.5 * a.min(1.0) / dx;
                }
            }
        }
        _ => return None,
    }
    Some(out.into_iter().enumerate().filter(|(_, p)| *p > 0.0).collect())
}
