use rand::Rng;

use super::ReweightedGraph;
use crate::error::{Error, Result};
use crate::graph::Chain;

/// One directed-worm closure on the cycle `sigma`, in place.
///
/// The tail sits at a uniformly chosen vertex; the head proposes a uniformly
/// chosen incident edge `ij` and moves with probability
/// `min(1, d(i)/d(j) · w̃_ij^{1 - 2σ_ij})`. The sweep ends when the head is back
/// on the tail. Returns the number of proposals made.
pub fn directed_worm_sweep<R: Rng + ?Sized>(
    rg: &ReweightedGraph<'_>,
    sigma: &mut Chain,
    rng: &mut R,
    step_cap: u64,
) -> Result<u64> {
    let g = rg.graph();
    let nv = g.num_vertices();
    if nv == 0 {
        return Ok(0);
    }
    let tail = rng.random_range(0..nv);
    let mut head = tail;
    let mut steps = 0u64;
    let mut inc = g.incident(head);
    if inc.is_empty() {
        return Ok(0);
    }
    loop {
        let (e, j) = inc[rng.random_range(0..inc.len())];
        steps += 1;
        let next = g.incident(j);
        let a = inc.len() as f64 / next.len() as f64 * rg.toggle_ratio(sigma, e);
        if a >= 1.0 || rng.random::<f64>() < a {
            sigma.toggle(e);
            head = j;
            inc = next;
        }
        if head == tail {
            return Ok(steps);
        }
        if steps >= step_cap {
            return Err(Error::Timeout(steps));
        }
    }
}
