//! Dimer worm on a gadget-decorated graph.
//!
//! Each vertex of degree `d` becomes a `d`-gon with an outward triangle on
//! every side; the triangle tips carry the external edges. Perfect matchings
//! of the decorated graph map two-to-one per vertex onto cycles of the
//! original graph (an external edge is in the cycle iff it holds a dimer), and
//! internal edges have unit weight, so the dimer Gibbs measure projects onto
//! the cycle measure.

use rand::Rng;

use super::ReweightedGraph;
use crate::error::{Error, Result};
use crate::graph::Chain;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Gadget {
    /// Polygon side `k`, joining corners `k` and `k+1`; `NONE` for `d = 1`.
    side: Vec<usize>,
    /// Triangle edge from tip `k` to corner `k`.
    left: Vec<usize>,
    /// Triangle edge from tip `k` to corner `k+1`.
    right: Vec<usize>,
    /// Original edge leaving through tip `k`.
    slot_edge: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DecoratedGraph {
    ends: Vec<(usize, usize)>,
    weight: Vec<f64>,
    adj_offsets: Vec<usize>,
    adj: Vec<(usize, usize)>,
    /// Original edge → external decorated edge.
    external: Vec<usize>,
    gadgets: Vec<Gadget>,
}

/// Perfect matching of a decorated graph, stored as the matched edge per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimerConfig {
    pub partner: Vec<usize>,
}

/// Builds the decorated graph; external edges carry `w̃`, internal edges `1`.
pub fn dimer_decorate(rg: &ReweightedGraph<'_>) -> DecoratedGraph {
    let g = rg.graph();
    let mut ends: Vec<(usize, usize)> = Vec::new();
    let mut weight = Vec::new();
    let mut gadgets = Vec::with_capacity(g.num_vertices());
    let mut tip_of_slot: Vec<Vec<usize>> = Vec::with_capacity(g.num_vertices());
    let mut next_vertex = 0usize;
    let mut add = |ends: &mut Vec<(usize, usize)>, a: usize, b: usize, w: f64| {
        ends.push((a, b));
        weight.push(w);
        ends.len() - 1
    };
    for v in 0..g.num_vertices() {
        let inc = g.incident(v);
        let d = inc.len();
        let corner = |k: usize| next_vertex + (k % d.max(1));
        let tip = |k: usize| next_vertex + d + k;
        let mut gd = Gadget {
            side: vec![NONE; d],
            left: vec![NONE; d],
            right: vec![NONE; d],
            slot_edge: inc.iter().map(|&(e, _)| e).collect(),
        };
        for k in 0..d {
            if d >= 2 {
                gd.side[k] = add(&mut ends, corner(k), corner(k + 1), 1.0);
            }
            gd.left[k] = add(&mut ends, tip(k), corner(k), 1.0);
            gd.right[k] = add(&mut ends, tip(k), corner(k + 1), 1.0);
        }
        tip_of_slot.push((0..d).map(tip).collect());
        gadgets.push(gd);
        next_vertex += 2 * d;
    }
    let mut external = vec![NONE; g.num_edges()];
    // Slot of each edge at each endpoint, in adjacency order.
    let mut slot_at: Vec<[usize; 2]> = vec![[NONE; 2]; g.num_edges()];
    for v in 0..g.num_vertices() {
        for (k, &(e, _)) in g.incident(v).iter().enumerate() {
            let side = usize::from(g.edge(e).u != v);
            slot_at[e][side] = k;
        }
    }
    for e in 0..g.num_edges() {
        let edge = g.edge(e);
        let a = tip_of_slot[edge.u][slot_at[e][0]];
        let b = tip_of_slot[edge.v][slot_at[e][1]];
        external[e] = add(&mut ends, a, b, rg.weight(e));
    }
    let n = next_vertex;
    let mut deg = vec![0usize; n];
    for &(a, b) in &ends {
        deg[a] += 1;
        deg[b] += 1;
    }
    let mut adj_offsets = vec![0usize; n + 1];
    for v in 0..n {
        adj_offsets[v + 1] = adj_offsets[v] + deg[v];
    }
    let mut fill = adj_offsets.clone();
    let mut adj = vec![(0, 0); adj_offsets[n]];
    for (i, &(a, b)) in ends.iter().enumerate() {
        adj[fill[a]] = (i, b);
        fill[a] += 1;
        adj[fill[b]] = (i, a);
        fill[b] += 1;
    }
    DecoratedGraph {
        ends,
        weight,
        adj_offsets,
        adj,
        external,
        gadgets,
    }
}

impl DecoratedGraph {
    pub fn num_vertices(&self) -> usize {
        self.adj_offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.ends.len()
    }

    pub fn num_internal_edges(&self) -> usize {
        self.ends.len() - self.external.len()
    }

    /// Decorated edge carrying original edge `e`.
    pub fn external_edge(&self, e: usize) -> usize {
        self.external[e]
    }

    pub fn external_map(&self) -> &[usize] {
        &self.external
    }

    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    pub fn edge_weight(&self, e: usize) -> f64 {
        self.weight[e]
    }

    fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_offsets[v]..self.adj_offsets[v + 1]]
    }

    #[inline]
    fn other(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.ends[e];
        if a == v {
            b
        } else {
            a
        }
    }

    /// One of the dimer configurations lying over the cycle `loops`.
    ///
    /// Walking around each polygon, an empty tip keeps the "next corner already
    /// covered" state and an occupied tip flips it, so even occupancy closes
    /// consistently.
    pub fn dimers_from_loops(&self, loops: &Chain) -> DimerConfig {
        let mut partner = vec![NONE; self.num_vertices()];
        let set = |partner: &mut Vec<usize>, e: usize| {
            let (a, b) = self.ends[e];
            debug_assert!(partner[a] == NONE && partner[b] == NONE);
            partner[a] = e;
            partner[b] = e;
        };
        for e in loops.iter() {
            set(&mut partner, self.external[e]);
        }
        for gd in &self.gadgets {
            let mut covered = false;
            for k in 0..gd.slot_edge.len() {
                if loops.contains(gd.slot_edge[k]) {
                    if !covered {
                        set(&mut partner, gd.side[k]);
                    }
                    covered = !covered;
                } else if covered {
                    set(&mut partner, gd.right[k]);
                } else {
                    set(&mut partner, gd.left[k]);
                }
            }
            assert!(!covered, "configuration is not a cycle");
        }
        DimerConfig { partner }
    }

    /// Original edges whose external edge holds a dimer.
    pub fn loops_from_dimers(&self, dc: &DimerConfig) -> Chain {
        let mut c = Chain::empty(self.external.len());
        for (e, &x) in self.external.iter().enumerate() {
            let (a, _) = self.ends[x];
            if dc.partner[a] == x {
                c.insert(e);
            }
        }
        c
    }

    pub fn check(&self, dc: &DimerConfig) -> Result<()> {
        if dc.partner.len() != self.num_vertices() {
            return Err(Error::InvalidDimer("wrong vertex count".into()));
        }
        for (v, &e) in dc.partner.iter().enumerate() {
            if e == NONE || e >= self.num_edges() {
                return Err(Error::InvalidDimer(format!("vertex {v} is uncovered")));
            }
            let (a, b) = self.ends[e];
            if a != v && b != v {
                return Err(Error::InvalidDimer(format!("vertex {v} points at a foreign edge")));
            }
            if dc.partner[self.other(e, v)] != e {
                return Err(Error::InvalidDimer(format!("edge {e} half-matched")));
            }
        }
        Ok(())
    }
}

/// One dimer-worm closure, after checking `dc` is a perfect matching.
pub fn dimer_worm_sweep<R: Rng + ?Sized>(
    dg: &DecoratedGraph,
    dc: &mut DimerConfig,
    rng: &mut R,
    step_cap: u64,
) -> Result<u64> {
    dg.check(dc)?;
    sweep_unchecked(dg, dc, rng, step_cap)
}

pub(crate) fn sweep_unchecked<R: Rng + ?Sized>(
    dg: &DecoratedGraph,
    dc: &mut DimerConfig,
    rng: &mut R,
    step_cap: u64,
) -> Result<u64> {
    let n = dg.num_vertices();
    if n == 0 {
        return Ok(0);
    }
    let tail = rng.random_range(0..n);
    let e0 = dc.partner[tail];
    let mut head = dg.other(e0, tail);
    dc.partner[tail] = NONE;
    dc.partner[head] = NONE;
    let mut steps = 0u64;
    loop {
        steps += 1;
        let inc = dg.incident(head);
        let total: f64 = inc.iter().map(|&(e, _)| dg.weight[e]).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = inc[inc.len() - 1];
        for &(e, x) in inc {
            u -= dg.weight[e];
            if u < 0.0 {
                pick = (e, x);
                break;
            }
        }
        let (e, i1) = pick;
        if i1 == tail {
            dc.partner[tail] = e;
            dc.partner[head] = e;
            return Ok(steps);
        }
        let e2 = dc.partner[i1];
        let i2 = dg.other(e2, i1);
        dc.partner[i2] = NONE;
        dc.partner[i1] = e;
        dc.partner[head] = e;
        head = i2;
        if steps >= step_cap {
            return Err(Error::Timeout(steps));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dem::parse_dem;
    use crate::graph::DecodingGraph;
    use crate::worm::reweight;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Star graph: one centre of degree `d` joined to `d` leaves.
    fn star(d: usize) -> DecodingGraph {
        let text: String = (1..=d).map(|i| format!("error(0.2) D0 D{i}\n")).collect();
        DecodingGraph::from_dem(&parse_dem(&text).unwrap()).unwrap()
    }

    /// Counts internal perfect completions of gadget 0 given which of its
    /// tips are already covered by external dimers.
    fn completions(dg: &DecoratedGraph, d: usize, occupied: &[bool]) -> usize {
        let gd = &dg.gadgets[0];
        let internal: Vec<usize> = gd
            .side
            .iter()
            .chain(&gd.left)
            .chain(&gd.right)
            .copied()
            .filter(|&e| e != NONE)
            .collect();
        let mut count = 0;
        for mask in 0u32..(1 << internal.len()) {
            let mut cover = vec![0u8; 2 * d];
            for k in 0..d {
                if occupied[k] {
                    cover[d + k] += 1;
                }
            }
            for (i, &e) in internal.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    let (a, b) = dg.ends[e];
                    cover[a] += 1;
                    cover[b] += 1;
                }
            }
            if cover.iter().all(|&c| c == 1) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn gadgets_lift_cycles_two_to_one() {
        for d in 1..=5 {
            let g = star(d);
            let rg = reweight(&g, g.empty_chain());
            let dg = dimer_decorate(&rg);
            for pattern in 0u32..(1 << d) {
                let occ: Vec<bool> = (0..d).map(|k| pattern >> k & 1 == 1).collect();
                let expect = if pattern.count_ones() % 2 == 0 { 2 } else { 0 };
                assert_eq!(completions(&dg, d, &occ), expect, "d={d} pattern={pattern:b}");
            }
        }
    }

    #[test]
    fn degree_four_gadget_size() {
        let g = star(4);
        let rg = reweight(&g, g.empty_chain());
        let dg = dimer_decorate(&rg);
        assert_eq!(dg.gadgets[0].slot_edge.len(), 4);
        let internal = dg.gadgets[0]
            .side
            .iter()
            .chain(&dg.gadgets[0].left)
            .chain(&dg.gadgets[0].right)
            .filter(|&&e| e != NONE)
            .count();
        assert_eq!(internal, 12);
        // Corners 0..4, tips 4..8.
        assert_eq!(dg.edge_ends(dg.gadgets[0].left[0]), (4, 0));
        assert_eq!(dg.edge_ends(dg.gadgets[0].right[3]), (7, 0));
        assert_eq!(dg.num_vertices(), 4 * g.num_edges());
    }

    #[test]
    fn loops_round_trip_through_dimers() {
        let g = DecodingGraph::from_dem(
            &parse_dem("error(0.3) D0 D1\nerror(0.3) D1 D2\nerror(0.3) D2 D0\nerror(0.1) D0 D1").unwrap(),
        )
        .unwrap();
        let rg = reweight(&g, g.empty_chain());
        let dg = dimer_decorate(&rg);
        for c in [vec![], vec![0, 1, 2], vec![0, 3], vec![1, 2, 3]] {
            let chain = Chain::from_edges(4, c);
            let dc = dg.dimers_from_loops(&chain);
            dg.check(&dc).unwrap();
            assert_eq!(dg.loops_from_dimers(&dc), chain);
            // An occupied external edge maps to an edge of the cycle.
            for e in chain.iter() {
                let (a, _) = dg.edge_ends(dg.external_edge(e));
                assert_eq!(dc.partner[a], dg.external_edge(e));
            }
        }
    }

    #[test]
    fn four_cycle_uniform_matchings_split_evenly() {
        // A bare 4-cycle as the decorated graph's own structure: use the
        // decoration of a single edge pair (two parallel edges between two
        // degree-2 vertices) and count occupancy of one external edge.
        let g = DecodingGraph::from_dem(&parse_dem("error(0.5) D0 D1\nerror(0.5) D0 D1").unwrap()).unwrap();
        let rg = reweight(&g, g.empty_chain());
        let dg = dimer_decorate(&rg);
        let mut dc = dg.dimers_from_loops(&g.empty_chain());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mut on = 0usize;
        for _ in 0..n {
            dimer_worm_sweep(&dg, &mut dc, &mut rng, 1_000_000).unwrap();
            if !dg.loops_from_dimers(&dc).is_empty() {
                on += 1;
            }
        }
        // Cycles {∅, {0,1}} with unit weights: 50/50.
        let f = on as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.02, "{f}");
    }

    #[test]
    fn rejects_non_perfect_matchings() {
        let g = star(2);
        let rg = reweight(&g, g.empty_chain());
        let dg = dimer_decorate(&rg);
        let mut dc = dg.dimers_from_loops(&g.empty_chain());
        let v = 0;
        let e = dc.partner[v];
        let (a, b) = dg.edge_ends(e);
        dc.partner[a] = NONE;
        dc.partner[b] = NONE;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            dimer_worm_sweep(&dg, &mut dc, &mut rng, 100),
            Err(Error::InvalidDimer(_))
        ));
    }
}
