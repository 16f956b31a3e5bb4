//! Shortest paths between defects, greedy reference matchings, and an exact
//! minimum-weight matching baseline.
//!
//! Edge costs are `-ln w_e`. The exact matcher pairs defects with a memoised
//! dynamic program that always pairs the lowest unmatched defect first, so only
//! a small fraction of the `2^D` subsets is ever visited.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::graph::{Chain, DecodingGraph, DefectSet};

pub const DEFAULT_DEFECT_CAP: usize = 26;

const NO_EDGE: usize = usize::MAX;

/// Pairwise shortest paths between a set of defects.
#[derive(Debug, Clone)]
pub struct PathTable {
    pub defects: DefectSet,
    dist: Vec<Vec<f64>>,
    /// Shortest-path tree (predecessor edge per vertex) rooted at each defect.
    pred: Vec<Vec<usize>>,
}

impl PathTable {
    /// Path length between defects `i` and `j` (indices into `defects`).
    pub fn length(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    /// Edges of the stored shortest path between defects `i` and `j`.
    pub fn path(&self, graph: &DecodingGraph, i: usize, j: usize) -> Vec<usize> {
        let (src, dst) = if i <= j { (i, j) } else { (j, i) };
        let tree = &self.pred[src];
        let target = self.defects[src];
        let mut cur = self.defects[dst];
        let mut out = Vec::new();
        while cur != target {
            let e = tree[cur];
            debug_assert_ne!(e, NO_EDGE);
            out.push(e);
            cur = graph.edge(e).other(cur);
        }
        out
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(graph: &DecodingGraph, costs: &[f64], src: usize) -> (Vec<f64>, Vec<usize>) {
    let n = graph.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_EDGE; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry(0.0, src));
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(e, u) in graph.incident(v) {
            let nd = d + costs[e];
            if nd < dist[u] {
                dist[u] = nd;
                pred[u] = e;
                heap.push(Entry(nd, u));
            }
        }
    }
    (dist, pred)
}

fn table_with_costs(graph: &DecodingGraph, defects: &[usize], costs: &[f64]) -> PathTable {
    let n = defects.len();
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    let mut pred = Vec::with_capacity(n);
    for (i, &src) in defects.iter().enumerate() {
        let (d, p) = dijkstra(graph, costs, src);
        for (j, &dst) in defects.iter().enumerate() {
            dist[i][j] = d[dst];
        }
        pred.push(p);
    }
    // Store one value per unordered pair, taken from the lower-index source.
    for i in 0..n {
        for j in 0..i {
            dist[i][j] = dist[j][i];
        }
    }
    PathTable {
        defects: defects.to_vec(),
        dist,
        pred,
    }
}

/// Exact shortest paths from every defect under cost `-ln w_e`.
///
/// A negative edge cost (`w_e > 1`) is a negative two-cycle in the undirected
/// relaxation, so it is reported as [`Error::NegativeCycle`].
pub fn shortest_paths(graph: &DecodingGraph, defects: &[usize]) -> Result<PathTable> {
    let costs: Vec<f64> = graph.edges().iter().map(|e| -e.weight.ln()).collect();
    if let Some(e) = costs.iter().position(|&c| c < 0.0) {
        return Err(Error::NegativeCycle(e));
    }
    let table = table_with_costs(graph, defects, &costs);
    for i in 0..defects.len() {
        for j in i + 1..defects.len() {
            if table.dist[i][j].is_infinite() {
                return Err(Error::Unreachable(defects[i], defects[j]));
            }
        }
    }
    Ok(table)
}

/// Any chain whose boundary equals `defects`: greedy closest-pair pairing,
/// XOR of the realised shortest paths.
///
/// Costs are clamped at zero so the pairing exists even when some `w_e > 1`;
/// any boundary-consistent chain is a valid reference.
pub fn reference_matching(graph: &DecodingGraph, defects: &[usize]) -> Result<Chain> {
    if defects.len() % 2 == 1 {
        return Err(Error::OddDefects(defects.len()));
    }
    let mut chain = graph.empty_chain();
    if defects.is_empty() {
        return Ok(chain);
    }
    let costs: Vec<f64> = graph.edges().iter().map(|e| (-e.weight.ln()).max(0.0)).collect();
    let table = table_with_costs(graph, defects, &costs);
    let n = defects.len();
    let mut pairs: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| table.dist[i][j].is_finite())
        .map(|(i, j)| (table.dist[i][j], i, j))
        .collect();
    pairs.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| (defects[a.1], defects[a.2]).cmp(&(defects[b.1], defects[b.2])))
    });
    let mut matched = vec![false; n];
    for (_, i, j) in pairs {
        if matched[i] || matched[j] {
            continue;
        }
        matched[i] = true;
        matched[j] = true;
        for e in table.path(graph, i, j) {
            chain.toggle(e);
        }
    }
    if let Some(i) = matched.iter().position(|m| !m) {
        let j = (0..n).find(|&j| j != i && !matched[j]).unwrap_or(i);
        return Err(Error::Unreachable(defects[i], defects[j]));
    }
    Ok(chain)
}

/// Total cost `Σ -ln w_e` of a chain.
pub fn chain_cost(graph: &DecodingGraph, chain: &Chain) -> f64 {
    chain.iter().map(|e| -graph.edge(e).weight.ln()).sum()
}

/// Minimum-cost pairing of the defects; returns `(pairs, total length)`.
pub fn min_weight_pairing(table: &PathTable, cap: usize) -> Result<(Vec<(usize, usize)>, f64)> {
    let n = table.defects.len();
    if n % 2 == 1 {
        return Err(Error::OddDefects(n));
    }
    if n > cap || n > 64 {
        return Err(Error::TooManyDefects { defects: n, cap });
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut memo: HashMap<u64, (f64, u8)> = HashMap::new();
    let best = solve(table, full, &mut memo);
    if best.is_infinite() {
        let (a, b) = (table.defects[0], table.defects[n - 1]);
        return Err(Error::Unreachable(a, b));
    }
    let mut pairs = Vec::with_capacity(n / 2);
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let j = memo[&mask].1 as usize;
        pairs.push((i, j));
        mask &= !(1 << i) & !(1 << j);
    }
    Ok((pairs, best))
}

fn solve(table: &PathTable, mask: u64, memo: &mut HashMap<u64, (f64, u8)>) -> f64 {
    if mask == 0 {
        return 0.0;
    }
    if let Some(&(v, _)) = memo.get(&mask) {
        return v;
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << i);
    let mut best = (f64::INFINITY, 0u8);
    let mut bits = rest;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let d = table.dist[i][j];
        if d.is_infinite() {
            continue;
        }
        let total = d + solve(table, rest & !(1 << j), memo);
        if total < best.0 {
            best = (total, j as u8);
        }
    }
    memo.insert(mask, best);
    best.0
}

/// Exact minimum-weight chain with boundary `defects`.
pub fn mwpm_decode(graph: &DecodingGraph, defects: &[usize], cap: usize) -> Result<Chain> {
    if defects.len() % 2 == 1 {
        return Err(Error::OddDefects(defects.len()));
    }
    if defects.len() > cap {
        return Err(Error::TooManyDefects {
            defects: defects.len(),
            cap,
        });
    }
    let mut chain = graph.empty_chain();
    if defects.is_empty() {
        return Ok(chain);
    }
    let table = shortest_paths(graph, defects)?;
    let (pairs, _) = min_weight_pairing(&table, cap)?;
    for (i, j) in pairs {
        for e in table.path(graph, i, j) {
            chain.toggle(e);
        }
    }
    Ok(chain)
}
