//! Weighted decoding graph of a matchable detector error model.
//!
//! Vertices are detectors, plus a single boundary vertex when some mechanism
//! triggers only one detector. Edge `j` is mechanism `j` of the model, so
//! chains over edges are also sets of fired mechanisms.

use std::ops::{Deref, DerefMut};

use crate::bits::BitSet;
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};

/// Subset of graph edges: error chains, cycles, matchings, logical sets.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Chain(pub BitSet);

impl Chain {
    pub fn empty(num_edges: usize) -> Self {
        Chain(BitSet::new(num_edges))
    }

    pub fn from_edges<I: IntoIterator<Item = usize>>(num_edges: usize, edges: I) -> Self {
        Chain(BitSet::from_indices(num_edges, edges))
    }

    pub fn edges(&self) -> Vec<usize> {
        self.0.iter().collect()
    }
}

impl Deref for Chain {
    type Target = BitSet;
    fn deref(&self) -> &BitSet {
        &self.0
    }
}

impl DerefMut for Chain {
    fn deref_mut(&mut self) -> &mut BitSet {
        &mut self.0
    }
}

/// k-bit logical class label; bit `i` is the parity of the overlap with `L̃_i`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct LogicalClass(pub BitSet);

impl LogicalClass {
    pub fn zero(k: usize) -> Self {
        LogicalClass(BitSet::new(k))
    }
}

impl Deref for LogicalClass {
    type Target = BitSet;
    fn deref(&self) -> &BitSet {
        &self.0
    }
}

impl DerefMut for LogicalClass {
    fn deref_mut(&mut self) -> &mut BitSet {
        &mut self.0
    }
}

/// Sorted vertex subset.
pub type DefectSet = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    /// Likelihood ratio `p / (1 - p)`.
    pub weight: f64,
    pub mechanism: usize,
}

impl Edge {
    #[inline]
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecodingGraph {
    num_vertices: usize,
    num_detectors: usize,
    boundary: Option<usize>,
    edges: Vec<Edge>,
    /// CSR adjacency: `(edge, neighbour)` pairs, parallel edges repeated.
    adj_offsets: Vec<usize>,
    adj: Vec<(usize, usize)>,
    logical_sets: Vec<Chain>,
    /// Per-edge logical flip mask, `num_logicals` bits each.
    logical_masks: Vec<LogicalClass>,
    max_degree: usize,
}

impl DecodingGraph {
    /// Builds the graph of a matchable model; support-1 columns attach to one
    /// shared boundary vertex.
    pub fn from_dem(model: &DetectorErrorModel) -> Result<Self> {
        let (ok, bad) = model.is_matchable();
        if !ok {
            return Err(Error::NotMatchable { columns: bad });
        }
        if let Some(j) = model.columns.iter().position(|c| c.is_empty()) {
            return Err(Error::EmptyColumn { mechanism: j });
        }
        let m = model.num_detectors;
        let boundary = model.columns.iter().any(|c| c.len() == 1).then_some(m);
        let edges = model
            .columns
            .iter()
            .zip(&model.probs)
            .enumerate()
            .map(|(j, (col, &p))| Edge {
                u: col[0],
                v: if col.len() == 2 { col[1] } else { m },
                weight: p / (1.0 - p),
                mechanism: j,
            })
            .collect();
        let mut masks = vec![LogicalClass::zero(model.num_logicals); model.num_mechanisms()];
        for (j, logs) in model.logical_columns.iter().enumerate() {
            for &l in logs {
                masks[j].insert(l);
            }
        }
        Ok(Self::from_parts(
            m + usize::from(boundary.is_some()),
            m,
            boundary,
            edges,
            masks,
        ))
    }

    pub(crate) fn from_parts(
        num_vertices: usize,
        num_detectors: usize,
        boundary: Option<usize>,
        edges: Vec<Edge>,
        logical_masks: Vec<LogicalClass>,
    ) -> Self {
        let mut degree = vec![0usize; num_vertices];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut adj_offsets = Vec::with_capacity(num_vertices + 1);
        adj_offsets.push(0);
        for d in &degree {
            adj_offsets.push(adj_offsets.last().unwrap() + d);
        }
        let mut fill = adj_offsets.clone();
        let mut adj = vec![(0, 0); adj_offsets[num_vertices]];
        for (i, e) in edges.iter().enumerate() {
            adj[fill[e.u]] = (i, e.v);
            fill[e.u] += 1;
            adj[fill[e.v]] = (i, e.u);
            fill[e.v] += 1;
        }
        let k = logical_masks.first().map_or(0, |m| m.len());
        let mut logical_sets = vec![Chain::empty(edges.len()); k];
        for (j, mask) in logical_masks.iter().enumerate() {
            for l in mask.iter() {
                logical_sets[l].insert(j);
            }
        }
        let max_degree = degree.iter().copied().max().unwrap_or(0);
        Self {
            num_vertices,
            num_detectors,
            boundary,
            edges,
            adj_offsets,
            adj,
            logical_sets,
            logical_masks,
            max_degree,
        }
    }

    /// Same topology and logicals with new edge weights.
    pub fn with_weights(&self, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), self.edges.len());
        let mut out = self.clone();
        for (e, &w) in out.edges.iter_mut().zip(weights) {
            assert!(w > 0.0 && w.is_finite(), "edge weights must be positive");
            e.weight = w;
        }
        out
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_logicals(&self) -> usize {
        self.logical_sets.len()
    }

    pub fn boundary_vertex(&self) -> Option<usize> {
        self.boundary
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    #[inline]
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_offsets[v]..self.adj_offsets[v + 1]]
    }

    /// Degree counting parallel edges with multiplicity.
    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj_offsets[v + 1] - self.adj_offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn logical_sets(&self) -> &[Chain] {
        &self.logical_sets
    }

    pub fn logical_mask(&self, e: usize) -> &LogicalClass {
        &self.logical_masks[e]
    }

    pub fn empty_chain(&self) -> Chain {
        Chain::empty(self.edges.len())
    }

    /// Vertices with odd incidence in `a`.
    pub fn boundary(&self, a: &Chain) -> DefectSet {
        let mut odd = vec![false; self.num_vertices];
        for e in a.iter() {
            let edge = &self.edges[e];
            odd[edge.u] ^= true;
            odd[edge.v] ^= true;
        }
        odd.iter().enumerate().filter(|(_, &o)| o).map(|(v, _)| v).collect()
    }

    /// Intersection parity of `a` with every logical edge set.
    pub fn measure_logical(&self, a: &Chain) -> LogicalClass {
        let mut class = LogicalClass::zero(self.num_logicals());
        for e in a.iter() {
            class.xor_with(&self.logical_masks[e]);
        }
        class
    }

    /// Triggered detectors, plus the boundary vertex when their count is odd.
    pub fn syndrome_defects(&self, syndrome: &[bool]) -> Result<DefectSet> {
        if syndrome.len() != self.num_detectors {
            return Err(Error::MalformedSyndrome(format!(
                "expected {} detector bits, got {}",
                self.num_detectors,
                syndrome.len()
            )));
        }
        let mut defects: DefectSet = syndrome
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| i)
            .collect();
        if defects.len() % 2 == 1 {
            match self.boundary {
                Some(b) => defects.push(b),
                None => {
                    return Err(Error::MalformedSyndrome(format!(
                        "odd syndrome weight {} on a graph without boundary vertex",
                        defects.len()
                    )))
                }
            }
        }
        Ok(defects)
    }

    /// Syndrome of the mechanisms in `chain` (boundary vertex dropped).
    pub fn syndrome_of(&self, chain: &Chain) -> Vec<bool> {
        let mut s = vec![false; self.num_detectors];
        for v in self.boundary(chain) {
            if v < self.num_detectors {
                s[v] = true;
            }
        }
        s
    }
}
