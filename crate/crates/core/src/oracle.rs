//! Brute-force references for small instances.

use std::collections::{BTreeMap, HashMap};

use crate::bits::BitSet;
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};
use crate::graph::{Chain, LogicalClass};
use crate::worm::ReweightedGraph;

pub const MAX_MECHANISMS: usize = 24;
pub const MAX_EDGES: usize = 20;

/// Exact class posterior for one syndrome.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbs {
    /// `P(γ | s)`; empty when no error pattern produces `s`.
    pub probs: BTreeMap<LogicalClass, f64>,
}

impl ClassProbs {
    /// Maximum-likelihood class; ties go to the smallest label.
    pub fn argmax(&self) -> Option<&LogicalClass> {
        let mut best: Option<(&LogicalClass, f64)> = None;
        for (k, &v) in &self.probs {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        best.map(|(k, _)| k)
    }

    /// Difference between the two largest class probabilities.
    pub fn gap(&self) -> f64 {
        let mut v: Vec<f64> = self.probs.values().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        match v.len() {
            0 => 0.0,
            1 => v[0],
            _ => v[0] - v[1],
        }
    }

    pub fn prob(&self, class: &LogicalClass) -> f64 {
        self.probs.get(class).copied().unwrap_or(0.0)
    }
}

/// Joint table `P(s, γ)` over every syndrome that occurs.
#[derive(Debug, Clone)]
pub struct JointTable {
    pub num_detectors: usize,
    pub num_logicals: usize,
    pub table: HashMap<Vec<bool>, BTreeMap<LogicalClass, f64>>,
}

impl JointTable {
    pub fn class_probs(&self, syndrome: &[bool]) -> ClassProbs {
        let mut probs = self.table.get(syndrome).cloned().unwrap_or_default();
        let z: f64 = probs.values().sum();
        for v in probs.values_mut() {
            *v /= z;
        }
        ClassProbs { probs }
    }

    /// Failure rate of exact MLD: `Σ_s P(s)·(1 - max_γ P(γ|s))`.
    pub fn mld_failure_rate(&self) -> f64 {
        self.table
            .values()
            .map(|m| {
                let total: f64 = m.values().sum();
                let best = m.values().copied().fold(0.0, f64::max);
                total - best
            })
            .sum()
    }
}

/// Enumerates all `2ⁿ` error patterns of `model`.
pub fn enumerate_joint(model: &DetectorErrorModel) -> Result<JointTable> {
    let n = model.num_mechanisms();
    if n > MAX_MECHANISMS {
        return Err(Error::TooLarge {
            size: n,
            cap: MAX_MECHANISMS,
        });
    }
    let m = model.num_detectors;
    let k = model.num_logicals;
    let det: Vec<BitSet> = model
        .columns
        .iter()
        .map(|c| BitSet::from_indices(m, c.iter().copied()))
        .collect();
    let log: Vec<BitSet> = model
        .logical_columns
        .iter()
        .map(|c| BitSet::from_indices(k, c.iter().copied()))
        .collect();
    let mut table: HashMap<Vec<bool>, BTreeMap<LogicalClass, f64>> = HashMap::new();
    let mut s = BitSet::new(m);
    let mut l = BitSet::new(k);
    fn rec(
        i: usize,
        prob: f64,
        model: &DetectorErrorModel,
        det: &[BitSet],
        log: &[BitSet],
        s: &mut BitSet,
        l: &mut BitSet,
        table: &mut HashMap<Vec<bool>, BTreeMap<LogicalClass, f64>>,
    ) {
        if i == det.len() {
            let key: Vec<bool> = (0..s.len()).map(|j| s.contains(j)).collect();
            *table
                .entry(key)
                .or_default()
                .entry(LogicalClass(l.clone()))
                .or_insert(0.0) += prob;
            return;
        }
        let p = model.probs[i];
        rec(i + 1, prob * (1.0 - p), model, det, log, s, l, table);
        s.xor_with(&det[i]);
        l.xor_with(&log[i]);
        rec(i + 1, prob * p, model, det, log, s, l, table);
        s.xor_with(&det[i]);
        l.xor_with(&log[i]);
    }
    rec(0, 1.0, model, &det, &log, &mut s, &mut l, &mut table);
    Ok(JointTable {
        num_detectors: m,
        num_logicals: k,
        table,
    })
}

/// Exact `P(γ | s)` by enumeration.
pub fn enumerate_class_probs(model: &DetectorErrorModel, syndrome: &[bool]) -> Result<ClassProbs> {
    if syndrome.len() != model.num_detectors {
        return Err(Error::MalformedSyndrome(format!(
            "expected {} detector bits, got {}",
            model.num_detectors,
            syndrome.len()
        )));
    }
    Ok(enumerate_joint(model)?.class_probs(syndrome))
}

/// Walks every edge subset, reporting `(odd vertex count, subset, λ)`.
fn for_each_subset<F: FnMut(usize, &Chain, f64)>(rg: &ReweightedGraph<'_>, mut visit: F) -> Result<()> {
    let ne = rg.num_edges();
    if ne > MAX_EDGES {
        return Err(Error::TooLarge {
            size: ne,
            cap: MAX_EDGES,
        });
    }
    let g = rg.graph();
    let ends: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
    let mut odd = vec![false; g.num_vertices()];
    let mut chain = g.empty_chain();
    #[allow(clippy::too_many_arguments)]
    fn rec<F: FnMut(usize, &Chain, f64)>(
        i: usize,
        lambda: f64,
        n_odd: usize,
        rg: &ReweightedGraph<'_>,
        ends: &[(usize, usize)],
        odd: &mut [bool],
        chain: &mut Chain,
        visit: &mut F,
    ) {
        if i == ends.len() {
            visit(n_odd, chain, lambda);
            return;
        }
        rec(i + 1, lambda, n_odd, rg, ends, odd, chain, visit);
        let (u, v) = ends[i];
        let mut n = n_odd;
        for x in [u, v] {
            odd[x] = !odd[x];
            if odd[x] {
                n += 1;
            } else {
                n -= 1;
            }
        }
        chain.toggle(i);
        rec(i + 1, lambda * rg.weight(i), n, rg, ends, odd, chain, visit);
        chain.toggle(i);
        for x in [u, v] {
            odd[x] = !odd[x];
        }
    }
    rec(0, 1.0, 0, rg, &ends, &mut odd, &mut chain, &mut visit);
    Ok(())
}

/// Normalised cycle measure `P(C) ∝ Π_{e∈C} w̃_e`.
pub fn exact_loop_distribution(rg: &ReweightedGraph<'_>) -> Result<BTreeMap<Chain, f64>> {
    let mut out = BTreeMap::new();
    let mut z = 0.0;
    for_each_subset(rg, |n_odd, c, lambda| {
        if n_odd == 0 {
            out.insert(c.clone(), lambda);
            z += lambda;
        }
    })?;
    for v in out.values_mut() {
        *v /= z;
    }
    Ok(out)
}

/// `(λ(C₂)/λ(C₀), λ(C₄)/λ(C₀))`.
pub fn exact_chi(rg: &ReweightedGraph<'_>) -> Result<(f64, f64)> {
    let mut z = [0.0f64; 3];
    for_each_subset(rg, |n_odd, _, lambda| match n_odd {
        0 => z[0] += lambda,
        2 => z[1] += lambda,
        4 => z[2] += lambda,
        _ => {}
    })?;
    Ok((z[1] / z[0], z[2] / z[0]))
}

/// Per-edge occupation of the error chains `C ⊕ M` under the cycle measure.
pub fn exact_edge_marginals(rg: &ReweightedGraph<'_>) -> Result<Vec<f64>> {
    let m = rg.reference();
    let mut out = vec![0.0; rg.num_edges()];
    for (c, p) in exact_loop_distribution(rg)? {
        for (e, o) in out.iter_mut().enumerate() {
            if c.contains(e) != m.contains(e) {
                *o += p;
            }
        }
    }
    Ok(out)
}

/// Class marginals of the cycle measure, shifted onto error classes by `L̃[M]`.
pub fn loop_class_probs(rg: &ReweightedGraph<'_>) -> Result<BTreeMap<LogicalClass, f64>> {
    let g = rg.graph();
    let shift = g.measure_logical(rg.reference());
    let mut out: BTreeMap<LogicalClass, f64> = BTreeMap::new();
    for (c, p) in exact_loop_distribution(rg)? {
        let class = LogicalClass(g.measure_logical(&c).xor(&shift));
        *out.entry(class).or_insert(0.0) += p;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dem::parse_dem;
    use crate::graph::DecodingGraph;
    use crate::matching::reference_matching;
    use crate::worm::reweight;

    const REP: &str = "error(0.1) D0 L0\nerror(0.1) D0 D1\nerror(0.1) D1";

    fn label(s: &str) -> LogicalClass {
        LogicalClass(BitSet::from_bit_string(s).unwrap())
    }

    fn triangle(p: f64) -> DecodingGraph {
        DecodingGraph::from_dem(&parse_dem(&format!("error({p}) D0 D1\nerror({p}) D1 D2\nerror({p}) D2 D0")).unwrap())
            .unwrap()
    }

    #[test]
    fn repetition_class_probabilities() {
        let model = parse_dem(REP).unwrap();
        let cp = enumerate_class_probs(&model, &[true, false]).unwrap();
        assert!((cp.prob(&label("1")) - 0.9).abs() < 1e-12);
        assert!((cp.prob(&label("0")) - 0.1).abs() < 1e-12);
        assert_eq!(cp.argmax(), Some(&label("1")));
        let total: f64 = cp.probs.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unreachable_syndrome_gives_empty_map() {
        let model = parse_dem("error(0.1) D0 D1\ndetectors 3").unwrap();
        let cp = enumerate_class_probs(&model, &[false, false, true]).unwrap();
        assert!(cp.probs.is_empty());
        assert!(cp.argmax().is_none());
    }

    #[test]
    fn mechanism_cap() {
        let text: String = (0..25).map(|_| "error(0.1) D0\n").collect();
        let model = parse_dem(&text).unwrap();
        assert!(matches!(
            enumerate_class_probs(&model, &[false]),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn triangle_loop_distribution() {
        let p = 0.2;
        let w: f64 = p / (1.0 - p);
        let g = triangle(p);
        let rg = reweight(&g, g.empty_chain());
        let d = exact_loop_distribution(&rg).unwrap();
        assert_eq!(d.len(), 2);
        let z = 1.0 + w.powi(3);
        assert!((d[&g.empty_chain()] - 1.0 / z).abs() < 1e-12);
        assert!((d[&Chain::from_edges(3, [0, 1, 2])] - w.powi(3) / z).abs() < 1e-12);
    }

    #[test]
    fn reweighted_repetition_loop_distribution() {
        let model = parse_dem(REP).unwrap();
        let g = DecodingGraph::from_dem(&model).unwrap();
        let rg = reweight(&g, Chain::from_edges(3, [0]));
        let d = exact_loop_distribution(&rg).unwrap();
        assert!((d[&g.empty_chain()] - 0.9).abs() < 1e-12);
        assert!((d[&Chain::from_edges(3, [0, 1, 2])] - 0.1).abs() < 1e-12);
        let total: f64 = d.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_susceptibilities() {
        let g = triangle(1.0 / 3.0);
        let rg = reweight(&g, g.empty_chain());
        let (c2, c4) = exact_chi(&rg).unwrap();
        assert!((c2 - 2.0).abs() < 1e-12);
        assert_eq!(c4, 0.0);
        let g = triangle(1e-9);
        let rg = reweight(&g, g.empty_chain());
        let (c2, c4) = exact_chi(&rg).unwrap();
        assert!(c2 < 1e-8 && c4 < 1e-8 && c2 >= 0.0 && c4 >= 0.0);
    }

    #[test]
    fn class_enumeration_matches_loop_marginals() {
        let model = parse_dem(
            "error(0.1) D0 L0\nerror(0.2) D0 D1\nerror(0.15) D1 D2\nerror(0.3) D2\nerror(0.05) D0 D2 L0\nerror(0.12) D1",
        )
        .unwrap();
        let g = DecodingGraph::from_dem(&model).unwrap();
        let joint = enumerate_joint(&model).unwrap();
        for bits in 0u32..8 {
            let s: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
            let direct = joint.class_probs(&s);
            let defects = g.syndrome_defects(&s).unwrap();
            let m = reference_matching(&g, &defects).unwrap();
            let via_loops = loop_class_probs(&reweight(&g, m)).unwrap();
            for (k, p) in &direct.probs {
                assert!((via_loops.get(k).copied().unwrap_or(0.0) - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repetition_mld_failure_rate() {
        // Each syndrome's minority class: total weight of the 4 syndromes'
        // second-best patterns.
        let model = parse_dem(REP).unwrap();
        let joint = enumerate_joint(&model).unwrap();
        let p: f64 = 0.1;
        let q = 1.0 - p;
        let expect = 3.0 * p * p * q + p * p * p;
        assert!((joint.mld_failure_rate() - expect).abs() < 1e-12);
    }
}
