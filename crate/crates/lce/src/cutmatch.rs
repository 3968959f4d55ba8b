//! Multi-commodity h-length φ-sparse cutmatches.
//!
//! Mass is routed greedily and integrally over h-length paths at capacities
//! `⌊γ·U_e⌋`, starting from `γ = ⌈1/φ⌉`. Once no h-length residual path joins
//! an unmatched source to an unmatched sink of the same pair, the saturated
//! edges (as a full cut) separate every pair's unmatched parts; the cut is
//! pruned edge by edge while separation survives. If it is still larger than
//! `φ` times the unrouted mass, `γ` doubles and routing restarts. Once `γ`
//! exceeds the total mass no positive-capacity edge can saturate, so the loop
//! ends. Every invariant is re-checked exactly before returning.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;

use crate::flow::Flow;
use crate::graph::{apply_cut, lightest_h_path_sets, Graph, MovingCut, NodeWeighting};
use crate::mwu::greedy_batching;
use crate::rational::{fmt_q, qu, Q};
use crate::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairOutcome {
    pub matched: Vec<usize>,
    pub unmatched: Vec<usize>,
    pub matched_sink: Vec<usize>,
    pub unmatched_sink: Vec<usize>,
    pub flow: Flow,
}

#[derive(Clone, Debug)]
pub struct CutmatchResult {
    pub pairs: Vec<PairOutcome>,
    /// Full cut at scale `h` on the retained edges.
    pub cut: MovingCut,
    pub gamma: u64,
    pub value: u64,
    pub total_mass: u64,
    pub batches: usize,
    pub restarts: usize,
}

impl CutmatchResult {
    pub fn flow(&self) -> Flow {
        self.pairs.iter().fold(Flow::new(), |acc, p| acc.plus(&p.flow))
    }

    pub fn deficit(&self) -> u64 {
        self.total_mass - self.value
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CutmatchCheck {
    pub partition: bool,
    pub send: bool,
    pub receive: bool,
    pub flow_shape: bool,
    pub separation: bool,
    pub size_bound: bool,
    pub congestion: bool,
    pub cut_size: String,
    pub size_budget: String,
}

impl CutmatchCheck {
    pub fn pass(&self) -> bool {
        self.partition && self.send && self.receive && self.flow_shape && self.separation && self.size_bound && self.congestion
    }
}

fn check_inputs(g: &Graph, pairs: &[(NodeWeighting, NodeWeighting)]) -> Result<()> {
    for (i, (a, b)) in pairs.iter().enumerate() {
        if a.size() != b.size() {
            return invalid(format!("pair {i}: sizes {} and {} differ", a.size(), b.size()));
        }
        if a.support().iter().any(|v| b.get(*v) > 0) {
            return invalid(format!("pair {i}: supports overlap"));
        }
        if a.max_vertex().into_iter().chain(b.max_vertex()).any(|v| v >= g.n()) {
            return invalid(format!("pair {i}: support outside the graph"));
        }
    }
    Ok(())
}

pub fn cutmatch(g: &Graph, pairs: &[(NodeWeighting, NodeWeighting)], h: u64, phi: &Q) -> Result<CutmatchResult> {
    check_inputs(g, pairs)?;
    if h == 0 || *phi <= Q::zero() {
        return invalid("cutmatch needs h >= 1 and phi > 0");
    }
    let vertex_sets: Vec<(Vec<usize>, Vec<usize>)> = pairs.iter().map(|(a, b)| (a.support(), b.support())).collect();
    let batch = greedy_batching(g, &vertex_sets, h);
    let batches = batch.iter().max().map_or(0, |b| b + 1);
    let total_mass: u64 = pairs.iter().map(|(a, _)| a.size()).sum();
    let mut gamma: u64 = 1;
    let mut restarts = 0;
    loop {
        let res = route_and_cut(g, pairs, h, gamma, total_mass, batches, restarts)?;
        let budget = phi * qu(res.deficit());
        if res.cut.size(g) <= budget {
            let check = verify_cutmatch(g, pairs, h, phi, &res)?;
            if !check.pass() {
                return Err(Error::Invalid(format!("cutmatch self-check failed: {check:?}")));
            }
            return Ok(res);
        }
        if gamma > total_mass.saturating_mul(2).max(1) {
            return Err(Error::IterationCap(format!("cutmatch gamma {gamma} exceeded the total mass bound")));
        }
        gamma = gamma.saturating_mul(2);
        restarts += 1;
    }
}

fn route_and_cut(
    g: &Graph,
    pairs: &[(NodeWeighting, NodeWeighting)],
    h: u64,
    gamma: u64,
    total_mass: u64,
    batches: usize,
    restarts: usize,
) -> Result<CutmatchResult> {
    let mut residual: Vec<u64> = g.edges().iter().map(|e| e.capacity.saturating_mul(gamma)).collect();
    let mut send: Vec<BTreeMap<usize, u64>> = pairs.iter().map(|(a, _)| a.iter().collect()).collect();
    let mut recv: Vec<BTreeMap<usize, u64>> = pairs.iter().map(|(_, b)| b.iter().collect()).collect();
    let mut flows = vec![Flow::new(); pairs.len()];
    let mut active: Vec<bool> = vec![true; pairs.len()];
    let mut value = 0u64;
    while active.iter().any(|&a| a) {
        for i in 0..pairs.len() {
            if !active[i] {
                continue;
            }
            let sources: Vec<usize> = send[i].iter().filter(|(_, &x)| x > 0).map(|(&v, _)| v).collect();
            let mut is_t = vec![false; g.n()];
            for (&v, &x) in &recv[i] {
                if x > 0 {
                    is_t[v] = true;
                }
            }
            if sources.is_empty() || !is_t.iter().any(|&b| b) {
                active[i] = false;
                continue;
            }
            let w: Vec<Option<f64>> = residual.iter().map(|&r| if r > 0 { Some(1.0 / r as f64) } else { None }).collect();
            let Some(p) = lightest_h_path_sets(g, &w, &sources, &is_t, h)? else {
                active[i] = false;
                continue;
            };
            let (u, v) = (p.vertices[0], *p.vertices.last().unwrap());
            let amount = p.edges.iter().map(|&e| residual[e]).min().unwrap().min(send[i][&u]).min(recv[i][&v]);
            for &e in &p.edges {
                residual[e] -= amount;
            }
            *send[i].get_mut(&u).unwrap() -= amount;
            *recv[i].get_mut(&v).unwrap() -= amount;
            flows[i].add(p.vertices, qu(amount));
            value += amount;
        }
    }
    let unmatched: Vec<(Vec<usize>, Vec<usize>)> = (0..pairs.len())
        .map(|i| {
            (
                send[i].iter().filter(|(_, &x)| x > 0).map(|(&v, _)| v).collect(),
                recv[i].iter().filter(|(_, &x)| x > 0).map(|(&v, _)| v).collect(),
            )
        })
        .collect();
    let mut cut_edges: Vec<usize> = (0..g.m()).filter(|&e| residual[e] == 0).collect();
    cut_edges.sort_by_key(|&e| (std::cmp::Reverse(g.edge(e).capacity), e));
    let mut keep: Vec<bool> = vec![false; g.m()];
    for &e in &cut_edges {
        keep[e] = true;
    }
    let separated = |keep: &[bool]| -> Result<bool> {
        let c = MovingCut::full(h, (0..g.m()).filter(|&e| keep[e]));
        let gc = apply_cut(g, &c)?;
        Ok(unmatched.iter().all(|(us, ut)| {
            us.is_empty() || ut.is_empty() || {
                let d = gc.distances_from(us, Some(h));
                ut.iter().all(|&v| d[v].exceeds(h))
            }
        }))
    };
    debug_assert!(separated(&keep)?);
    for &e in &cut_edges {
        if g.edge(e).capacity == 0 {
            continue;
        }
        keep[e] = false;
        if !separated(&keep)? {
            keep[e] = true;
        }
    }
    let cut = MovingCut::full(h, (0..g.m()).filter(|&e| keep[e]));
    let outcomes = (0..pairs.len())
        .map(|i| {
            let (a, b) = &pairs[i];
            let (us, ut) = &unmatched[i];
            PairOutcome {
                matched: a.support().into_iter().filter(|v| !us.contains(v)).collect(),
                unmatched: us.clone(),
                matched_sink: b.support().into_iter().filter(|v| !ut.contains(v)).collect(),
                unmatched_sink: ut.clone(),
                flow: std::mem::take(&mut flows[i]),
            }
        })
        .collect();
    Ok(CutmatchResult { pairs: outcomes, cut, gamma, value, total_mass, batches, restarts })
}

/// Exact re-check of every cutmatch requirement.
pub fn verify_cutmatch(
    g: &Graph,
    pairs: &[(NodeWeighting, NodeWeighting)],
    h: u64,
    phi: &Q,
    r: &CutmatchResult,
) -> Result<CutmatchCheck> {
    let mut partition = r.pairs.len() == pairs.len();
    let mut send_ok = true;
    let mut recv_ok = true;
    let mut shape = true;
    let mut total = Q::zero();
    for ((a, b), o) in pairs.iter().zip(&r.pairs) {
        let mut ms: Vec<usize> = o.matched.iter().chain(&o.unmatched).copied().collect();
        ms.sort_unstable();
        let mut mt: Vec<usize> = o.matched_sink.iter().chain(&o.unmatched_sink).copied().collect();
        mt.sort_unstable();
        partition &= ms == a.support() && mt == b.support();
        partition &= o.matched.iter().all(|v| !o.unmatched.contains(v));
        partition &= o.matched_sink.iter().all(|v| !o.unmatched_sink.contains(v));
        let mut out: BTreeMap<usize, Q> = BTreeMap::new();
        let mut inn: BTreeMap<usize, Q> = BTreeMap::new();
        shape &= o.flow.is_integral();
        for (p, x) in o.flow.iter() {
            shape &= g.path_length(p).is_some_and(|l| l <= h);
            *out.entry(p[0]).or_insert_with(Q::zero) += x;
            *inn.entry(*p.last().unwrap()).or_insert_with(Q::zero) += x;
            total += x;
        }
        for (v, x) in &out {
            send_ok &= *x <= qu(a.get(*v));
        }
        for (v, x) in &inn {
            recv_ok &= *x <= qu(b.get(*v));
        }
        for &v in &o.matched {
            send_ok &= out.get(&v).cloned().unwrap_or_else(Q::zero) == qu(a.get(v));
        }
        for &v in &o.unmatched {
            send_ok &= out.get(&v).cloned().unwrap_or_else(Q::zero) < qu(a.get(v));
        }
        for &v in &o.matched_sink {
            recv_ok &= inn.get(&v).cloned().unwrap_or_else(Q::zero) == qu(b.get(v));
        }
        for &v in &o.unmatched_sink {
            recv_ok &= inn.get(&v).cloned().unwrap_or_else(Q::zero) < qu(b.get(v));
        }
    }
    shape &= total == qu(r.value);
    let gc = apply_cut(g, &r.cut)?;
    let separation = r.cut.scale == h
        && r.pairs.iter().all(|o| {
            o.unmatched.is_empty() || {
                let d = gc.distances_from(&o.unmatched, Some(h));
                o.unmatched_sink.iter().all(|&v| d[v].exceeds(h))
            }
        });
    let mass: u64 = pairs.iter().map(|(a, _)| a.size()).sum();
    let budget = phi * (qu(mass) - &total);
    let size = r.cut.size(g);
    let ef = r.flow().edge_flow(g)?;
    let congestion = ef.iter().all(|(&e, x)| *x <= qu(g.edge(e).capacity.saturating_mul(r.gamma)));
    Ok(CutmatchCheck {
        partition,
        send: send_ok,
        receive: recv_ok,
        flow_shape: shape,
        separation,
        size_bound: size <= budget,
        congestion,
        cut_size: fmt_q(&size),
        size_budget: fmt_q(&budget),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn unit_pair(u: usize, v: usize) -> Vec<(NodeWeighting, NodeWeighting)> {
        vec![(NodeWeighting::from_iter([(u, 1)]), NodeWeighting::from_iter([(v, 1)]))]
    }

    #[test]
    fn adjacent_pair_is_matched() {
        let g = Graph::unit(2, &[(0, 1)]).unwrap();
        let r = cutmatch(&g, &unit_pair(0, 1), 2, &q(1)).unwrap();
        assert_eq!(r.pairs[0].matched, vec![0]);
        assert_eq!(r.pairs[0].matched_sink, vec![1]);
        assert_eq!(r.value, 1);
        assert!(r.cut.size(&g).is_zero());
    }

    #[test]
    fn separate_components_stay_unmatched() {
        let g = Graph::unit(2, &[]).unwrap();
        let r = cutmatch(&g, &unit_pair(0, 1), 2, &q(1)).unwrap();
        assert_eq!(r.pairs[0].unmatched, vec![0]);
        assert_eq!(r.pairs[0].unmatched_sink, vec![1]);
        assert!(r.cut.is_zero());
    }

    #[test]
    fn zero_capacity_edge_is_cut_for_free() {
        let g = Graph::from_tuples(2, &[(0, 1, 1, 0)]).unwrap();
        let r = cutmatch(&g, &unit_pair(0, 1), 2, &q(1)).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.cut.numerator(0), 2);
        assert!(r.cut.size(&g).is_zero());
    }

    #[test]
    fn rejects_bad_pairs() {
        let g = Graph::unit(2, &[(0, 1)]).unwrap();
        let uneven = vec![(NodeWeighting::from_iter([(0, 2)]), NodeWeighting::from_iter([(1, 1)]))];
        assert!(cutmatch(&g, &uneven, 1, &q(1)).is_err());
        let overlap = vec![(NodeWeighting::from_iter([(0, 1)]), NodeWeighting::from_iter([(0, 1)]))];
        assert!(cutmatch(&g, &overlap, 1, &q(1)).is_err());
    }

    #[test]
    fn bottleneck_is_cut_when_sparse_enough() {
        // two triangles joined by a bridge; four units must cross it
        let g = Graph::unit(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]).unwrap();
        let a = NodeWeighting::from_iter([(0, 2), (1, 2)]);
        let b = NodeWeighting::from_iter([(4, 2), (5, 2)]);
        let pairs = vec![(a, b)];
        let r = cutmatch(&g, &pairs, 4, &Q::new(1.into(), 2.into())).unwrap();
        assert!(verify_cutmatch(&g, &pairs, 4, &Q::new(1.into(), 2.into()), &r).unwrap().pass());
        assert_eq!(r.gamma, 1);
        assert_eq!(r.value, 1);
        assert_eq!(r.cut.support(), vec![3]);
    }
}
