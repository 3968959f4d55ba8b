//! Exact references for small instances: h-length max flow with its dual
//! moving cut, demand-size of a cut, and length-constrained and classic
//! sparsity.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::flow::Flow;
use crate::graph::{apply_cut, Demand, Graph, MovingCut, NodeWeighting};
use crate::lp::{self, Packing};
use crate::maxflow::{Network, INF};
use crate::rational::{qu, ExtQ, Q};
use crate::{invalid, Error, Result};

pub const DEFAULT_PATH_CAP: usize = 100_000;

/// How path budgets are measured during enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Length(u64),
    Hops(usize),
}

/// Simple paths from a source to a target, with no interior source or target
/// vertex, within the budget. Output is sorted lexicographically.
pub fn enumerate_paths(
    g: &Graph,
    sources: &[usize],
    targets: &[usize],
    budget: Budget,
    cap: usize,
    found_so_far: usize,
) -> Result<Vec<Vec<usize>>> {
    let mut is_source = vec![false; g.n()];
    let mut is_target = vec![false; g.n()];
    for &s in sources {
        is_source[s] = true;
    }
    for &t in targets {
        is_target[t] = true;
    }
    if let Some(&x) = sources.iter().find(|&&s| is_target[s]) {
        return invalid(format!("vertex {x} is both a source and a target"));
    }
    let mut out = Vec::new();
    let mut on_path = vec![false; g.n()];
    let mut ss: Vec<usize> = sources.to_vec();
    ss.sort_unstable();
    ss.dedup();
    for s in ss {
        let mut path = vec![s];
        on_path[s] = true;
        dfs(g, &is_source, &is_target, budget, 0, &mut path, &mut on_path, &mut out, cap, found_so_far)?;
        on_path[s] = false;
    }
    out.sort();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    g: &Graph,
    is_source: &[bool],
    is_target: &[bool],
    budget: Budget,
    used: u64,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
    cap: usize,
    found_so_far: usize,
) -> Result<()> {
    let x = *path.last().unwrap();
    for &(y, e) in g.neighbors(x) {
        if y == x || on_path[y] || is_source[y] {
            continue;
        }
        let next = match budget {
            Budget::Length(h) => {
                let nl = used + g.edge(e).length;
                if nl > h {
                    continue;
                }
                nl
            }
            Budget::Hops(t) => {
                if path.len() > t {
                    continue;
                }
                used + 1
            }
        };
        path.push(y);
        if is_target[y] {
            out.push(path.clone());
            if out.len() + found_so_far > cap {
                return Err(Error::PathExplosion { count: out.len() + found_so_far, cap });
            }
        } else {
            on_path[y] = true;
            dfs(g, is_source, is_target, budget, next, path, on_path, out, cap, found_so_far)?;
            on_path[y] = false;
        }
        path.pop();
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct MaxflowResult {
    pub value: Q,
    pub flow: Flow,
    /// Optimal fractional h-length cut, one value per edge id.
    pub cut: Vec<Q>,
    pub paths: usize,
}

/// Optimal fractional packing of h-length `S_i`-`T_i` paths; the LP duals give
/// a minimum fractional moving cut of the same size.
pub fn exact_hlength_maxflow(
    g: &Graph,
    pairs: &[(Vec<usize>, Vec<usize>)],
    h: u64,
    cap: usize,
) -> Result<MaxflowResult> {
    let mut all: Vec<Vec<usize>> = Vec::new();
    for (s, t) in pairs {
        let ps = enumerate_paths(g, s, t, Budget::Length(h), cap, all.len())?;
        all.extend(ps);
    }
    all.sort();
    all.dedup();
    let columns: Vec<Vec<(usize, Q)>> = all
        .iter()
        .map(|p| {
            let mut es = g.path_edges(p).unwrap();
            es.sort_unstable();
            es.into_iter().map(|e| (e, Q::from_integer(1.into()))).collect()
        })
        .collect();
    let lp = Packing {
        rows: g.m(),
        objective: vec![Q::from_integer(1.into()); all.len()],
        rhs: g.edges().iter().map(|e| qu(e.capacity)).collect(),
        columns,
    };
    let sol = lp::solve(&lp)?;
    let mut flow = Flow::new();
    for (p, x) in all.iter().zip(&sol.x) {
        flow.add(p.clone(), x.clone());
    }
    Ok(MaxflowResult { value: sol.value, flow, cut: sol.duals, paths: all.len() })
}

#[derive(Clone, Debug)]
pub struct ConcurrentResult {
    /// Minimum congestion, infinite if some commodity cannot be routed.
    pub congestion: ExtQ,
    /// A flow routing the demand exactly at that congestion.
    pub flow: Flow,
    pub paths: usize,
}

/// Minimum-congestion routing of `d` over paths within `budget`.
pub fn min_congestion_routing(g: &Graph, d: &Demand, budget: Budget, cap: usize) -> Result<ConcurrentResult> {
    let commodities: Vec<((usize, usize), Q)> =
        d.iter().filter(|((u, v), _)| u != v).map(|(k, x)| (k, x.clone())).collect();
    if commodities.is_empty() {
        return Ok(ConcurrentResult { congestion: ExtQ::Finite(Q::zero()), flow: Flow::new(), paths: 0 });
    }
    let mut cols: Vec<(usize, Vec<usize>)> = Vec::new();
    for (k, ((u, v), _)) in commodities.iter().enumerate() {
        let ps = enumerate_paths(g, &[*u], &[*v], budget, cap, cols.len())?;
        if ps.is_empty() {
            return Ok(ConcurrentResult { congestion: ExtQ::Infinite, flow: Flow::new(), paths: cols.len() });
        }
        cols.extend(ps.into_iter().map(|p| (k, p)));
    }
    let m = g.m();
    let one = Q::from_integer(1.into());
    let mut columns: Vec<Vec<(usize, Q)>> = Vec::with_capacity(cols.len() + 1);
    // column 0 is the concurrent rate mu
    columns.push(commodities.iter().enumerate().map(|(k, (_, x))| (m + k, x.clone())).collect());
    for (k, p) in &cols {
        let mut es = g.path_edges(p).unwrap();
        es.sort_unstable();
        let mut col: Vec<(usize, Q)> = es.into_iter().map(|e| (e, one.clone())).collect();
        col.push((m + k, -one.clone()));
        columns.push(col);
    }
    let mut objective = vec![Q::zero(); columns.len()];
    objective[0] = one.clone();
    let mut rhs: Vec<Q> = g.edges().iter().map(|e| qu(e.capacity)).collect();
    rhs.extend(std::iter::repeat_n(Q::zero(), commodities.len()));
    let sol = lp::solve(&Packing { rows: m + commodities.len(), columns, objective, rhs })?;
    let mu = sol.value;
    if mu.is_zero() {
        return Ok(ConcurrentResult { congestion: ExtQ::Infinite, flow: Flow::new(), paths: cols.len() });
    }
    // Scale so each commodity is routed exactly once; surplus is trimmed in order.
    let mut flow = Flow::new();
    let mut need: Vec<Q> = commodities.iter().map(|(_, x)| x.clone()).collect();
    for ((k, p), x) in cols.iter().zip(&sol.x[1..]) {
        let amount = x / &mu;
        let take = if amount < need[*k] { amount } else { need[*k].clone() };
        need[*k] -= &take;
        flow.add(p.clone(), take);
    }
    debug_assert!(need.iter().all(|x| x.is_zero()));
    Ok(ConcurrentResult { congestion: ExtQ::Finite(one / mu), flow, paths: cols.len() })
}

/// Ordered pairs `(u, v)` with `d_G(u,v) <= h` and `d_{G-C}(u,v) > h·s`.
pub fn separated_pairs(g: &Graph, c: &MovingCut, h: u64, s: u64, among: &[usize]) -> Result<Vec<(usize, usize)>> {
    let gc = apply_cut(g, c)?;
    let hs = h.saturating_mul(s);
    let mut out = Vec::new();
    for &u in among {
        let d0 = g.distances_from(&[u], Some(h));
        let d1 = gc.distances_from(&[u], Some(hs));
        for &v in among {
            if v != u && d0[v].within(h) && d1[v].exceeds(hs) {
                out.push((u, v));
            }
        }
    }
    Ok(out)
}

/// Largest A-respecting h-length demand that `C` hs-separates, by b-matching.
pub fn demand_size(g: &Graph, c: &MovingCut, a: &NodeWeighting, h: u64, s: u64) -> Result<(Q, Demand)> {
    let supp = a.support();
    if supp.iter().any(|&v| v >= g.n()) {
        return invalid("node-weighting support outside the graph");
    }
    let pairs = separated_pairs(g, c, h, s, &supp)?;
    let k = supp.len();
    let pos: BTreeMap<usize, usize> = supp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let (src, sink) = (2 * k, 2 * k + 1);
    let mut net = Network::new(2 * k + 2);
    for (i, &v) in supp.iter().enumerate() {
        net.add_arc(src, i, a.get(v));
        net.add_arc(k + i, sink, a.get(v));
    }
    let handles: Vec<usize> = pairs.iter().map(|&(u, v)| net.add_arc(pos[&u], k + pos[&v], INF)).collect();
    let value = net.max_flow(src, sink);
    let mut d = Demand::new();
    for (&(u, v), &hd) in pairs.iter().zip(&handles) {
        d.add(u, v, qu(net.flow_on(hd)));
    }
    Ok((qu(value), d))
}

pub fn cut_sparsity(g: &Graph, c: &MovingCut, a: &NodeWeighting, h: u64, s: u64) -> Result<ExtQ> {
    let (ds, _) = demand_size(g, c, a, h, s)?;
    if ds.is_zero() {
        return Ok(ExtQ::Infinite);
    }
    Ok(ExtQ::Finite(c.size(g) / ds))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicSparsity {
    pub sparsity: Q,
    pub cut_size: u64,
    pub witness_volume: u64,
    /// Component id per vertex in `G - C`; ids follow the smallest member.
    pub components: Vec<usize>,
    /// The excluded maximum-volume component.
    pub heaviest: usize,
}

/// Capacity-weighted `|C| / vol(witness components)`, with degrees taken in `g`.
/// Among maximum-volume components the one with the largest id is excluded, so
/// a tie keeps the smallest component id among the witnesses.
pub fn classic_cut_sparsity(g: &Graph, cut: &[usize]) -> Result<ClassicSparsity> {
    if g.components().iter().any(|&c| c != 0) {
        return Err(Error::Precondition("classic sparsity needs a connected graph".into()));
    }
    let mut removed = vec![false; g.m()];
    for &e in cut {
        if e >= g.m() {
            return Err(Error::UnknownEdge(format!("edge id {e}")));
        }
        removed[e] = true;
    }
    let kept: Vec<_> = g.edges().iter().enumerate().filter(|(i, _)| !removed[*i]).map(|(_, e)| e.clone()).collect();
    let rest = Graph::new(g.n(), kept)?;
    let comp = rest.components();
    let count = comp.iter().max().map_or(0, |x| x + 1);
    if count < 2 {
        return invalid("edge set does not disconnect the graph");
    }
    let mut vol = vec![0u64; count];
    for v in 0..g.n() {
        vol[comp[v]] += g.degree(v);
    }
    let heaviest = (0..count).rev().max_by_key(|&i| (vol[i], i)).unwrap();
    let witness_volume: u64 = (0..count).filter(|&i| i != heaviest).map(|i| vol[i]).sum();
    let cut_size: u64 = cut.iter().map(|&e| g.edge(e).capacity).sum();
    if witness_volume == 0 {
        return invalid("witness components have zero volume");
    }
    Ok(ClassicSparsity {
        sparsity: Q::new(cut_size.into(), witness_volume.into()),
        cut_size,
        witness_volume,
        components: comp,
        heaviest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};

    #[test]
    fn maxflow_examples() {
        let k2 = Graph::from_tuples(2, &[(0, 1, 1, 5)]).unwrap();
        let r = exact_hlength_maxflow(&k2, &[(vec![0], vec![1])], 1, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(r.value, q(5));
        assert_eq!(r.cut, vec![q(1)]);
        let split = Graph::unit(2, &[]).unwrap();
        assert_eq!(exact_hlength_maxflow(&split, &[(vec![0], vec![1])], 3, 10).unwrap().value, q(0));
        let p3 = Graph::unit(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(exact_hlength_maxflow(&p3, &[(vec![0], vec![2])], 2, 10).unwrap().value, q(1));
        assert_eq!(exact_hlength_maxflow(&p3, &[(vec![0], vec![2])], 1, 10).unwrap().value, q(0));
    }

    #[test]
    fn path_cap_is_enforced() {
        let mut edges = Vec::new();
        for u in 0..7 {
            for v in u + 1..7 {
                edges.push((u, v));
            }
        }
        let k7 = Graph::unit(7, &edges).unwrap();
        let err = exact_hlength_maxflow(&k7, &[(vec![0], vec![1])], 6, 20).unwrap_err();
        assert!(matches!(err, Error::PathExplosion { cap: 20, .. }));
    }

    #[test]
    fn demand_size_examples() {
        let k2 = Graph::unit(2, &[(0, 1)]).unwrap();
        let a = NodeWeighting::from_iter([(0, 1), (1, 1)]);
        let c = MovingCut::full(1, [0]);
        let (v, w) = demand_size(&k2, &c, &a, 1, 1).unwrap();
        assert_eq!(v, q(2));
        assert_eq!(w.get(0, 1), q(1));
        assert_eq!(w.get(1, 0), q(1));
        assert_eq!(demand_size(&k2, &MovingCut::new(1), &a, 1, 1).unwrap().0, q(0));
        assert_eq!(demand_size(&k2, &c, &NodeWeighting::new(), 1, 1).unwrap().0, q(0));
        assert_eq!(cut_sparsity(&k2, &c, &a, 1, 1).unwrap(), ExtQ::Finite(qr(1, 2)));
        assert_eq!(cut_sparsity(&k2, &MovingCut::new(1), &a, 1, 1).unwrap(), ExtQ::Infinite);
    }

    #[test]
    fn classic_examples() {
        let p3 = Graph::unit(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(classic_cut_sparsity(&p3, &[1]).unwrap().sparsity, q(1));
        let p4 = Graph::unit(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let r = classic_cut_sparsity(&p4, &[1]).unwrap();
        assert_eq!(r.sparsity, qr(1, 3));
        assert_eq!(r.heaviest, 1);
        let star = Graph::unit(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(classic_cut_sparsity(&star, &[0]).unwrap().sparsity, q(1));
        assert!(classic_cut_sparsity(&p3, &[]).is_err());
    }

    #[test]
    fn concurrent_routing_on_a_triangle() {
        let tri = Graph::unit(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let mut d = Demand::new();
        d.add(0, 1, q(3));
        let r = min_congestion_routing(&tri, &d, Budget::Hops(2), 100).unwrap();
        assert_eq!(r.congestion, ExtQ::Finite(qr(3, 2)));
        assert_eq!(crate::flow::routed_demand(&r.flow), d);
        let r1 = min_congestion_routing(&tri, &d, Budget::Hops(1), 100).unwrap();
        assert_eq!(r1.congestion, ExtQ::Finite(q(3)));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn demand_size_witness_is_separated_and_respecting(seed in 0u64..1000, h in 1u64..3, s in 1u64..3) {
            let g = crate::gen::random_connected(7, 10, 1, 2, seed);
            let scale = h * s;
            let mut c = MovingCut::new(scale);
            c.set((seed as usize) % g.m(), scale).unwrap();
            let a = g.degree_weighting();
            let (size, d) = demand_size(&g, &c, &a, h, s).unwrap();
            proptest::prop_assert_eq!(d.size(), size.clone());
            let rep = crate::graph::demand_report(&d, &a, &g, h);
            proptest::prop_assert!(rep.respecting && rep.h_length);
            let gc = apply_cut(&g, &c).unwrap();
            proptest::prop_assert_eq!(crate::graph::separated_amount(&gc, &d, h * s), size);
        }
    }
}
