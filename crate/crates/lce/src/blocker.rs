//! Blaming flows and h-length near-lightest path blockers.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::flow::Flow;
use crate::graph::{lightest_h_path_sets, Graph};
use crate::rational::{floor_log2, pow2, qu, to_u64, Q};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Blaming {
    pub flow: Flow,
    /// Blamed edge id per support path.
    pub blame: BTreeMap<Vec<usize>, usize>,
    pub i_star: i64,
    pub j_star: i64,
    /// `val(F̂) / val(F)`, zero for an empty input.
    pub value_ratio: Q,
}

/// Rounds a feasible flow to an integral, ½-blaming flow on a subset of its
/// support. `caps` are the capacities the input is feasible for.
pub fn make_blaming(g: &Graph, caps: &[u64], f: &Flow) -> Result<Blaming> {
    let edge_flow = f.edge_flow(g)?;
    for (&e, x) in &edge_flow {
        if *x > qu(caps[e]) {
            return Err(Error::Precondition(format!("input flow exceeds capacity on edge id {e}")));
        }
    }
    let empty = Blaming { flow: Flow::new(), blame: BTreeMap::new(), i_star: 0, j_star: 0, value_ratio: Q::zero() };
    if f.is_empty() {
        return Ok(empty);
    }
    let ulog = |e: usize| crate::rational::floor_log2_u64(caps[e]);
    // Bucket (i, j) -> paths with min log-capacity i and rounded value 2^j.
    type Bucket<'a> = Vec<(&'a Vec<usize>, Vec<usize>)>;
    let mut buckets: BTreeMap<(i64, i64), Bucket> = BTreeMap::new();
    for (p, x) in f.iter() {
        let es = g.path_edges(p).unwrap();
        let i = es.iter().map(|&e| ulog(e)).min().unwrap();
        let j = floor_log2(x) - 1;
        buckets.entry((i, j)).or_default().push((p, es));
    }
    let ((i_star, j_star), paths) = buckets
        .iter()
        .max_by(|(ka, va), (kb, vb)| {
            let a = pow2(ka.1) * qu(va.len() as u64);
            let b = pow2(kb.1) * qu(vb.len() as u64);
            a.cmp(&b).then(kb.cmp(ka))
        })
        .map(|(k, v)| (*k, v))
        .unwrap();
    debug_assert!(j_star <= i_star);
    let group = 1u64 << (i_star - j_star).min(62);
    // Position of each path in each edge's canonical list, grouped.
    let mut seen_on_edge: BTreeMap<usize, u64> = BTreeMap::new();
    let mut group_of: Vec<Vec<(usize, u64)>> = Vec::with_capacity(paths.len());
    for (_, es) in paths {
        let mut gs = Vec::with_capacity(es.len());
        for &e in es {
            let k = seen_on_edge.entry(e).or_insert(0);
            gs.push((e, *k / group));
            *k += 1;
        }
        group_of.push(gs);
    }
    let amount = pow2(i_star);
    let amount_u = to_u64(&amount).expect("integral since capacities are integers");
    let mut taken: BTreeSet<(usize, u64)> = BTreeSet::new();
    let mut out = Flow::new();
    let mut blame = BTreeMap::new();
    for ((p, es), gs) in paths.iter().zip(&group_of) {
        if gs.iter().any(|k| taken.contains(k)) {
            continue;
        }
        taken.extend(gs.iter().copied());
        let b = *es.iter().find(|&&e| ulog(e) == i_star).unwrap();
        out.add((*p).clone(), qu(amount_u));
        blame.insert((*p).clone(), b);
    }
    let value_ratio = out.value() / f.value();
    Ok(Blaming { flow: out, blame, i_star, j_star, value_ratio })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlamingCheck {
    pub integral: bool,
    pub feasible: bool,
    pub blame_on_path: bool,
    pub unique_blame: bool,
    pub half_blaming: bool,
}

impl BlamingCheck {
    pub fn pass(&self) -> bool {
        self.integral && self.feasible && self.blame_on_path && self.unique_blame && self.half_blaming
    }
}

/// Exact check of integrality, feasibility and ½-blaming against `caps`.
pub fn check_blaming(g: &Graph, caps: &[u64], f: &Flow, blame: &BTreeMap<Vec<usize>, usize>) -> Result<BlamingCheck> {
    let ef = f.edge_flow(g)?;
    let feasible = ef.iter().all(|(&e, x)| *x <= qu(caps[e]));
    let mut blame_on_path = blame.len() == f.len();
    let mut used = BTreeSet::new();
    let mut unique_blame = true;
    let mut half_blaming = true;
    for (p, _) in f.iter() {
        let Some(&b) = blame.get(p) else {
            blame_on_path = false;
            continue;
        };
        if !g.path_edges(p).unwrap().contains(&b) {
            blame_on_path = false;
        }
        if !used.insert(b) {
            unique_blame = false;
        }
        let fe = ef.get(&b).cloned().unwrap_or_else(Q::zero);
        if fe * Q::from_integer(2.into()) < qu(caps[b]) {
            half_blaming = false;
        }
    }
    Ok(BlamingCheck { integral: f.is_integral(), feasible, blame_on_path, unique_blame, half_blaming })
}

#[derive(Clone, Debug)]
pub struct BlamingStep {
    pub flow: Flow,
    pub blame: BTreeMap<Vec<usize>, usize>,
    /// Capacities this step is ½-blaming in.
    pub residual_before: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct Blocker {
    pub flow: Flow,
    pub sequence: Vec<BlamingStep>,
    pub blame_counts: BTreeMap<usize, usize>,
    pub residual: Vec<u64>,
}

pub fn blocker_iteration_cap(g: &Graph, h: u64) -> usize {
    let logn = crate::rational::ceil_log2_u64(g.n() as u64).max(1);
    (64 * h.max(1) * logn) as usize
}

/// h-length (1+ε)-lightest path blocker between `sources` and `targets` for
/// edge weights `weight` and capacities `caps`, decomposed into a ½-blaming
/// sequence.
#[allow(clippy::too_many_arguments)]
pub fn lightest_path_blocker(
    g: &Graph,
    weight: &[f64],
    caps: &[u64],
    sources: &[usize],
    targets: &[usize],
    h: u64,
    eps: f64,
    lambda: f64,
) -> Result<Blocker> {
    lightest_path_blocker_reusing(g, weight, caps, sources, targets, h, eps, lambda, &[])
}

/// Same as [`lightest_path_blocker`], but each batch first saturates the
/// `preferred` paths that are still near-lightest, lightest first, before
/// searching for new ones. Entries that are not h-length paths from a source
/// to a target are ignored.
#[allow(clippy::too_many_arguments)]
pub fn lightest_path_blocker_reusing(
    g: &Graph,
    weight: &[f64],
    caps: &[u64],
    sources: &[usize],
    targets: &[usize],
    h: u64,
    eps: f64,
    lambda: f64,
    preferred: &[Vec<usize>],
) -> Result<Blocker> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Invalid(format!("blocker eps must be positive, got {eps}")));
    }
    let mut is_target = vec![false; g.n()];
    for &t in targets {
        is_target[t] = true;
    }
    let all: Vec<Option<f64>> = weight.iter().map(|&w| Some(w)).collect();
    if let Some(p) = lightest_h_path_sets(g, &all, sources, &is_target, h)? {
        if lambda > p.weight * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::Precondition(format!(
                "lambda {lambda} exceeds the lightest h-length weight {}",
                p.weight
            )));
        }
    }
    let threshold = (1.0 + eps) * lambda;
    let mut is_source = vec![false; g.n()];
    for &x in sources {
        is_source[x] = true;
    }
    let mut reuse: Vec<(f64, &Vec<usize>, Vec<usize>)> = preferred
        .iter()
        .filter(|p| p.len() >= 2 && is_source[p[0]] && is_target[*p.last().unwrap()])
        .filter_map(|p| {
            let es = g.path_edges(p)?;
            let len: u64 = es.iter().map(|&e| g.edge(e).length).sum();
            let w: f64 = es.iter().map(|&e| weight[e]).sum();
            (len <= h && w <= threshold).then_some((w, p, es))
        })
        .collect();
    reuse.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut residual = caps.to_vec();
    let mut flow = Flow::new();
    let mut sequence = Vec::new();
    let mut blame_counts: BTreeMap<usize, usize> = BTreeMap::new();
    let cap = blocker_iteration_cap(g, h);
    loop {
        let mut work = residual.clone();
        let mut batch = Flow::new();
        for (_, p, es) in &reuse {
            let bottleneck = es.iter().map(|&e| work[e]).min().unwrap();
            if bottleneck > 0 {
                for &e in es {
                    work[e] -= bottleneck;
                }
                batch.add((*p).clone(), qu(bottleneck));
            }
        }
        loop {
            let usable: Vec<Option<f64>> =
                weight.iter().zip(&work).map(|(&w, &r)| if r > 0 { Some(w) } else { None }).collect();
            let Some(p) = lightest_h_path_sets(g, &usable, sources, &is_target, h)? else { break };
            if p.weight > threshold || p.edges.is_empty() {
                break;
            }
            let bottleneck = p.edges.iter().map(|&e| work[e]).min().unwrap();
            for &e in &p.edges {
                work[e] -= bottleneck;
            }
            batch.add(p.vertices, qu(bottleneck));
        }
        if batch.is_empty() {
            break;
        }
        if sequence.len() >= cap {
            return Err(Error::IterationCap(format!("path blocker exceeded {cap} rounds")));
        }
        let b = make_blaming(g, &residual, &batch)?;
        let before = residual.clone();
        for (e, x) in b.flow.edge_flow(g)? {
            residual[e] -= to_u64(&x).unwrap();
        }
        for &e in b.blame.values() {
            *blame_counts.entry(e).or_insert(0) += 1;
        }
        flow = flow.plus(&b.flow);
        sequence.push(BlamingStep { flow: b.flow, blame: b.blame, residual_before: before });
    }
    Ok(Blocker { flow, sequence, blame_counts, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn single_path_example() {
        let g = Graph::from_tuples(3, &[(0, 1, 1, 4), (1, 2, 1, 4)]).unwrap();
        let mut f = Flow::new();
        f.add(vec![0, 1, 2], q(3));
        let b = make_blaming(&g, &[4, 4], &f).unwrap();
        assert_eq!((b.i_star, b.j_star), (2, 0));
        assert_eq!(b.flow.get(&[0, 1, 2]), q(4));
        assert_eq!(b.blame[&vec![0, 1, 2]], 0);
        assert!(check_blaming(&g, &[4, 4], &b.flow, &b.blame).unwrap().pass());
    }

    #[test]
    fn shared_edge_example() {
        // 0-1 cap 2 shared, then 1-2 and 1-3 cap 8
        let g = Graph::from_tuples(4, &[(0, 1, 1, 2), (1, 2, 1, 8), (1, 3, 1, 8)]).unwrap();
        let mut f = Flow::new();
        f.add(vec![0, 1, 2], q(1));
        f.add(vec![0, 1, 3], q(1));
        let b = make_blaming(&g, &[2, 8, 8], &f).unwrap();
        assert_eq!((b.i_star, b.j_star), (1, -1));
        assert_eq!(b.flow.len(), 1);
        assert_eq!(b.flow.get(&[0, 1, 2]), q(2));
        assert_eq!(b.blame[&vec![0, 1, 2]], 0);
        assert!(make_blaming(&g, &[2, 8, 8], &Flow::new()).unwrap().flow.is_empty());
    }

    #[test]
    fn blocker_examples() {
        let k2 = Graph::from_tuples(2, &[(0, 1, 1, 3)]).unwrap();
        let b = lightest_path_blocker(&k2, &[0.0], &[3], &[0], &[1], 1, 0.5, 0.0).unwrap();
        assert_eq!(b.flow.get(&[0, 1]), q(3));
        let far = Graph::from_tuples(2, &[(0, 1, 5, 3)]).unwrap();
        assert!(lightest_path_blocker(&far, &[0.0], &[3], &[0], &[1], 2, 0.5, 0.0).unwrap().flow.is_empty());
        // routes 0-1-3 (weight 1) and 0-2-3 (weight 3)
        let g = Graph::from_tuples(4, &[(0, 1, 1, 2), (1, 3, 1, 2), (0, 2, 1, 2), (2, 3, 1, 2)]).unwrap();
        let w = [0.5, 0.5, 1.5, 1.5];
        let b = lightest_path_blocker(&g, &w, &[2; 4], &[0], &[3], 2, 0.5, 1.0).unwrap();
        assert_eq!(b.residual[0].min(b.residual[1]), 0);
        assert_eq!(b.residual[2], 2);
        assert!(lightest_path_blocker(&g, &w, &[2; 4], &[0], &[3], 2, 0.5, 1.5).is_err());
    }

    #[test]
    fn preferred_paths_are_used_first() {
        // Two equally light routes 0-1-3 and 0-2-3; preferring the second
        // makes the blocker route there before the lightest-path search.
        let g = Graph::unit(4, &[(0, 1), (1, 3), (0, 2), (2, 3)]).unwrap();
        let w = [1.0; 4];
        let b = lightest_path_blocker_reusing(&g, &w, &[1; 4], &[0], &[3], 2, 0.5, 2.0, &[vec![0, 2, 3]]).unwrap();
        assert_eq!(b.sequence[0].flow.get(&[0, 2, 3]), q(1));
        assert_eq!(b.flow.value(), q(2));
        let junk = [vec![3, 2, 0], vec![0, 1], vec![0, 3]];
        let plain = lightest_path_blocker_reusing(&g, &w, &[1; 4], &[0], &[3], 2, 0.5, 2.0, &junk).unwrap();
        assert_eq!(plain.flow, lightest_path_blocker(&g, &w, &[1; 4], &[0], &[3], 2, 0.5, 2.0).unwrap().flow);
    }
}
