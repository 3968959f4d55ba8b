//! Multiplicative-weights h-length multicommodity flow with a matching moving
//! cut, built from blaming near-lightest path blockers.
//!
//! Edge weights live in the log domain. A phase value `λ` tracks a lower
//! bound on the lightest h-length pair distance; phases in which nothing
//! would happen are skipped by jumping `λ` to the largest `(1+ε₀)^k` step not
//! exceeding the current minimum. The flow is kept as integer path counts and
//! scaled by a dyadic `η` at the end, so feasibility is checked exactly.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::blocker::lightest_path_blocker_reusing;
use crate::flow::Flow;
use crate::graph::{lightest_h_path_sets, unblocked_pair, Graph, MovingCut};
use crate::rational::{fmt_q, floor_dyadic, qu, to_f64, Q};
use crate::{invalid, Error, Result};

#[derive(Clone, Debug)]
pub struct MwuConfig {
    /// Constant in front of the per-pair repetition bound `h·log_{1+ε₀} n / ε₀`.
    pub theta: f64,
}

impl Default for MwuConfig {
    fn default() -> Self {
        MwuConfig { theta: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MwuReport {
    pub eta: String,
    pub phases: u64,
    pub skipped_phases: u64,
    pub blocker_calls: u64,
    pub support: usize,
    /// Distinct paths produced by the blockers, before consolidation.
    pub raw_support: usize,
    pub value: String,
    pub cut_size: String,
    /// Factor the raw flow was divided by to reach congestion 1 (`1` if none).
    pub congestion_scale: String,
    pub batches: usize,
    /// `(1-ε)|C| <= val(F)` for the returned rounded cut.
    pub bound_holds: bool,
    /// The same inequality for the fractional cut before rounding to `1/h`.
    pub fractional_bound_holds: bool,
    pub fractional_cut_size: f64,
    pub max_blame_per_edge: usize,
}

#[derive(Clone, Debug)]
pub struct MwuResult {
    pub flow: Flow,
    pub cut: MovingCut,
    pub report: MwuReport,
}

/// Rejects a batching where two pairs of one batch come within `2h`.
pub fn validate_batching(g: &Graph, pairs: &[(Vec<usize>, Vec<usize>)], batch: &[usize], h: u64) -> Result<()> {
    if batch.len() != pairs.len() {
        return invalid("batch labels must match the pair count");
    }
    for i in 0..pairs.len() {
        let mut from: Vec<usize> = pairs[i].0.clone();
        from.extend(&pairs[i].1);
        let dist = g.distances_from(&from, Some(2 * h));
        for j in i + 1..pairs.len() {
            if batch[i] != batch[j] {
                continue;
            }
            let close = pairs[j].0.iter().chain(&pairs[j].1).any(|&v| dist[v].within(2 * h - 1));
            if close {
                return Err(Error::Invalid(format!("pairs {i} and {j} share batch {} but are closer than 2h", batch[i])));
            }
        }
    }
    Ok(())
}

/// Splits pairs greedily into batches whose members are pairwise `>= 2h` apart.
pub fn greedy_batching(g: &Graph, pairs: &[(Vec<usize>, Vec<usize>)], h: u64) -> Vec<usize> {
    let near: Vec<Vec<bool>> = pairs
        .iter()
        .map(|(s, t)| {
            let mut from = s.clone();
            from.extend(t);
            let d = g.distances_from(&from, Some(2 * h));
            (0..g.n()).map(|v| 2 * h > 0 && d[v].within(2 * h - 1)).collect()
        })
        .collect();
    let mut batch = vec![usize::MAX; pairs.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..pairs.len() {
        let touches = |j: usize| pairs[i].0.iter().chain(&pairs[i].1).any(|&v| near[j][v]);
        let slot = members.iter().position(|ms| ms.iter().all(|&j| !touches(j)));
        let b = slot.unwrap_or_else(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[b].push(i);
        batch[i] = b;
    }
    batch
}

pub fn mwu_flow_cut(
    g: &Graph,
    pairs: &[(Vec<usize>, Vec<usize>)],
    batch: Option<&[usize]>,
    h: u64,
    eps: f64,
    cfg: &MwuConfig,
) -> Result<MwuResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0, 1), got {eps}"));
    }
    if h == 0 {
        return invalid("length bound h must be at least 1");
    }
    for (i, (s, t)) in pairs.iter().enumerate() {
        if s.iter().chain(t).any(|&v| v >= g.n()) {
            return invalid(format!("pair {i} names a vertex outside the graph"));
        }
        if s.iter().any(|x| t.contains(x)) {
            return invalid(format!("pair {i} has overlapping source and target sets"));
        }
    }
    let labels: Vec<usize> = match batch {
        Some(b) => {
            validate_batching(g, pairs, b, h)?;
            b.to_vec()
        }
        None => (0..pairs.len()).collect(),
    };
    let mut batch_order: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &b) in labels.iter().enumerate() {
        batch_order.entry(b).or_default().push(i);
    }

    let m = g.m();
    let eps0 = eps / 6.0;
    let zeta = (1.0 + 2.0 * eps0) / eps0 + 1.0;
    let ln_m = (m.max(2) as f64).ln();
    let eta_f = eps0 / ((1.0 + eps0) * zeta * ln_m);
    let eta = floor_dyadic(eta_f, 52);
    let step = (1.0 + eps0).ln();
    let caps: Vec<u64> = g.edges().iter().map(|e| e.capacity).collect();
    // log C(e); zero-capacity edges are cut for free and never carry flow.
    let mut log_c: Vec<f64> =
        caps.iter().map(|&u| if u == 0 { f64::INFINITY } else { -zeta * ln_m }).collect();
    let mut log_lambda = -zeta * ln_m;
    let reps = (cfg.theta * h as f64 * (g.n().max(2) as f64).ln() / step / eps0).ceil().max(1.0) as u64;
    let targets: Vec<Vec<bool>> = pairs
        .iter()
        .map(|(_, t)| {
            let mut v = vec![false; g.n()];
            for &x in t {
                v[x] = true;
            }
            v
        })
        .collect();
    let rel = |log_c: &[f64], log_lambda: f64| -> Vec<Option<f64>> {
        log_c.iter().map(|&l| if l.is_finite() { Some((l - log_lambda).exp()) } else { None }).collect()
    };
    let min_distance = |w: &[Option<f64>]| -> Result<Option<f64>> {
        let mut best: Option<f64> = None;
        for (i, (s, _)) in pairs.iter().enumerate() {
            if let Some(p) = lightest_h_path_sets(g, w, s, &targets[i], h)? {
                best = Some(best.map_or(p.weight, |b: f64| b.min(p.weight)));
            }
        }
        Ok(best)
    };

    let mut pair_counts: Vec<BTreeMap<Vec<usize>, u64>> = vec![BTreeMap::new(); pairs.len()];
    let mut pair_paths: Vec<Vec<Vec<usize>>> = vec![Vec::new(); pairs.len()];
    let mut phases = 0u64;
    let mut skipped = 0u64;
    let mut blocker_calls = 0u64;
    let mut max_blame = 0usize;
    // Best normalized dual seen: (Σ U_e C(e) / α, weights / α), relative to λ.
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut track_best = |w: &[Option<f64>], alpha: f64| {
        let d: f64 = w.iter().zip(&caps).map(|(x, &u)| x.map_or(0.0, |x| x * u as f64)).sum();
        let ratio = d / alpha;
        if best.as_ref().is_none_or(|(r, _)| ratio < *r) {
            let snap = w.iter().map(|x| x.map_or(f64::INFINITY, |x| x / alpha)).collect();
            best = Some((ratio, snap));
        }
    };

    while log_lambda < 0.0 {
        let w = rel(&log_c, log_lambda);
        let Some(alpha) = min_distance(&w)? else { break };
        track_best(&w, alpha);
        if alpha > 1.0 {
            let k = (alpha.ln() / step).floor();
            if k >= 1.0 {
                skipped += k as u64;
                log_lambda += k * step;
                if log_lambda >= 0.0 {
                    break;
                }
            }
        }
        phases += 1;
        for members in batch_order.values() {
            for &i in members {
                let (s, t) = &pairs[i];
                for _ in 0..reps {
                    let w = rel(&log_c, log_lambda);
                    let Some(p) = lightest_h_path_sets(g, &w, s, &targets[i], h)? else { break };
                    if p.weight >= 1.0 + eps0 {
                        break;
                    }
                    let weights: Vec<f64> = w.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
                    let lam = p.weight.min(1.0);
                    let b = lightest_path_blocker_reusing(g, &weights, &caps, s, t, h, eps0, lam, &pair_paths[i])?;
                    blocker_calls += 1;
                    if b.flow.is_empty() {
                        break;
                    }
                    max_blame = max_blame.max(b.blame_counts.values().copied().max().unwrap_or(0));
                    for (path, x) in b.flow.iter() {
                        let c = pair_counts[i].entry(path.clone()).or_insert(0);
                        if *c == 0 {
                            pair_paths[i].push(path.clone());
                        }
                        *c += crate::rational::to_u64(x).unwrap();
                    }
                    for (e, x) in b.flow.edge_flow(g)? {
                        log_c[e] += to_f64(&x) / caps[e] as f64 * step;
                    }
                }
            }
        }
        log_lambda += step;
    }
    let w = rel(&log_c, log_lambda.min(0.0));
    if let Some(alpha) = min_distance(&w)? {
        track_best(&w, alpha);
    }

    let raw_support = pair_counts.iter().map(|c| c.len()).sum();
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for c in &pair_counts {
        let merged = consolidate(g, c);
        let pick = if merged.len() < c.len() { &merged } else { c };
        for (p, &x) in pick {
            *counts.entry(p.clone()).or_insert(0) += x;
        }
    }

    // Primal: F = η·counts, scaled down if congestion exceeds 1.
    let mut loads: BTreeMap<usize, u128> = BTreeMap::new();
    for (p, &c) in &counts {
        for e in g.path_edges(p).unwrap() {
            *loads.entry(e).or_insert(0) += c as u128;
        }
    }
    let mut worst = Q::zero();
    for (&e, &l) in &loads {
        let r = &eta * Q::from_integer(l.into()) / qu(caps[e]);
        if r > worst {
            worst = r;
        }
    }
    let scale = if worst > Q::one() { worst } else { Q::one() };
    let coef = &eta / &scale;
    let mut flow = Flow::new();
    for (p, &c) in &counts {
        flow.add(p.clone(), &coef * Q::from_integer(c.into()));
    }
    let value = flow.value();

    // Dual: round the best normalized cut to multiples of 1/h.
    let frac: Vec<f64> = match &best {
        Some((_, snap)) => snap.iter().map(|&x| x.min(1.0)).collect(),
        None => vec![0.0; m],
    };
    let fractional_cut_size: f64 = frac.iter().zip(&caps).map(|(x, &u)| x * u as f64).sum();
    let mut candidates = Vec::new();
    for up in [false, true] {
        let mut c = MovingCut::new(h);
        for (e, &x) in frac.iter().enumerate() {
            let t = x * h as f64;
            let num = if caps[e] == 0 {
                h
            } else if up {
                (t - 1e-9).ceil().max(0.0) as u64
            } else {
                (t + 1e-9).floor().max(0.0) as u64
            };
            c.set(e, num.min(h))?;
        }
        repair_cut(g, &mut c, pairs, h)?;
        candidates.push(c);
    }
    let cut = candidates.into_iter().min_by(|a, b| a.size(g).cmp(&b.size(g))).unwrap();
    let cut_size = cut.size(g);
    let one_minus = Q::one() - crate::rational::from_f64(eps);
    let report = MwuReport {
        eta: fmt_q(&eta),
        phases,
        skipped_phases: skipped,
        blocker_calls,
        support: flow.len(),
        raw_support,
        value: fmt_q(&value),
        cut_size: fmt_q(&cut_size),
        congestion_scale: fmt_q(&scale),
        batches: batch_order.len(),
        bound_holds: &one_minus * &cut_size <= value,
        fractional_bound_holds: (1.0 - eps) * fractional_cut_size <= to_f64(&value) * (1.0 + 1e-9),
        fractional_cut_size,
        max_blame_per_edge: max_blame,
    };
    Ok(MwuResult { flow, cut, report })
}

/// Re-decomposes one pair's integer path counts with fewer paths. The counts
/// become an arc flow on the graph layered by length from the source, which is
/// peeled along the heaviest arc first; every peeled walk has the length of a
/// path it came from, and repeated vertices are shortcut. Loads never grow and
/// the total count is kept.
pub fn consolidate(g: &Graph, counts: &BTreeMap<Vec<usize>, u64>) -> BTreeMap<Vec<usize>, u64> {
    type Node = (usize, u64);
    let mut start: BTreeMap<usize, u64> = BTreeMap::new();
    let mut out: BTreeMap<Node, BTreeMap<usize, u64>> = BTreeMap::new();
    let mut sink: BTreeMap<Node, u64> = BTreeMap::new();
    let mut result = BTreeMap::new();
    for (p, &c) in counts {
        if p.len() < 2 || c == 0 {
            continue;
        }
        *start.entry(p[0]).or_insert(0) += c;
        let mut d = 0;
        for (k, e) in g.path_edges(p).unwrap().into_iter().enumerate() {
            *out.entry((p[k], d)).or_default().entry(e).or_insert(0) += c;
            d += g.edge(e).length;
        }
        *sink.entry((*p.last().unwrap(), d)).or_insert(0) += c;
    }
    while let Some((&s, _)) = start.iter().filter(|x| *x.1 > 0).max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) {
        let mut node = (s, 0);
        let mut walk = vec![s];
        let mut arcs: Vec<(Node, usize)> = Vec::new();
        let mut amount = start[&s];
        while sink.get(&node).is_none_or(|&x| x == 0) {
            let (&e, &x) = out[&node].iter().filter(|x| *x.1 > 0).max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).unwrap();
            amount = amount.min(x);
            arcs.push((node, e));
            let v = g.edge(e).other(node.0);
            node = (v, node.1 + g.edge(e).length);
            walk.push(v);
        }
        amount = amount.min(sink[&node]);
        *start.get_mut(&s).unwrap() -= amount;
        *sink.get_mut(&node).unwrap() -= amount;
        for (a, e) in arcs {
            *out.get_mut(&a).unwrap().get_mut(&e).unwrap() -= amount;
        }
        let mut path: Vec<usize> = Vec::with_capacity(walk.len());
        for v in walk {
            if let Some(k) = path.iter().position(|&x| x == v) {
                path.truncate(k);
            }
            path.push(v);
        }
        *result.entry(path).or_insert(0) += amount;
    }
    result
}

/// Adds `1/h` on the cheapest edge of a violated lightest path until every
/// pair is h-length separated.
pub fn repair_cut(g: &Graph, c: &mut MovingCut, pairs: &[(Vec<usize>, Vec<usize>)], h: u64) -> Result<()> {
    let cap = (g.m() as u64 + 1) * (h + 1) * (pairs.len() as u64 + 1);
    let mut rounds = 0;
    while let Some((i, p)) = unblocked_pair(g, c, pairs, h)? {
        rounds += 1;
        if rounds > cap {
            return Err(Error::IterationCap("cut repair did not converge".into()));
        }
        let e = p
            .edges
            .iter()
            .copied()
            .filter(|&e| c.numerator(e) < c.scale)
            .min_by_key(|&e| (g.edge(e).capacity, e))
            .ok_or_else(|| Error::Precondition(format!("pair {i} cannot be separated")))?;
        c.set(e, c.numerator(e) + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::flow_stats;
    use crate::rational::{q, ExtQ};

    #[test]
    fn single_edge_example() {
        let g = Graph::from_tuples(2, &[(0, 1, 1, 5)]).unwrap();
        let r = mwu_flow_cut(&g, &[(vec![0], vec![1])], None, 1, 0.1, &MwuConfig::default()).unwrap();
        let v = r.flow.value();
        assert!(v >= Q::new(9.into(), 2.into()) && v <= q(5), "value {}", fmt_q(&v));
        assert!(r.report.bound_holds);
        assert_eq!(r.cut.numerator(0), 1);
    }

    #[test]
    fn trivial_examples() {
        let g = Graph::unit(4, &[(0, 1), (2, 3)]).unwrap();
        let r = mwu_flow_cut(&g, &[(vec![0], vec![2])], None, 2, 0.1, &MwuConfig::default()).unwrap();
        assert_eq!(r.flow.value(), q(0));
        assert_eq!(r.cut.size(&g), q(0));
        let p3 = Graph::unit(3, &[(0, 1), (1, 2)]).unwrap();
        let r = mwu_flow_cut(&p3, &[(vec![0], vec![2])], None, 1, 0.1, &MwuConfig::default()).unwrap();
        assert_eq!(r.flow.value(), q(0));
        assert!(r.cut.is_zero());
    }

    #[test]
    fn diamond_is_feasible_and_near_optimal() {
        let g = Graph::from_tuples(4, &[(0, 1, 1, 3), (1, 3, 1, 2), (0, 2, 1, 2), (2, 3, 1, 4)]).unwrap();
        let r = mwu_flow_cut(&g, &[(vec![0], vec![3])], None, 2, 0.2, &MwuConfig::default()).unwrap();
        let st = flow_stats(&g, &r.flow).unwrap();
        assert!(st.congestion.le_q(&q(1)));
        assert!(st.value >= Q::new(32.into(), 10.into()), "{}", r.report.value);
        assert!(unblocked_pair(&g, &r.cut, &[(vec![0], vec![3])], 2).unwrap().is_none());
        assert_ne!(st.congestion, ExtQ::Infinite);
    }

    #[test]
    fn batching_is_validated() {
        let g = Graph::unit(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let pairs = vec![(vec![0], vec![1]), (vec![2], vec![3])];
        assert!(mwu_flow_cut(&g, &pairs, Some(&[0, 0]), 1, 0.5, &MwuConfig::default()).is_err());
        assert_eq!(greedy_batching(&g, &pairs, 1), vec![0, 1]);
        assert!(mwu_flow_cut(&g, &pairs, Some(&[0, 1]), 1, 0.5, &MwuConfig::default()).is_ok());
    }

    #[test]
    fn consolidate_merges_crossing_paths() {
        // Two crossing routes through 2 can be rewritten as two straight ones.
        let g = Graph::unit(5, &[(0, 2), (1, 2), (2, 3), (2, 4)]).unwrap();
        let mut c = BTreeMap::new();
        c.insert(vec![0, 2, 3], 3);
        c.insert(vec![0, 2, 4], 1);
        c.insert(vec![1, 2, 3], 1);
        let out = consolidate(&g, &c);
        assert_eq!(out.values().sum::<u64>(), 5);
        assert!(out.len() <= 3);
    }

    fn loads(g: &Graph, c: &BTreeMap<Vec<usize>, u64>) -> BTreeMap<usize, u64> {
        let mut l = BTreeMap::new();
        for (p, &x) in c {
            for e in g.path_edges(p).unwrap() {
                *l.entry(e).or_insert(0) += x;
            }
        }
        l
    }

    proptest::proptest! {
        #[test]
        fn consolidate_keeps_value_and_never_raises_loads(seed in 0u64..500, h in 1u64..6) {
            let g = crate::gen::random_connected(8, 16, 2, 4, seed);
            let mut c = BTreeMap::new();
            let mut r = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(crate::rng::derive(seed, &[7]));
            for k in 0..6u64 {
                let mut w = vec![None; g.m()];
                for (e, x) in w.iter_mut().enumerate() {
                    *x = Some(1.0 + ((e as u64 * 31 + k * 17 + seed) % 5) as f64);
                }
                let mut t = vec![false; g.n()];
                t[7] = true;
                if let Some(p) = lightest_h_path_sets(&g, &w, &[0], &t, h).unwrap() {
                    if !p.edges.is_empty() {
                        *c.entry(p.vertices).or_insert(0) += 1 + rand::Rng::gen_range(&mut r, 0..4u64);
                    }
                }
            }
            let out = consolidate(&g, &c);
            proptest::prop_assert_eq!(out.values().sum::<u64>(), c.values().sum::<u64>());
            let (before, after) = (loads(&g, &c), loads(&g, &out));
            for (e, x) in &after {
                proptest::prop_assert!(*x <= before.get(e).copied().unwrap_or(0));
            }
            for p in out.keys() {
                proptest::prop_assert!(g.path_length(p).unwrap() <= h);
                proptest::prop_assert_eq!((p[0], *p.last().unwrap()), (0, 7));
            }
        }
    }
}
