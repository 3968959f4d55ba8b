//! Seeded instance generators used by the CLI and the test suites.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::flow::Flow;
use crate::graph::{apply_cut, Demand, Edge, Graph, MovingCut, NodeWeighting};
use crate::rational::{qu, to_u64};
use crate::oracle::{enumerate_paths, Budget};
use crate::rng::{derive, rng};

/// Random simple graph with `m` distinct non-loop edges (fewer if `m` exceeds
/// the number of vertex pairs), lengths in `1..=max_len`, capacities in
/// `1..=max_cap`.
pub fn random_graph(n: usize, m: usize, max_len: u64, max_cap: u64, seed: u64) -> Graph {
    let mut r = rng(derive(seed, &[0x6e6e]));
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    pairs.shuffle(&mut r);
    pairs.truncate(m);
    pairs.sort_unstable();
    let edges = pairs
        .into_iter()
        .map(|(u, v)| Edge { u, v, length: r.gen_range(1..=max_len.max(1)), capacity: r.gen_range(1..=max_cap.max(1)) })
        .collect();
    Graph::new(n, edges).expect("generated graph is valid")
}

/// Random connected graph: a random spanning tree plus random extra edges.
pub fn random_connected(n: usize, m: usize, max_len: u64, max_cap: u64, seed: u64) -> Graph {
    let mut r = rng(derive(seed, &[0xc0]));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let mut chosen = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = r.gen_range(0..i);
        let (a, b) = (order[i], order[j]);
        chosen.insert((a.min(b), a.max(b)));
    }
    let mut rest: Vec<(usize, usize)> =
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|p| !chosen.contains(p)).collect();
    rest.shuffle(&mut r);
    for p in rest.into_iter().take(m.saturating_sub(chosen.len())) {
        chosen.insert(p);
    }
    let edges = chosen
        .into_iter()
        .map(|(u, v)| Edge { u, v, length: r.gen_range(1..=max_len.max(1)), capacity: r.gen_range(1..=max_cap.max(1)) })
        .collect();
    Graph::new(n, edges).expect("generated graph is valid")
}

pub fn clique(n: usize) -> Graph {
    let e: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    Graph::unit(n, &e).unwrap()
}

pub fn path(n: usize) -> Graph {
    let e: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::unit(n, &e).unwrap()
}

/// Two `k`-cliques joined by one unit bridge between vertex `k-1` and `k`.
pub fn dumbbell(k: usize) -> Graph {
    clusters(&[k, k], &[(k - 1, k)])
}

/// Disjoint unit cliques of the given sizes plus extra unit `bridges`.
pub fn clusters(sizes: &[usize], bridges: &[(usize, usize)]) -> Graph {
    let mut e = Vec::new();
    let mut base = 0;
    for &k in sizes {
        for u in 0..k {
            for v in u + 1..k {
                e.push((base + u, base + v));
            }
        }
        base += k;
    }
    e.extend_from_slice(bridges);
    Graph::unit(base, &e).unwrap()
}

/// `k` random dense clusters of size `size` (edge probability `p`, always
/// connected), chained by single unit bridges.
pub fn clustered(k: usize, size: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng(derive(seed, &[0xc1]));
    let mut e = Vec::new();
    for c in 0..k {
        let base = c * size;
        for v in 1..size {
            e.push((base + r.gen_range(0..v), base + v));
        }
        for u in 0..size {
            for v in u + 1..size {
                if r.gen::<f64>() < p && !e.contains(&(base + u, base + v)) {
                    e.push((base + u, base + v));
                }
            }
        }
        if c > 0 {
            let a = (c - 1) * size + r.gen_range(0..size);
            let b = base + r.gen_range(0..size);
            e.push((a, b));
        }
    }
    e.sort_unstable();
    e.dedup();
    Graph::unit(k * size, &e).unwrap()
}

/// Random classic cut sequence: repeatedly split a random multi-vertex
/// component of what is left by a random vertex 2-colouring and cut the
/// crossing edges. Returns edge ids per cut.
pub fn random_classic_sequence(g: &Graph, steps: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut r = rng(derive(seed, &[7]));
    let mut removed = vec![false; g.m()];
    let mut cuts = Vec::new();
    for _ in 0..steps {
        let kept: Vec<_> = (0..g.m()).filter(|&e| !removed[e]).map(|e| g.edge(e).clone()).collect();
        let comp = Graph::new(g.n(), kept).unwrap().components();
        let big: Vec<usize> = (0..g.n()).filter(|&c| comp.iter().filter(|&&x| x == c).count() > 1).collect();
        if big.is_empty() {
            break;
        }
        let c = big[r.gen_range(0..big.len())];
        let side: Vec<bool> = (0..g.n()).map(|_| r.gen_bool(0.5)).collect();
        let cut: Vec<usize> = (0..g.m())
            .filter(|&e| {
                let ed = g.edge(e);
                !removed[e] && comp[ed.u] == c && comp[ed.v] == c && side[ed.u] != side[ed.v]
            })
            .collect();
        if cut.is_empty() {
            continue;
        }
        for &e in &cut {
            removed[e] = true;
        }
        cuts.push(cut);
    }
    cuts
}

/// Random moving-cut sequence at scale `h·s` with a witnessing demand per cut.
/// Each cut puts random numerators of at least half the scale on the edges
/// around a random vertex and on one more random edge; its demand is the
/// largest A-respecting h-length demand it hs-separates in the graph with the
/// earlier cuts applied, trimmed greedily so that `out(v) + in(v) <= A(v)`.
/// Cuts that separate nothing are skipped.
pub fn random_moving_sequence(
    g: &Graph,
    a: &NodeWeighting,
    h: u64,
    s: u64,
    steps: usize,
    seed: u64,
) -> crate::Result<Vec<(MovingCut, Demand)>> {
    let scale = h * s;
    let mut r = rng(derive(seed, &[0x5e]));
    let mut total = MovingCut::new(scale);
    let mut out = Vec::new();
    if g.m() == 0 {
        return Ok(out);
    }
    for _ in 0..steps {
        let mut c = MovingCut::new(scale);
        let v = r.gen_range(0..g.n());
        let mut es: Vec<usize> = (0..g.m()).filter(|&e| g.edge(e).u == v || g.edge(e).v == v).collect();
        es.push(r.gen_range(0..g.m()));
        for e in es {
            c.set(e, r.gen_range(scale.div_ceil(2)..=scale))?;
        }
        let cur = apply_cut(g, &total)?;
        let (_, d) = crate::oracle::demand_size(&cur, &c, a, h, s)?;
        let mut load: std::collections::BTreeMap<usize, u64> = Default::default();
        let mut trimmed = Demand::new();
        for ((u, v), x) in d.iter() {
            let room = |z: usize, load: &std::collections::BTreeMap<usize, u64>| a.get(z) - load.get(&z).copied().unwrap_or(0);
            let want = to_u64(&x.floor()).unwrap_or(0);
            let k = want.min(room(u, &load)).min(room(v, &load));
            if u != v && k > 0 {
                *load.entry(u).or_insert(0) += k;
                *load.entry(v).or_insert(0) += k;
                trimmed.add(u, v, qu(k));
            }
        }
        if trimmed.size() > qu(0) {
            total = total.plus_clamped(&c);
            out.push((c, trimmed));
        }
    }
    Ok(out)
}

/// Random feasible fractional h-length flow on up to `paths` simple paths
/// between random vertex pairs, scaled so that the busiest edge is exactly at
/// capacity. Empty when no pair is joined by an h-length path.
pub fn random_hlength_flow(g: &Graph, h: u64, paths: usize, seed: u64) -> crate::Result<Flow> {
    let mut r = rng(derive(seed, &[0xf1]));
    let mut raw: Vec<(Vec<usize>, u64)> = Vec::new();
    for _ in 0..4 * paths {
        if raw.len() >= paths || g.n() < 2 {
            break;
        }
        let s = r.gen_range(0..g.n());
        let t = r.gen_range(0..g.n());
        if s == t {
            continue;
        }
        let mut found = enumerate_paths(g, &[s], &[t], Budget::Length(h), 10_000, 0)?;
        found.retain(|p| g.path_edges(p).unwrap().iter().all(|&e| g.edge(e).capacity > 0));
        if let Some(p) = found.choose(&mut r) {
            raw.push((p.clone(), r.gen_range(1..=16)));
        }
    }
    let mut f = Flow::new();
    for (p, w) in raw {
        f.add(p, qu(w));
    }
    let worst = f.edge_flow(g)?.into_iter().map(|(e, x)| x / qu(g.edge(e).capacity)).max();
    Ok(match worst {
        Some(w) if w > qu(0) => f.scaled(&(qu(1) / w)),
        _ => Flow::new(),
    })
}

/// `k` node-weighting pairs with disjoint supports and equal sizes, weights
/// in `1..=max_w` before the larger side is trimmed to match.
pub fn random_weighting_pairs(n: usize, k: usize, max_w: u64, seed: u64) -> Vec<(NodeWeighting, NodeWeighting)> {
    let mut r = rng(derive(seed, &[0xa1]));
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for _ in 0..k {
        let mut vs: Vec<usize> = (0..n).collect();
        vs.shuffle(&mut r);
        let half = r.gen_range(1..=n / 2);
        let mut side = |xs: &[usize]| -> Vec<(usize, u64)> { xs.iter().map(|&v| (v, r.gen_range(1..=max_w.max(1)))).collect() };
        let (mut a, mut b) = (side(&vs[..half]), side(&vs[half..2 * half]));
        let (sa, sb): (u64, u64) = (a.iter().map(|x| x.1).sum(), b.iter().map(|x| x.1).sum());
        let (big, mut excess) = if sa > sb { (&mut a, sa - sb) } else { (&mut b, sb - sa) };
        for x in big.iter_mut() {
            let cut = excess.min(x.1 - 1);
            x.1 -= cut;
            excess -= cut;
        }
        debug_assert_eq!(excess, 0);
        out.push((a.into_iter().collect(), b.into_iter().collect()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic_and_valid() {
        assert_eq!(random_graph(10, 20, 3, 8, 4), random_graph(10, 20, 3, 8, 4));
        assert_eq!(random_graph(10, 20, 3, 8, 4).m(), 20);
        let g = random_connected(12, 15, 2, 3, 9);
        assert!(g.components().iter().all(|&c| c == 0));
        assert_eq!(dumbbell(5).m(), 21);
        let c = clustered(3, 6, 0.5, 1);
        assert!(c.components().iter().all(|&x| x == 0));
    }
}
