//! Graphs, node-weightings, demands and moving cuts, with the distance and
//! separation primitives the rest of the crate is built on.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use num_traits::Zero;
use serde::Serialize;

use crate::rational::{qu, Q};
use crate::{invalid, Error, Result};

/// Largest length budget accepted by [`lightest_h_path`].
pub const LIGHTEST_PATH_H_CAP: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: u64,
    pub capacity: u64,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }
}

/// Undirected graph with positive integer lengths and nonnegative integer
/// capacities. Self-loops are allowed, parallel edges are not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
    index: BTreeMap<(usize, usize), usize>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

impl Graph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Graph> {
        let mut adj = vec![Vec::new(); n];
        let mut index = BTreeMap::new();
        for (id, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return invalid(format!("edge {} {} has an endpoint outside 0..{}", e.u, e.v, n));
            }
            if e.length == 0 {
                return invalid(format!("edge {} {} has length 0", e.u, e.v));
            }
            if index.insert(key(e.u, e.v), id).is_some() {
                return invalid(format!("parallel edge {} {}", e.u, e.v));
            }
            adj[e.u].push((e.v, id));
            if !e.is_loop() {
                adj[e.v].push((e.u, id));
            }
        }
        Ok(Graph { n, edges, adj, index })
    }

    /// Convenience constructor from `(u, v, length, capacity)` tuples.
    pub fn from_tuples(n: usize, edges: &[(usize, usize, u64, u64)]) -> Result<Graph> {
        Graph::new(
            n,
            edges
                .iter()
                .map(|&(u, v, length, capacity)| Edge { u, v, length, capacity })
                .collect(),
        )
    }

    /// Unit lengths and capacities.
    pub fn unit(n: usize, pairs: &[(usize, usize)]) -> Result<Graph> {
        let t: Vec<_> = pairs.iter().map(|&(u, v)| (u, v, 1, 1)).collect();
        Graph::from_tuples(n, &t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// `(neighbor, edge id)` pairs; a self-loop appears once.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.index.get(&key(u, v)).copied()
    }

    /// Degree counting capacities, a self-loop contributing its capacity twice.
    pub fn degree(&self, v: usize) -> u64 {
        self.adj[v]
            .iter()
            .map(|&(w, e)| if w == v { 2 * self.edges[e].capacity } else { self.edges[e].capacity })
            .sum()
    }

    pub fn degree_weighting(&self) -> NodeWeighting {
        NodeWeighting::from_iter((0..self.n).map(|v| (v, self.degree(v))))
    }

    /// The polynomial size bound `N`; `log2 N` appears in every slack.
    pub fn size_bound(&self) -> u128 {
        let n = self.n.max(2) as u128;
        n * n * n * n
    }

    /// `ceil(log2 N)`, at least 1.
    pub fn log_n(&self) -> u64 {
        let b = self.size_bound();
        (128 - (b - 1).leading_zeros() as u64).max(1)
    }

    /// Upper bound on the length of any simple path.
    pub fn max_simple_path_length(&self) -> u64 {
        let mut ls: Vec<u64> = self.edges.iter().filter(|e| !e.is_loop()).map(|e| e.length).collect();
        ls.sort_unstable_by(|a, b| b.cmp(a));
        ls.iter().take(self.n.saturating_sub(1)).fold(0u64, |a, &b| a.saturating_add(b))
    }

    pub fn with_lengths(&self, lengths: &[u64]) -> Graph {
        let mut g = self.clone();
        for (e, &l) in g.edges.iter_mut().zip(lengths) {
            e.length = l;
        }
        g
    }

    pub fn with_capacities(&self, caps: &[u64]) -> Graph {
        let mut g = self.clone();
        for (e, &c) in g.edges.iter_mut().zip(caps) {
            e.capacity = c;
        }
        g
    }

    /// Edge ids along a vertex sequence, or `None` if some step is not an edge.
    pub fn path_edges(&self, path: &[usize]) -> Option<Vec<usize>> {
        path.windows(2).map(|w| self.edge_between(w[0], w[1])).collect()
    }

    pub fn path_length(&self, path: &[usize]) -> Option<u64> {
        Some(self.path_edges(path)?.iter().map(|&e| self.edges[e].length).sum())
    }

    /// Single-source shortest distances, optionally pruned beyond `limit`.
    pub fn distances_from(&self, sources: &[usize], limit: Option<u64>) -> Vec<Distance> {
        let mut dist = vec![u64::MAX; self.n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                heap.push(Reverse((0u64, s)));
            }
        }
        while let Some(Reverse((d, x))) = heap.pop() {
            if d > dist[x] {
                continue;
            }
            for &(y, e) in &self.adj[x] {
                let nd = d.saturating_add(self.edges[e].length);
                if limit.is_some_and(|l| nd > l) {
                    continue;
                }
                if nd < dist[y] {
                    dist[y] = nd;
                    heap.push(Reverse((nd, y)));
                }
            }
        }
        dist.into_iter()
            .map(|d| if d == u64::MAX { Distance::Infinite } else { Distance::Finite(d) })
            .collect()
    }

    pub fn distance(&self, u: usize, v: usize) -> Distance {
        self.distances_from(&[u], None)[v]
    }

    /// All vertices within distance `r` of `v`.
    pub fn ball(&self, v: usize, r: u64) -> Vec<usize> {
        self.distances_from(&[v], Some(r))
            .iter()
            .enumerate()
            .filter(|(_, d)| d.within(r))
            .map(|(x, _)| x)
            .collect()
    }

    /// Weak diameter of a vertex set measured in this graph.
    pub fn weak_diameter(&self, set: &[usize]) -> Distance {
        let mut best = Distance::Finite(0);
        for &v in set {
            let d = self.distances_from(&[v], None);
            for &w in set {
                best = best.max(d[w]);
            }
        }
        best
    }

    /// Connected components as a component id per vertex (ids in order of
    /// smallest member).
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &(y, _) in &self.adj[x] {
                    if comp[y] == usize::MAX {
                        comp[y] = next;
                        stack.push(y);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Subgraph induced by `keep` (given in any order), vertices relabelled in
    /// increasing original id. Returns the graph and the original id of each vertex.
    pub fn induced(&self, keep: &[usize]) -> (Graph, Vec<usize>) {
        let mut ids: Vec<usize> = keep.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in ids.iter().enumerate() {
            local[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| local[e.u] != usize::MAX && local[e.v] != usize::MAX)
            .map(|e| Edge { u: local[e.u], v: local[e.v], length: e.length, capacity: e.capacity })
            .collect();
        (Graph::new(ids.len(), edges).expect("induced subgraph is valid"), ids)
    }
}

/// Shortest-path distance with a dedicated infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Distance {
    Finite(u64),
    Infinite,
}

impl Distance {
    pub fn within(self, h: u64) -> bool {
        matches!(self, Distance::Finite(d) if d <= h)
    }

    pub fn exceeds(self, h: u64) -> bool {
        !self.within(h)
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }
}

/// Nonnegative integer weight per vertex.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct NodeWeighting {
    w: BTreeMap<usize, u64>,
}

impl NodeWeighting {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: usize) -> u64 {
        self.w.get(&v).copied().unwrap_or(0)
    }

    pub fn set(&mut self, v: usize, x: u64) {
        if x == 0 {
            self.w.remove(&v);
        } else {
            self.w.insert(v, x);
        }
    }

    pub fn add(&mut self, v: usize, x: u64) {
        let cur = self.get(v);
        self.set(v, cur + x);
    }

    pub fn size(&self) -> u64 {
        self.w.values().sum()
    }

    pub fn support(&self) -> Vec<usize> {
        self.w.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.w.iter().map(|(&v, &x)| (v, x))
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Pointwise `self <= other`.
    pub fn leq(&self, other: &NodeWeighting) -> bool {
        self.iter().all(|(v, x)| x <= other.get(v))
    }

    pub fn plus(&self, other: &NodeWeighting) -> NodeWeighting {
        let mut out = self.clone();
        for (v, x) in other.iter() {
            out.add(v, x);
        }
        out
    }

    pub fn restrict(&self, set: &[usize]) -> NodeWeighting {
        NodeWeighting::from_iter(set.iter().map(|&v| (v, self.get(v))))
    }

    pub fn max_vertex(&self) -> Option<usize> {
        self.w.keys().next_back().copied()
    }
}

impl FromIterator<(usize, u64)> for NodeWeighting {
    fn from_iter<I: IntoIterator<Item = (usize, u64)>>(iter: I) -> Self {
        let mut out = NodeWeighting::new();
        for (v, x) in iter {
            out.add(v, x);
        }
        out
    }
}

/// Sparse nonnegative rational demand over ordered vertex pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Demand {
    d: BTreeMap<(usize, usize), Q>,
}

impl Demand {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, u: usize, v: usize) -> Q {
        self.d.get(&(u, v)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&mut self, u: usize, v: usize, x: Q) {
        assert!(x >= Q::zero(), "negative demand");
        if x.is_zero() {
            return;
        }
        let e = self.d.entry((u, v)).or_insert_with(Q::zero);
        *e += x;
    }

    pub fn size(&self) -> Q {
        self.d.values().fold(Q::zero(), |a, b| a + b)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &Q)> + '_ {
        self.d.iter().map(|(&k, x)| (k, x))
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn scaled(&self, f: &Q) -> Demand {
        let mut out = Demand::new();
        for ((u, v), x) in self.iter() {
            out.add(u, v, x * f);
        }
        out
    }

    pub fn plus(&self, other: &Demand) -> Demand {
        let mut out = self.clone();
        for ((u, v), x) in other.iter() {
            out.add(u, v, x.clone());
        }
        out
    }

    /// `(out(v), in(v))` sums per vertex.
    pub fn out_in(&self) -> (BTreeMap<usize, Q>, BTreeMap<usize, Q>) {
        let mut out: BTreeMap<usize, Q> = BTreeMap::new();
        let mut inn: BTreeMap<usize, Q> = BTreeMap::new();
        for ((u, v), x) in self.iter() {
            *out.entry(u).or_insert_with(Q::zero) += x;
            *inn.entry(v).or_insert_with(Q::zero) += x;
        }
        (out, inn)
    }

    /// `load(v) = max(out(v), in(v))`.
    pub fn load(&self) -> BTreeMap<usize, Q> {
        let (out, inn) = self.out_in();
        let mut load = out;
        for (v, x) in inn {
            let e = load.entry(v).or_insert_with(Q::zero);
            if x > *e {
                *e = x;
            }
        }
        load
    }
}

/// Moving cut with values `C(e) = w_e / scale`, `0 <= w_e <= scale`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MovingCut {
    pub scale: u64,
    w: BTreeMap<usize, u64>,
}

impl MovingCut {
    pub fn new(scale: u64) -> Self {
        assert!(scale >= 1, "moving cut scale must be positive");
        MovingCut { scale, w: BTreeMap::new() }
    }

    pub fn numerator(&self, e: usize) -> u64 {
        self.w.get(&e).copied().unwrap_or(0)
    }

    pub fn value(&self, e: usize) -> Q {
        Q::new(self.numerator(e).into(), self.scale.into())
    }

    pub fn set(&mut self, e: usize, w: u64) -> Result<()> {
        if w > self.scale {
            return Err(Error::Invalid(format!("numerator {w} exceeds scale {}", self.scale)));
        }
        if w == 0 {
            self.w.remove(&e);
        } else {
            self.w.insert(e, w);
        }
        Ok(())
    }

    /// Full cut (`C(e) = 1`) on each listed edge.
    pub fn full(scale: u64, edges: impl IntoIterator<Item = usize>) -> Self {
        let mut c = MovingCut::new(scale);
        for e in edges {
            c.w.insert(e, scale);
        }
        c
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.w.iter().map(|(&e, &w)| (e, w))
    }

    pub fn is_zero(&self) -> bool {
        self.w.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.w.keys().copied().collect()
    }

    /// `|C| = sum U_e w_e / scale`, exact.
    pub fn size(&self, g: &Graph) -> Q {
        let num: u128 = self.iter().map(|(e, w)| g.edge(e).capacity as u128 * w as u128).sum();
        Q::new(num.into(), self.scale.into())
    }

    pub fn check(&self, g: &Graph) -> Result<()> {
        for (e, w) in self.iter() {
            if e >= g.m() {
                return Err(Error::UnknownEdge(format!("edge id {e}")));
            }
            if w > self.scale {
                return Err(Error::Invalid(format!("edge id {e}: numerator {w} exceeds scale {}", self.scale)));
            }
        }
        Ok(())
    }

    /// Pointwise sum of numerators at a common scale, clamped to the scale.
    pub fn plus_clamped(&self, other: &MovingCut) -> MovingCut {
        assert_eq!(self.scale, other.scale);
        let mut out = self.clone();
        for (e, w) in other.iter() {
            let x = (out.numerator(e) + w).min(self.scale);
            out.w.insert(e, x);
        }
        out
    }
}

/// `G - C`: each edge gains `w_e` length; capacities unchanged.
pub fn apply_cut(g: &Graph, c: &MovingCut) -> Result<Graph> {
    c.check(g)?;
    Ok(apply_increase(g, c.iter()))
}

/// Adds raw length increases per edge id.
pub fn apply_increase(g: &Graph, inc: impl IntoIterator<Item = (usize, u64)>) -> Graph {
    let mut lengths: Vec<u64> = g.edges().iter().map(|e| e.length).collect();
    for (e, w) in inc {
        lengths[e] = lengths[e].saturating_add(w);
    }
    g.with_lengths(&lengths)
}

/// Weight type for [`lightest_h_path`]; exact rationals and floats both qualify.
pub trait PathWeight: Clone + PartialOrd + std::fmt::Debug {
    fn nothing() -> Self;
    fn plus(&self, other: &Self) -> Self;
}

impl PathWeight for f64 {
    fn nothing() -> Self {
        0.0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

impl PathWeight for u64 {
    fn nothing() -> Self {
        0
    }
    fn plus(&self, other: &Self) -> Self {
        self.saturating_add(*other)
    }
}

impl PathWeight for Q {
    fn nothing() -> Self {
        Q::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LightPath<W> {
    pub weight: W,
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub length: u64,
}

/// Minimum weight of a `u`-`v` path of length at most `h`.
/// `Ok(None)` stands for an infinite weight (no path within budget).
pub fn lightest_h_path<W: PathWeight>(
    g: &Graph,
    weight: &[W],
    u: usize,
    v: usize,
    h: u64,
) -> Result<Option<LightPath<W>>> {
    let w: Vec<Option<W>> = weight.iter().cloned().map(Some).collect();
    let mut target = vec![false; g.n()];
    target[v] = true;
    lightest_h_path_sets(g, &w, &[u], &target, h)
}

/// Set-to-set variant; an edge with weight `None` is unusable.
pub fn lightest_h_path_sets<W: PathWeight>(
    g: &Graph,
    weight: &[Option<W>],
    sources: &[usize],
    is_target: &[bool],
    h: u64,
) -> Result<Option<LightPath<W>>> {
    if h > LIGHTEST_PATH_H_CAP {
        return Err(Error::Precondition(format!("length budget {h} exceeds cap {LIGHTEST_PATH_H_CAP}")));
    }
    if let Some(&s) = sources.iter().filter(|&&s| is_target[s]).min() {
        return Ok(Some(LightPath { weight: W::nothing(), vertices: vec![s], edges: vec![], length: 0 }));
    }
    let n = g.n();
    let hh = h.min(g.max_simple_path_length()) as usize;
    let width = hh + 1;
    // best[l * n + x]: lightest walk of length exactly l ending at x.
    let mut best: Vec<Option<W>> = vec![None; width * n];
    let mut pred: Vec<u32> = vec![u32::MAX; width * n];
    for &s in sources {
        best[s] = Some(W::nothing());
    }
    let arcs: Vec<(usize, usize, usize, usize)> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(id, e)| !e.is_loop() && weight[*id].is_some() && (e.length as usize) <= hh)
        .flat_map(|(id, e)| [(e.u, e.v, e.length as usize, id), (e.v, e.u, e.length as usize, id)])
        .collect();
    for l in 1..width {
        for &(a, b, len, id) in &arcs {
            if len > l {
                continue;
            }
            let from = (l - len) * n + a;
            let Some(wa) = &best[from] else { continue };
            let cand = wa.plus(weight[id].as_ref().unwrap());
            let slot = &mut best[l * n + b];
            let better = match slot {
                None => true,
                Some(cur) => cand < *cur,
            };
            if better {
                *slot = Some(cand);
                pred[l * n + b] = id as u32;
            }
        }
    }
    let mut end: Option<(usize, usize)> = None;
    for l in 0..width {
        for x in 0..n {
            if !is_target[x] {
                continue;
            }
            if let Some(wx) = &best[l * n + x] {
                let better = match end {
                    None => true,
                    Some((el, ex)) => *wx < *best[el * n + ex].as_ref().unwrap(),
                };
                if better {
                    end = Some((l, x));
                }
            }
        }
    }
    let Some((mut l, mut x)) = end else { return Ok(None) };
    let mut walk = vec![x];
    while pred[l * n + x] != u32::MAX {
        let id = pred[l * n + x] as usize;
        let e = g.edge(id);
        let y = e.other(x);
        l -= e.length as usize;
        x = y;
        walk.push(x);
    }
    walk.reverse();
    let vertices = shortcut_walk(&walk);
    let edges = g.path_edges(&vertices).expect("walk steps are edges");
    let mut total = W::nothing();
    let mut length = 0;
    for &e in &edges {
        total = total.plus(weight[e].as_ref().unwrap());
        length += g.edge(e).length;
    }
    Ok(Some(LightPath { weight: total, vertices, edges, length }))
}

/// First pair (by index) with an h-length path of cut weight below 1, with that
/// path; `None` means `c` is an h-length cut for every pair.
pub fn unblocked_pair(
    g: &Graph,
    c: &MovingCut,
    pairs: &[(Vec<usize>, Vec<usize>)],
    h: u64,
) -> Result<Option<(usize, LightPath<u64>)>> {
    let w: Vec<Option<u64>> = (0..g.m()).map(|e| Some(c.numerator(e))).collect();
    for (i, (s, t)) in pairs.iter().enumerate() {
        let mut is_t = vec![false; g.n()];
        for &x in t {
            is_t[x] = true;
        }
        if let Some(p) = lightest_h_path_sets(g, &w, s, &is_t, h)? {
            if p.weight < c.scale {
                return Ok(Some((i, p)));
            }
        }
    }
    Ok(None)
}

/// Removes cycles from a walk, keeping its endpoints.
pub fn shortcut_walk(walk: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(walk.len());
    let mut pos: BTreeMap<usize, usize> = BTreeMap::new();
    for &x in walk {
        if let Some(&i) = pos.get(&x) {
            for y in out.drain(i + 1..) {
                pos.remove(&y);
            }
        } else {
            pos.insert(x, out.len());
            out.push(x);
        }
    }
    out
}

/// Total demand between pairs that `G - C` places more than `h` apart.
pub fn separation(g: &Graph, c: &MovingCut, d: &Demand, h: u64) -> Result<Q> {
    let gc = apply_cut(g, c)?;
    Ok(separated_amount(&gc, d, h))
}

/// Separation measured directly in a graph whose lengths already include the cut.
pub fn separated_amount(gc: &Graph, d: &Demand, h: u64) -> Q {
    let mut total = Q::zero();
    let mut cache: Option<(usize, Vec<Distance>)> = None;
    for ((u, v), x) in d.iter() {
        if cache.as_ref().is_none_or(|(s, _)| *s != u) {
            cache = Some((u, gc.distances_from(&[u], Some(h))));
        }
        let dist = &cache.as_ref().unwrap().1;
        if dist[v].exceeds(h) {
            total += x;
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandReport {
    pub load: BTreeMap<usize, Q>,
    pub respecting: bool,
    pub h_length: bool,
}

pub fn demand_report(d: &Demand, a: &NodeWeighting, g: &Graph, h: u64) -> DemandReport {
    let load = d.load();
    let respecting = load.iter().all(|(&v, x)| *x <= qu(a.get(v)));
    let mut h_length = true;
    let mut cache: Option<(usize, Vec<Distance>)> = None;
    for ((u, v), _) in d.iter() {
        if u >= g.n() || v >= g.n() {
            h_length = false;
            break;
        }
        if cache.as_ref().is_none_or(|(s, _)| *s != u) {
            cache = Some((u, g.distances_from(&[u], Some(h))));
        }
        if cache.as_ref().unwrap().1[v].exceeds(h) {
            h_length = false;
            break;
        }
    }
    DemandReport { load, respecting, h_length }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};

    fn p3() -> Graph {
        Graph::unit(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn apply_cut_examples() {
        let g = p3();
        let mut c = MovingCut::new(4);
        c.set(g.edge_between(1, 2).unwrap(), 4).unwrap();
        let gc = apply_cut(&g, &c).unwrap();
        assert_eq!(gc.distance(0, 2), Distance::Finite(6));
        assert!(gc.distance(0, 2).exceeds(4));
        assert_eq!(apply_cut(&g, &MovingCut::new(4)).unwrap(), g);
        let k2 = Graph::unit(2, &[(0, 1)]).unwrap();
        let mut c = MovingCut::new(4);
        c.set(0, 2).unwrap();
        assert_eq!(apply_cut(&k2, &c).unwrap().edge(0).length, 3);
        let mut bad = MovingCut::new(4);
        bad.w.insert(9, 1);
        assert!(matches!(apply_cut(&k2, &bad), Err(Error::UnknownEdge(_))));
    }

    #[test]
    fn distance_examples() {
        let g = p3();
        assert_eq!(g.distance(0, 2), Distance::Finite(2));
        let g2 = Graph::unit(3, &[(0, 1)]).unwrap();
        assert_eq!(g2.distance(0, 2), Distance::Infinite);
    }

    #[test]
    fn rejects_parallel_edges_and_accepts_loops() {
        assert!(Graph::unit(2, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::unit(1, &[(0, 0)]).is_ok());
        assert!(Graph::from_tuples(2, &[(0, 1, 0, 1)]).is_err());
    }

    #[test]
    fn lightest_path_examples() {
        // direct edge (length 1, weight 5) vs two-hop route of total length 4, weight 1
        let g = Graph::from_tuples(3, &[(0, 2, 1, 1), (0, 1, 2, 1), (1, 2, 2, 1)]).unwrap();
        let w = vec![q(5), qr(1, 2), qr(1, 2)];
        let p1 = lightest_h_path(&g, &w, 0, 2, 1).unwrap().unwrap();
        assert_eq!(p1.weight, q(5));
        let p4 = lightest_h_path(&g, &w, 0, 2, 4).unwrap().unwrap();
        assert_eq!(p4.weight, q(1));
        assert_eq!(p4.vertices, vec![0, 1, 2]);
        let far = Graph::from_tuples(2, &[(0, 1, 5, 1)]).unwrap();
        assert!(lightest_h_path(&far, &[q(0)], 0, 1, 4).unwrap().is_none());
        let zero = lightest_h_path(&p3(), &[q(0), q(0)], 0, 2, 2).unwrap().unwrap();
        assert_eq!(zero.weight, q(0));
        assert!(lightest_h_path(&p3(), &[q(0), q(0)], 0, 2, LIGHTEST_PATH_H_CAP + 1).is_err());
    }

    #[test]
    fn separation_examples() {
        let k2 = Graph::unit(2, &[(0, 1)]).unwrap();
        let mut d = Demand::new();
        d.add(0, 1, q(1));
        assert_eq!(separation(&k2, &MovingCut::new(1), &d, 1).unwrap(), q(0));
        let p4 = Graph::unit(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut d = Demand::new();
        d.add(0, 3, q(3));
        assert_eq!(separation(&p4, &MovingCut::new(1), &d, 1).unwrap(), q(3));
        let g = p3();
        let c = MovingCut::full(4, [g.edge_between(1, 2).unwrap()]);
        let mut d = Demand::new();
        d.add(0, 2, q(2));
        assert_eq!(separation(&g, &c, &d, 4).unwrap(), q(2));
    }

    #[test]
    fn demand_report_examples() {
        let g = Graph::unit(2, &[(0, 1)]).unwrap();
        let mut d = Demand::new();
        d.add(0, 1, q(1));
        d.add(1, 0, q(1));
        let a = NodeWeighting::from_iter([(0, 1), (1, 1)]);
        let r = demand_report(&d, &a, &g, 1);
        assert_eq!(r.load[&0], q(1));
        assert_eq!(r.load[&1], q(1));
        assert!(r.respecting && r.h_length);
        let a0 = NodeWeighting::from_iter([(1, 1)]);
        assert!(!demand_report(&d, &a0, &g, 1).respecting);
        let e = demand_report(&Demand::new(), &NodeWeighting::new(), &g, 1);
        assert!(e.load.is_empty() && e.respecting && e.h_length);
    }

    #[test]
    fn cut_size_is_exact() {
        let g = Graph::from_tuples(3, &[(0, 1, 1, 3), (1, 2, 1, 5)]).unwrap();
        let mut c = MovingCut::new(3);
        c.set(0, 1).unwrap();
        c.set(1, 2).unwrap();
        assert_eq!(c.size(&g), qr(3 + 10, 3));
    }

    #[test]
    fn shortcut_removes_cycles() {
        assert_eq!(shortcut_walk(&[0, 1, 2, 1, 3]), vec![0, 1, 3]);
        assert_eq!(shortcut_walk(&[0, 1, 0, 2]), vec![0, 2]);
    }

    proptest::proptest! {
        #[test]
        fn shortcut_walk_is_simple_with_same_ends(walk in proptest::collection::vec(0usize..6, 1..20)) {
            let p = shortcut_walk(&walk);
            proptest::prop_assert_eq!(p.first(), walk.first());
            proptest::prop_assert_eq!(p.last(), walk.last());
            let mut seen = p.clone();
            seen.sort_unstable();
            seen.dedup();
            proptest::prop_assert_eq!(seen.len(), p.len());
        }

        #[test]
        fn applied_cut_lengths(seed in 0u64..1000, scale in 1u64..6) {
            let g = crate::gen::random_connected(8, 14, 3, 2, seed);
            let mut c = MovingCut::new(scale);
            for e in 0..g.m() {
                c.set(e, (seed + e as u64 * 7) % (scale + 1)).unwrap();
            }
            let gc = apply_cut(&g, &c).unwrap();
            for e in 0..g.m() {
                proptest::prop_assert_eq!(gc.edge(e).length, g.edge(e).length + c.numerator(e));
            }
            let d = g.distances_from(&[0], None);
            let dc = gc.distances_from(&[0], None);
            for v in 0..g.n() {
                proptest::prop_assert!(d[v].finite().unwrap() <= dc[v].finite().unwrap());
            }
        }
    }
}
