//! Routers (star, clique, expander powers), neighborhood router demands and
//! length-constrained expansion witnesses.
//!
//! A router is checked by routing the product demand `A(u)A(v)/|A|` within a
//! hop bound. Any A-respecting demand splits into two legs through that
//! product demand, so passing at congestion `κ` certifies routing every
//! A-respecting demand at congestion `2κ`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::cover::{build_cover, verify_cover, CoverConfig, CoverReport, NeighborhoodCover};
use crate::flow::{congestion_of, merge_by_overlap, project_flow, Embedding, Flow};
use crate::graph::{demand_report, lightest_h_path, shortcut_walk, Demand, Edge, Graph, NodeWeighting};
use crate::oracle::{min_congestion_routing, Budget};
use crate::rational::{fmt_q, lcm_u64, qu, ExtQ, Q};
use crate::rng::{derive, rng};
use crate::{invalid, Error, Result};

pub const ROUTER_METHOD: &str = "product demand A(u)A(v)/|A|, certified congestion factor 2";
pub const DEFAULT_DEGREE: usize = 8;
/// Above this many candidate paths the product demand is routed greedily.
pub const EXACT_PATH_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouterKind {
    Star,
    Clique,
    RegularPower { k: usize },
}

/// Capacitated router on local vertices `0..labels.len()`. A label is the
/// host vertex a router vertex stands for; the star hub has none.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Router {
    pub labels: Vec<Option<usize>>,
    pub weights: Vec<u64>,
    /// `(a, b, capacity)` with `a < b`, no parallel edges.
    pub edges: Vec<(usize, usize, Q)>,
}

impl Router {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn local_of(&self, v: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == Some(v))
    }

    /// Builds a router from capacities keyed by host vertex pairs.
    pub fn from_host_edges(a: &NodeWeighting, caps: &BTreeMap<(usize, usize), Q>) -> Router {
        let supp = a.support();
        let local: BTreeMap<usize, usize> = supp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut merged: BTreeMap<(usize, usize), Q> = BTreeMap::new();
        for (&(u, v), x) in caps {
            if u == v || x.is_zero() {
                continue;
            }
            let (a, b) = (local[&u], local[&v]);
            *merged.entry((a.min(b), a.max(b))).or_insert_with(Q::zero) += x;
        }
        Router {
            labels: supp.iter().map(|&v| Some(v)).collect(),
            weights: supp.iter().map(|&v| a.get(v)).collect(),
            edges: merged.into_iter().map(|((a, b), x)| (a, b, x)).collect(),
        }
    }

    /// Integer-capacity graph with unit lengths and the capacity scale used.
    pub fn scaled_graph(&self) -> (Graph, u64) {
        let scale = self.edges.iter().fold(1u64, |l, (_, _, x)| lcm_u64(l, x.denom().try_into().unwrap_or(1)));
        let edges = self
            .edges
            .iter()
            .map(|(a, b, x)| {
                let c = (x * qu(scale)).to_integer();
                Edge { u: *a, v: *b, length: 1, capacity: c.try_into().expect("router capacity fits u64") }
            })
            .collect();
        (Graph::new(self.len(), edges).expect("router edges are simple"), scale)
    }

    /// Largest hop distance between two positive-weight vertices, `None` if
    /// some pair is disconnected.
    pub fn hop_diameter(&self) -> Option<usize> {
        let mut adj = vec![Vec::new(); self.len()];
        for (a, b, x) in &self.edges {
            if !x.is_zero() {
                adj[*a].push(*b);
                adj[*b].push(*a);
            }
        }
        let active: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] > 0).collect();
        let mut best = 0;
        for &s in &active {
            let mut dist = vec![usize::MAX; self.len()];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(x) = q.pop_front() {
                for &y in &adj[x] {
                    if dist[y] == usize::MAX {
                        dist[y] = dist[x] + 1;
                        q.push_back(y);
                    }
                }
            }
            for &t in &active {
                if dist[t] == usize::MAX {
                    return None;
                }
                best = best.max(dist[t]);
            }
        }
        Some(best)
    }

    pub fn product_demand(&self) -> Demand {
        let total: u64 = self.weights.iter().sum();
        let mut d = Demand::new();
        if total == 0 {
            return d;
        }
        for (u, &au) in self.weights.iter().enumerate() {
            for (v, &av) in self.weights.iter().enumerate() {
                if u != v && au > 0 && av > 0 {
                    d.add(u, v, Q::new((au * av).into(), total.into()));
                }
            }
        }
        d
    }
}

/// Random `degree`-regular multigraph on `n` copies as a union of
/// `degree/2` random permutations, spectrally checked.
#[derive(Clone, Debug)]
pub struct CopyExpander {
    pub adj: Vec<BTreeMap<usize, u64>>,
    pub degree: usize,
    pub lambda2: f64,
    pub attempts: usize,
    pub spectral_ok: bool,
}

impl CopyExpander {
    pub fn new(n: usize, degree: usize, seed: u64) -> CopyExpander {
        let half = (degree / 2).max(1);
        let mut last = None;
        for attempt in 0..32 {
            let mut r = rng(derive(seed, &[0xe8, attempt as u64]));
            let mut adj: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); n];
            for _ in 0..half {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut r);
                for (i, &j) in perm.iter().enumerate() {
                    *adj[i].entry(j).or_insert(0) += 1;
                    *adj[j].entry(i).or_insert(0) += 1;
                }
            }
            let lambda2 = second_eigenvalue(&adj, 2 * half, derive(seed, &[0xe9, attempt as u64]));
            let ok = n <= 1 || lambda2 <= 0.9 * (2 * half) as f64;
            let ex = CopyExpander { adj, degree: 2 * half, lambda2, attempts: attempt + 1, spectral_ok: ok };
            if ok {
                return ex;
            }
            last = Some(ex);
        }
        last.unwrap()
    }

    /// Unordered copy pairs at hop distance `1..=k`.
    pub fn power_pairs(&self, k: usize) -> Vec<(usize, usize)> {
        let n = self.adj.len();
        let mut out = Vec::new();
        for s in 0..n {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(x) = q.pop_front() {
                if dist[x] == k {
                    continue;
                }
                for &y in self.adj[x].keys() {
                    if dist[y] == usize::MAX {
                        dist[y] = dist[x] + 1;
                        q.push_back(y);
                    }
                }
            }
            out.extend((s + 1..n).filter(|&t| dist[t] <= k).map(|t| (s, t)));
        }
        out
    }

    /// Number of `k`-step walks between every ordered copy pair.
    pub fn walk_counts(&self, k: usize) -> Vec<BTreeMap<usize, u64>> {
        let n = self.adj.len();
        (0..n)
            .map(|s| {
                let mut cur: BTreeMap<usize, u64> = BTreeMap::from([(s, 1)]);
                for _ in 0..k {
                    let mut next: BTreeMap<usize, u64> = BTreeMap::new();
                    for (&x, &c) in &cur {
                        for (&y, &m) in &self.adj[x] {
                            *next.entry(y).or_insert(0) += c * m;
                        }
                    }
                    cur = next;
                }
                cur
            })
            .collect()
    }
}

/// Second largest adjacency eigenvalue of a `d`-regular multigraph by power
/// iteration on `A + dI` orthogonal to the all-ones vector.
fn second_eigenvalue(adj: &[BTreeMap<usize, u64>], d: usize, seed: u64) -> f64 {
    let n = adj.len();
    if n <= 1 {
        return 0.0;
    }
    let mut r = rng(seed);
    let mut x: Vec<f64> = (0..n).map(|_| r.gen::<f64>() - 0.5).collect();
    let mut est = 0.0;
    for _ in 0..300 {
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return -(d as f64);
        }
        x.iter_mut().for_each(|v| *v /= norm);
        let y: Vec<f64> =
            (0..n).map(|i| d as f64 * x[i] + adj[i].iter().map(|(&j, &m)| m as f64 * x[j]).sum::<f64>()).collect();
        est = y.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        x = y;
    }
    est - d as f64
}

pub fn make_router(kind: RouterKind, a: &NodeWeighting, seed: u64) -> Result<Router> {
    let supp = a.support();
    if supp.is_empty() {
        return invalid("router needs a nonempty support");
    }
    match kind {
        RouterKind::Star => {
            let hub = supp.len();
            let mut labels: Vec<Option<usize>> = supp.iter().map(|&v| Some(v)).collect();
            labels.push(None);
            let mut weights: Vec<u64> = supp.iter().map(|&v| a.get(v)).collect();
            weights.push(0);
            let edges = supp.iter().enumerate().map(|(i, &v)| (i, hub, qu(a.get(v)))).collect();
            Ok(Router { labels, weights, edges })
        }
        RouterKind::Clique => {
            let total = a.size();
            let mut caps = BTreeMap::new();
            for (i, &u) in supp.iter().enumerate() {
                for &v in &supp[i + 1..] {
                    caps.insert((u, v), Q::new((a.get(u) * a.get(v)).into(), total.into()));
                }
            }
            Ok(Router::from_host_edges(a, &caps))
        }
        RouterKind::RegularPower { k } => {
            let mut owner = Vec::new();
            for (v, w) in a.iter() {
                owner.extend(std::iter::repeat_n(v, w as usize));
            }
            let ex = CopyExpander::new(owner.len(), DEFAULT_DEGREE, seed);
            let mut caps: BTreeMap<(usize, usize), Q> = BTreeMap::new();
            for (x, y) in ex.power_pairs(k.max(1)) {
                let (u, v) = (owner[x], owner[y]);
                if u != v {
                    *caps.entry((u.min(v), u.max(v))).or_insert_with(Q::zero) += qu(1);
                }
            }
            Ok(Router::from_host_edges(a, &caps))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RouterReport {
    pub congestion: ExtQ,
    pub steps: usize,
    pub kappa: String,
    pub certified_congestion: String,
    pub exact: bool,
    pub pass: bool,
    pub method: &'static str,
    /// Product-demand routing on local router vertices.
    #[serde(skip)]
    pub flow: Flow,
}

/// Routes the product demand within `t` hops; passes iff congestion `<= κ`.
pub fn verify_router(r: &Router, t: usize, kappa: &Q) -> Result<RouterReport> {
    let (g, scale) = r.scaled_graph();
    let d = r.product_demand();
    let (congestion, flow, exact) = match min_congestion_routing(&g, &d, Budget::Hops(t), EXACT_PATH_LIMIT) {
        Ok(res) => (res.congestion, res.flow, true),
        Err(Error::PathExplosion { .. }) => {
            let f = penalty_routing(&g, &d, t)?;
            match f {
                Some(f) => (congestion_of(&g, &f.edge_flow(&g)?), f, false),
                None => (ExtQ::Infinite, Flow::new(), false),
            }
        }
        Err(e) => return Err(e),
    };
    let congestion = match congestion {
        ExtQ::Finite(c) => ExtQ::Finite(c * qu(scale)),
        ExtQ::Infinite => ExtQ::Infinite,
    };
    let pass = congestion.le_q(kappa);
    Ok(RouterReport {
        congestion,
        steps: t,
        kappa: fmt_q(kappa),
        certified_congestion: fmt_q(&(kappa * qu(2))),
        exact,
        pass,
        method: ROUTER_METHOD,
        flow,
    })
}

/// Exponential-penalty routing of `d` over `t`-hop paths in eight equal
/// chunks; `None` if some pair has no such path.
fn penalty_routing(g: &Graph, d: &Demand, t: usize) -> Result<Option<Flow>> {
    const CHUNKS: u64 = 8;
    let beta = (g.m().max(2) as f64).ln();
    let mut load = vec![0f64; g.m()];
    let mut flow = Flow::new();
    let part = Q::new(1.into(), CHUNKS.into());
    for _ in 0..CHUNKS {
        for ((u, v), x) in d.iter() {
            let w: Vec<f64> = g
                .edges()
                .iter()
                .zip(&load)
                .map(|(e, l)| (beta * l / e.capacity.max(1) as f64).exp() / e.capacity.max(1) as f64)
                .collect();
            let Some(p) = lightest_h_path(g, &w, u, v, t as u64)? else {
                return Ok(None);
            };
            let amount = x * &part;
            let af = crate::rational::to_f64(&amount);
            for &e in &p.edges {
                load[e] += af;
            }
            flow.add(p.vertices, amount);
        }
    }
    Ok(Some(flow))
}

#[derive(Clone, Debug, Serialize)]
pub struct NrdReport {
    pub respecting: bool,
    pub length_ok: bool,
    pub row_sums_ok: bool,
    pub length_bound: u64,
    pub width: usize,
    pub load: usize,
    pub size: String,
    pub weight: u64,
    /// `|D|·width/|A|`.
    pub size_ratio: f64,
}

/// Neighborhood router demand: per cluster of a cover with covering radius
/// `h` and diameter `k'·h`, the `k`-step walk counts of a copy expander
/// between distinct vertices, over `Δ^k`, summed and divided by the load.
pub fn neighborhood_router_demand(
    g: &Graph,
    a: &NodeWeighting,
    h: u64,
    k: usize,
    k_prime: u64,
    seed: u64,
) -> Result<(Demand, NrdReport)> {
    if k_prime < 2 || h == 0 || k == 0 {
        return invalid("neighborhood router demand needs h, k >= 1 and k' >= 2");
    }
    let cfg = CoverConfig { h_diam: Some(k_prime * h), max_width: None };
    let cover = build_cover(g, h, 2, 1.0, derive(seed, &[0x4e]), &cfg)?;
    let mut total = Demand::new();
    let mut row_sums_ok = true;
    let mut times = vec![0usize; g.n()];
    let dk = (DEFAULT_DEGREE as u64).pow(k as u32);
    for (ci, cl) in cover.clusters().enumerate() {
        for &v in cl {
            times[v] += 1;
        }
        let aw = a.restrict(cl);
        let mut owner = Vec::new();
        for (v, w) in aw.iter() {
            owner.extend(std::iter::repeat_n(v, w as usize));
        }
        if owner.is_empty() {
            continue;
        }
        let ex = CopyExpander::new(owner.len(), DEFAULT_DEGREE, derive(seed, &[0x4f, ci as u64]));
        let mut ds = Demand::new();
        for (x, row) in ex.walk_counts(k).into_iter().enumerate() {
            for (y, c) in row {
                if owner[x] != owner[y] {
                    ds.add(owner[x], owner[y], Q::new(c.into(), dk.into()));
                }
            }
        }
        let (out, inn) = ds.out_in();
        row_sums_ok &= out.iter().chain(&inn).all(|(v, x)| *x <= qu(aw.get(*v)));
        total = total.plus(&ds);
    }
    let load = times.iter().copied().max().unwrap_or(0).max(1);
    let d = total.scaled(&Q::new(1.into(), (load as u64).into()));
    let rep = demand_report(&d, a, g, cover.h_diam);
    let size = d.size();
    let report = NrdReport {
        respecting: rep.respecting,
        length_ok: rep.h_length,
        row_sums_ok,
        length_bound: cover.h_diam,
        width: cover.width(),
        load,
        weight: a.size(),
        size_ratio: if a.size() == 0 {
            0.0
        } else {
            crate::rational::to_f64(&size) * cover.width() as f64 / a.size() as f64
        },
        size: fmt_q(&size),
    };
    Ok((d, report))
}

#[derive(Clone, Debug)]
pub struct WitnessCluster {
    /// Covering radius of the cover this cluster belongs to.
    pub level: u64,
    pub clustering: usize,
    pub vertices: Vec<usize>,
    pub router: Router,
    /// Host flows realizing the router edges, keyed by host vertex pairs.
    pub embedding: Embedding,
}

/// Length-constrained expansion witness with its measured parameters.
#[derive(Clone, Debug)]
pub struct Witness {
    pub covers: Vec<NeighborhoodCover>,
    pub clusters: Vec<WitnessCluster>,
    pub s0: usize,
    pub kappa0: Q,
    pub s1: u64,
    pub kappa1: Q,
    pub s: u64,
    pub phi: Q,
}

/// Covering radii a witness for `h` carries covers for: powers of two up to
/// `h`, plus `h` itself.
pub fn witness_levels(h: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (0..64).map(|i| 1u64 << i).take_while(|&x| x <= h).collect();
    if out.last() != Some(&h) {
        out.push(h);
    }
    out
}

pub const DEMO_CONGESTION_FACTOR: u64 = 2;

impl Witness {
    /// Measures `s₀, κ₀, s₁, κ₁` and sets `s = 2·s₀·s₁`, `φ = 1/(κ₀κ₁)`.
    pub fn assemble(g: &Graph, covers: Vec<NeighborhoodCover>, clusters: Vec<WitnessCluster>) -> Result<Witness> {
        let mut s0 = 1usize;
        for c in &clusters {
            let t = c.router.hop_diameter().ok_or_else(|| {
                Error::Invalid(format!("router of cluster at level {} is disconnected", c.level))
            })?;
            s0 = s0.max(t);
        }
        let mut kappa0 = Q::zero();
        let mut s1 = 1u64;
        let mut total = Flow::new();
        for c in &clusters {
            let rep = verify_router(&c.router, s0, &Q::zero())?;
            match rep.congestion {
                ExtQ::Finite(x) => kappa0 = kappa0.max(x),
                ExtQ::Infinite => return invalid("router cannot route its product demand"),
            }
            for f in c.embedding.edges.values() {
                for (p, _) in f.iter() {
                    let len = g.path_length(p).ok_or_else(|| Error::Invalid(format!("embedding path {p:?} is not a path")))?;
                    s1 = s1.max(len.div_ceil(c.level));
                }
            }
            total = total.plus(&c.embedding.total_flow());
        }
        let kappa1 = match congestion_of(g, &total.edge_flow(g)?) {
            ExtQ::Finite(x) => x,
            ExtQ::Infinite => return invalid("embedding uses a zero-capacity edge"),
        };
        // a witness with no routing requirement still needs positive parameters
        if kappa0.is_zero() {
            kappa0 = Q::one();
        }
        let kappa1 = if kappa1.is_zero() { Q::one() } else { kappa1 };
        let phi = Q::one() / (&kappa0 * &kappa1);
        Ok(Witness { covers, clusters, s0, kappa0, s1, kappa1, s: 2 * s0 as u64 * s1, phi })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub covers_ok: bool,
    pub levels_ok: bool,
    pub clusters_ok: bool,
    pub routers_ok: bool,
    pub embedding_congestion_ok: bool,
    pub dilation_ok: bool,
    pub params_ok: bool,
    pub demo_ok: bool,
    pub demo_congestion: ExtQ,
    pub demo_dilation: u64,
    pub demo_size: String,
    pub embedding_congestion: ExtQ,
    pub worst_router_congestion: ExtQ,
    pub cover_reports: Vec<CoverReport>,
    pub problems: Vec<String>,
    pub method: &'static str,
}

impl WitnessReport {
    pub fn pass(&self) -> bool {
        self.covers_ok
            && self.levels_ok
            && self.clusters_ok
            && self.routers_ok
            && self.embedding_congestion_ok
            && self.dilation_ok
            && self.params_ok
            && self.demo_ok
    }
}

/// Checks a witness for `A` at length `h` in `g`, then routes one sampled
/// A-respecting h-length demand through it.
pub fn verify_witness(g: &Graph, w: &Witness, a: &NodeWeighting, h: u64, seed: u64) -> Result<WitnessReport> {
    let mut problems = Vec::new();
    let cover_reports: Vec<CoverReport> = w.covers.iter().map(|c| verify_cover(g, c)).collect();
    let covers_ok = cover_reports.iter().all(|r| r.pass());
    let have: BTreeSet<u64> = w.covers.iter().map(|c| c.h_cov).collect();
    let levels_ok = witness_levels(h).iter().all(|l| have.contains(l));
    if !levels_ok {
        problems.push(format!("cover levels {have:?} miss some of {:?}", witness_levels(h)));
    }
    // every cluster with weight must carry a router over exactly its weight
    let mut clusters_ok = true;
    let mut by_key: BTreeMap<(u64, usize, Vec<usize>), &WitnessCluster> = BTreeMap::new();
    for c in &w.clusters {
        by_key.insert((c.level, c.clustering, c.vertices.clone()), c);
        let inside: BTreeSet<usize> = c.vertices.iter().copied().collect();
        for (i, l) in c.router.labels.iter().enumerate() {
            match l {
                Some(v) if inside.contains(v) => {
                    if c.router.weights[i] != a.get(*v) {
                        clusters_ok = false;
                        problems.push(format!("router weight of vertex {v} differs from A"));
                    }
                }
                Some(v) => {
                    return Err(Error::Invalid(format!("router vertex {v} lies outside its cluster")));
                }
                None => {}
            }
        }
        for (&(u, v), f) in &c.embedding.edges {
            for (p, _) in f.iter() {
                if g.path_edges(p).is_none() {
                    return Err(Error::UnknownEdge(format!("embedding path {p:?} between {u} and {v}")));
                }
            }
        }
        let wsum: u64 = c.router.weights.iter().sum();
        if wsum != a.restrict(&c.vertices).size() {
            clusters_ok = false;
            problems.push(format!("router at level {} misses weight of its cluster", c.level));
        }
    }
    for cover in &w.covers {
        for (ci, cl) in cover.clusterings.iter().enumerate() {
            for s in &cl.clusters {
                if a.restrict(s).size() > 0 && !by_key.contains_key(&(cover.h_cov, ci, s.clone())) {
                    clusters_ok = false;
                    problems.push(format!("cluster at level {} clustering {ci} has no router", cover.h_cov));
                }
            }
        }
    }
    let mut routers_ok = true;
    let mut worst = ExtQ::Finite(Q::zero());
    let mut dilation_ok = true;
    let mut total = Flow::new();
    let mut product_flows = Vec::with_capacity(w.clusters.len());
    for c in &w.clusters {
        let rep = verify_router(&c.router, w.s0, &w.kappa0)?;
        if !rep.pass {
            routers_ok = false;
            problems.push(format!("router at level {} has product congestion {}", c.level, rep.congestion));
        }
        if ext_gt(&rep.congestion, &worst) {
            worst = rep.congestion.clone();
        }
        if let Err(e) = c.embedding.check_routes(&host_router(&c.router)) {
            routers_ok = false;
            problems.push(e.to_string());
        }
        for f in c.embedding.edges.values() {
            for (p, _) in f.iter() {
                if g.path_length(p).is_none_or(|l| l > c.level * w.s1) {
                    dilation_ok = false;
                    problems.push(format!("embedding path {p:?} exceeds {}", c.level * w.s1));
                }
            }
        }
        total = total.plus(&c.embedding.total_flow());
        product_flows.push(rep.flow);
    }
    let load = total.edge_flow(g)?;
    let embedding_congestion = congestion_of(g, &load);
    let embedding_congestion_ok = embedding_congestion.le_q(&w.kappa1);
    for (&e, x) in &load {
        let ed = g.edge(e);
        if *x > &w.kappa1 * qu(ed.capacity) {
            problems.push(format!(
                "embedding congestion on edge {} {} is {} above {}",
                ed.u,
                ed.v,
                congestion_of(g, &BTreeMap::from([(e, x.clone())])),
                fmt_q(&w.kappa1)
            ));
        }
    }
    let params_ok = (w.s0 as u64) * w.s1 <= w.s && &w.kappa0 * &w.kappa1 <= Q::one() / &w.phi;
    let demo = demo_routing(g, w, a, h, seed, &product_flows)?;
    let bound = &w.kappa0 * &w.kappa1 * qu(DEMO_CONGESTION_FACTOR);
    let demo_ok = demo.congestion.le_q(&bound) && demo.dilation <= h * w.s && demo.routes_demand;
    if !demo_ok {
        problems.push(format!("demo routing: congestion {} dilation {}", demo.congestion, demo.dilation));
    }
    Ok(WitnessReport {
        covers_ok,
        levels_ok,
        clusters_ok,
        routers_ok,
        embedding_congestion_ok,
        dilation_ok,
        params_ok,
        demo_ok,
        demo_congestion: demo.congestion,
        demo_dilation: demo.dilation,
        demo_size: fmt_q(&demo.size),
        embedding_congestion,
        worst_router_congestion: worst,
        cover_reports,
        problems,
        method: ROUTER_METHOD,
    })
}

fn ext_gt(a: &ExtQ, b: &ExtQ) -> bool {
    match (a, b) {
        (ExtQ::Infinite, ExtQ::Infinite) => false,
        (ExtQ::Infinite, _) => true,
        (_, ExtQ::Infinite) => false,
        (ExtQ::Finite(x), ExtQ::Finite(y)) => x > y,
    }
}

/// The router as a graph on host vertex ids, for embedding checks.
fn host_router(r: &Router) -> Graph {
    let n = r.labels.iter().flatten().max().map_or(0, |m| m + 1);
    let edges = r
        .edges
        .iter()
        .filter_map(|(a, b, x)| {
            let (u, v) = (r.labels[*a]?, r.labels[*b]?);
            Some(Edge { u, v, length: 1, capacity: crate::rational::ceil_u64(x) })
        })
        .collect();
    Graph::new(n, edges).expect("router edges are simple")
}

struct Demo {
    congestion: ExtQ,
    dilation: u64,
    size: Q,
    routes_demand: bool,
}

/// Samples an integral A-respecting demand between vertices at distance at
/// most `h`, sends each unit through the covering cluster's router in two
/// product-demand legs and projects the result into `g`.
fn demo_routing(g: &Graph, w: &Witness, a: &NodeWeighting, h: u64, seed: u64, products: &[Flow]) -> Result<Demo> {
    let mut r = rng(derive(seed, &[0xde]));
    let mut out_left: BTreeMap<usize, u64> = a.iter().collect();
    let mut in_left = out_left.clone();
    let mut order = a.support();
    order.shuffle(&mut r);
    let mut demand = Demand::new();
    for &u in &order {
        let near: Vec<usize> = g
            .distances_from(&[u], Some(h))
            .iter()
            .enumerate()
            .filter(|(v, d)| *v != u && d.within(h) && in_left.get(v).is_some_and(|&x| x > 0))
            .map(|(v, _)| v)
            .collect();
        if near.is_empty() {
            continue;
        }
        let v = near[r.gen_range(0..near.len())];
        let x = out_left[&u].min(in_left[&v]);
        if x > 0 {
            *out_left.get_mut(&u).unwrap() -= x;
            *in_left.get_mut(&v).unwrap() -= x;
            demand.add(u, v, qu(x));
        }
    }
    let mut host = Flow::new();
    for ((u, v), x) in demand.iter() {
        let d = g.distance(u, v).finite().unwrap();
        let ci = pick_cluster(w, u, v, d).ok_or_else(|| Error::Invalid(format!("no cluster covers pair {u} {v}")))?;
        let c = &w.clusters[ci];
        let rf = two_leg(&c.router, &products[ci], u, v, x);
        host = host.plus(&project_flow(&rf, &c.embedding)?);
    }
    let routed = crate::flow::routed_demand(&host);
    let routes_demand = routed == demand;
    let stats = crate::flow::flow_stats(g, &host)?;
    Ok(Demo { congestion: stats.congestion, dilation: stats.dilation, size: demand.size(), routes_demand })
}

/// Cluster at the smallest level `>= d` whose members include `u`'s ball.
fn pick_cluster(w: &Witness, u: usize, v: usize, d: u64) -> Option<usize> {
    let mut best: Option<(u64, usize)> = None;
    for (i, c) in w.clusters.iter().enumerate() {
        if c.level >= d && c.vertices.contains(&u) && c.vertices.contains(&v) && best.is_none_or(|(l, _)| c.level < l)
        {
            best = Some((c.level, i));
        }
    }
    best.map(|(_, i)| i)
}

/// Router flow (host labels) sending `x` from `u` to `v`: `u` spreads to
/// every `w` in proportion to `A(w)`, then `w` forwards to `v`, both legs
/// along the product-demand routing.
fn two_leg(r: &Router, product: &Flow, u: usize, v: usize, x: &Q) -> Flow {
    let (lu, lv) = (r.local_of(u).unwrap(), r.local_of(v).unwrap());
    let total: u64 = r.weights.iter().sum();
    type Routes = Vec<(Vec<usize>, Q)>;
    let mut by_pair: BTreeMap<(usize, usize), Routes> = BTreeMap::new();
    for (p, amt) in product.iter() {
        by_pair.entry((p[0], *p.last().unwrap())).or_default().push((p.clone(), amt.clone()));
    }
    let label = |p: &[usize]| -> Vec<usize> { p.iter().map(|&i| r.labels[i].unwrap_or(usize::MAX)).collect() };
    let mut out = Flow::new();
    for (wl, &aw) in r.weights.iter().enumerate() {
        if aw == 0 {
            continue;
        }
        let share = x * Q::new(aw.into(), total.into());
        let leg = |s: usize, t: usize| -> Vec<(Vec<usize>, Q)> {
            if s == t {
                return vec![(vec![s], share.clone())];
            }
            let ps = &by_pair[&(s, t)];
            let val: Q = ps.iter().map(|(_, a)| a.clone()).sum();
            ps.iter().map(|(p, a)| (p.clone(), a * &share / &val)).collect()
        };
        for (walk, amt) in merge_by_overlap(&leg(lu, wl), &leg(wl, lv)) {
            let simple = shortcut_walk(&walk);
            if simple.len() >= 2 {
                out.add(label(&simple), amt);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn unit(vs: &[usize]) -> NodeWeighting {
        vs.iter().map(|&v| (v, 1)).collect()
    }

    #[test]
    fn star_and_clique_fixtures() {
        let star = make_router(RouterKind::Star, &unit(&[0, 1]), 0).unwrap();
        let rep = verify_router(&star, 2, &q(2)).unwrap();
        assert!(rep.pass && rep.exact, "{rep:?}");
        assert_eq!(rep.congestion, ExtQ::Finite(q(1)));
        let clique = make_router(RouterKind::Clique, &unit(&[0, 1, 2]), 0).unwrap();
        let rep = verify_router(&clique, 2, &q(4)).unwrap();
        assert!(rep.pass, "{rep:?}");
        let single = make_router(RouterKind::Star, &unit(&[3]), 0).unwrap();
        assert!(verify_router(&single, 1, &q(1)).unwrap().pass);
    }

    #[test]
    fn isolated_vertices_fail() {
        let r = Router { labels: vec![Some(0), Some(1)], weights: vec![1, 1], edges: vec![] };
        let rep = verify_router(&r, 3, &q(100)).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.congestion, ExtQ::Infinite);
        assert!(make_router(RouterKind::Star, &NodeWeighting::new(), 0).is_err());
    }

    #[test]
    fn regular_power_router() {
        let a: NodeWeighting = (0..6).map(|v| (v, 2)).collect();
        let r = make_router(RouterKind::RegularPower { k: 2 }, &a, 5).unwrap();
        assert_eq!(r.len(), 6);
        assert!(r.hop_diameter().is_some());
        let ex = CopyExpander::new(12, 8, 5);
        assert!(ex.spectral_ok, "lambda2 {}", ex.lambda2);
        assert!(ex.adj.iter().all(|row| row.values().sum::<u64>() == 8));
        for row in ex.walk_counts(2) {
            assert_eq!(row.values().sum::<u64>(), 64);
        }
        assert!(ex.power_pairs(2).len() <= 12 * 64 / 2);
    }

    #[test]
    fn nrd_examples() {
        let g = Graph::unit(2, &[(0, 1)]).unwrap();
        let (d, rep) = neighborhood_router_demand(&g, &NodeWeighting::new(), 1, 1, 2, 0).unwrap();
        assert!(d.is_empty() && rep.respecting);
        let (d, rep) = neighborhood_router_demand(&g, &unit(&[0, 1]), 1, 1, 2, 3).unwrap();
        assert!(rep.respecting && rep.length_ok && rep.row_sums_ok, "{rep:?}");
        // two copies, four permutations: swaps give 2 walks each way per swap
        let ex = CopyExpander::new(2, 8, derive(3, &[0x4f, 0]));
        let cross = ex.adj[0].get(&1).copied().unwrap_or(0);
        assert_eq!(d.get(0, 1), Q::new(cross.into(), (8 * rep.load as u64).into()));
    }

    #[test]
    fn witness_on_single_edge() {
        let g = Graph::unit(2, &[(0, 1)]).unwrap();
        let a = unit(&[0, 1]);
        let cover = build_cover(&g, 1, 2, 1.0, 0, &CoverConfig::default()).unwrap();
        let cl = cover.clusterings[0].clusters[0].clone();
        assert_eq!(cl, vec![0, 1]);
        let router = Router::from_host_edges(&a, &BTreeMap::from([((0, 1), q(1))]));
        let mut emb = Embedding::new();
        let mut f = Flow::new();
        f.add(vec![0, 1], q(1));
        emb.insert(0, 1, f);
        let wc = WitnessCluster { level: 1, clustering: 0, vertices: cl, router, embedding: emb };
        let w = Witness::assemble(&g, vec![cover.clone()], vec![wc.clone()]).unwrap();
        let rep = verify_witness(&g, &w, &a, 1, 0).unwrap();
        assert!(rep.pass(), "{rep:?}");
        let mut bad = w.clone();
        bad.kappa1 = &bad.kappa1 - Q::new(1.into(), 2.into());
        let rep = verify_witness(&g, &bad, &a, 1, 0).unwrap();
        assert!(!rep.embedding_congestion_ok);
        assert!(rep.problems.iter().any(|p| p.contains("edge 0 1")));
    }
}
