//! Sparse (≤h,s)-length cut finding by cut-matching games run inside the
//! clusters of neighborhood covers, returning either a self-certified sparse
//! moving cut or an expansion witness.
//!
//! Every candidate cut comes from a cutmatch. The unmatched mass of that
//! cutmatch, paired up by a transport plan and scaled down by the number of
//! clusterings involved, is an h″-length A-respecting demand the cut fully
//! separates; that demand is the cut's certificate and its size the
//! demand-size estimate.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cover::{build_cover, CoverConfig, NeighborhoodCover};
use crate::cutmatch::{cutmatch, CutmatchResult};
use crate::flow::{Embedding, Flow};
use crate::graph::{apply_cut, demand_report, separated_amount, Demand, Graph, MovingCut, NodeWeighting};
use crate::rational::{ceil_log2_u64, fmt_q, qu, Q};
use crate::rng::{derive, rng};
use crate::router::{witness_levels, Router, Witness, WitnessCluster};
use crate::{invalid, Error, Result};

/// Matched flow of a cluster's game so far, as `(u, v, amount)` edges.
pub type CmgEdges = [(usize, usize, Q)];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StrategyOutput {
    pub pairs: Vec<(NodeWeighting, NodeWeighting)>,
    /// Mass matched to itself at a split vertex.
    pub self_matched: u64,
    /// Mass left out to make the halves equal.
    pub dropped: u64,
}

pub trait CutStrategy: Sync {
    fn name(&self) -> &'static str;
    fn play(&self, cmg: &CmgEdges, a: &NodeWeighting, round: usize, seed: u64) -> StrategyOutput;
}

/// Splits the mass into equal halves by a random potential that has been
/// averaged along the game's matched flow.
#[derive(Clone, Copy, Debug, Default)]
pub struct KrvStrategy;

impl CutStrategy for KrvStrategy {
    fn name(&self) -> &'static str {
        "krv"
    }

    fn play(&self, cmg: &CmgEdges, a: &NodeWeighting, round: usize, seed: u64) -> StrategyOutput {
        krv_cut_strategy(cmg, a, round, seed)
    }
}

pub fn krv_cut_strategy(cmg: &CmgEdges, a: &NodeWeighting, round: usize, seed: u64) -> StrategyOutput {
    let mut r = rng(derive(seed, &[0x6b72, round as u64]));
    let mut pot: BTreeMap<usize, f64> = a.iter().map(|(v, _)| (v, r.gen::<f64>() - 0.5)).collect();
    for (u, v, x) in cmg {
        let (Some(&pu), Some(&pv)) = (pot.get(u), pot.get(v)) else { continue };
        let x = crate::rational::to_f64(x);
        let (au, av) = (a.get(*u) as f64, a.get(*v) as f64);
        pot.insert(*u, pu + x / (2.0 * au) * (pv - pu));
        pot.insert(*v, pv + x / (2.0 * av) * (pu - pv));
    }
    let mut order: Vec<(usize, u64)> = a.iter().collect();
    order.sort_by(|x, y| pot[&x.0].total_cmp(&pot[&y.0]).then(x.0.cmp(&y.0)));
    split_halves(&order)
}

/// Low half from the front of `order`, high half from the back, each of mass
/// `⌊M/2⌋`; a vertex landing in both halves is matched to itself.
pub fn split_halves(order: &[(usize, u64)]) -> StrategyOutput {
    let total: u64 = order.iter().map(|x| x.1).sum();
    let half = total / 2;
    let take = |it: &mut dyn Iterator<Item = &(usize, u64)>| -> BTreeMap<usize, u64> {
        let mut need = half;
        let mut out = BTreeMap::new();
        for &(v, w) in it {
            if need == 0 {
                break;
            }
            let x = w.min(need);
            out.insert(v, x);
            need -= x;
        }
        out
    };
    let mut low = take(&mut order.iter());
    let mut high = take(&mut order.iter().rev());
    let mut self_matched = 0;
    for (v, x) in low.iter_mut() {
        if let Some(y) = high.get_mut(v) {
            let k = (*x).min(*y);
            *x -= k;
            *y -= k;
            self_matched += k;
        }
    }
    let a: NodeWeighting = low.into_iter().filter(|x| x.1 > 0).collect();
    let b: NodeWeighting = high.into_iter().filter(|x| x.1 > 0).collect();
    let pairs = if a.is_empty() { vec![] } else { vec![(a, b)] };
    StrategyOutput { pairs, self_matched: 2 * self_matched, dropped: total - 2 * half }
}

#[derive(Clone, Debug)]
pub struct SparseCutConfig {
    /// `φ' = φ / (c·width·⌈log₂N⌉)`; `None` uses `c = 1/⌈log₂N⌉`.
    pub c: Option<Q>,
    /// Declared cover diameter is at most `alpha_s · h'`.
    pub alpha_s: u64,
    pub l: u64,
    /// Game rounds; `None` uses `max(⌈1/ε⌉, ⌈log₂|supp|⌉ + 1)`.
    pub rounds: Option<usize>,
}

impl Default for SparseCutConfig {
    fn default() -> Self {
        SparseCutConfig { c: None, alpha_s: 4, l: 1, rounds: None }
    }
}

#[derive(Clone, Debug)]
pub struct CutOutcome {
    pub cut: MovingCut,
    pub h2: u64,
    pub demand_size_estimate: Q,
    pub witness_demand: Demand,
    /// Factor the unmatched transport plan was scaled by.
    pub demand_scale: Q,
    pub cutmatch_phi: Q,
}

#[derive(Clone, Debug)]
pub enum SparseCutResult {
    Cut(Box<CutOutcome>),
    Witness(Box<Witness>),
}

#[derive(Clone, Debug, Serialize)]
pub struct SparseCutStats {
    pub levels: Vec<u64>,
    pub widths: Vec<usize>,
    pub classes: Vec<u64>,
    pub cutmatches: usize,
    pub candidates: usize,
    pub self_matched: u64,
    pub dropped: u64,
    pub extra_rounds: usize,
    pub strategy: &'static str,
}

/// One cut-matching game: a (part of a) cluster's weighting and its union graph.
#[derive(Clone, Debug)]
struct Game {
    key: usize,
    weight: NodeWeighting,
    edges: Vec<(usize, usize, Q)>,
    flow: Flow,
}

#[derive(Clone, Debug)]
struct ClusterInfo {
    level: u64,
    clustering: usize,
    vertices: Vec<usize>,
    class: u64,
    games: Vec<usize>,
}

fn record_matches(game: &mut Game, f: &Flow) {
    for (p, x) in f.iter() {
        game.edges.push((p[0], *p.last().unwrap(), x.clone()));
    }
    game.flow = game.flow.plus(f);
}

/// Splits `a` in vertex order into parts of mass at most `cap`.
fn split_weighting(a: &NodeWeighting, parts: u64) -> Vec<NodeWeighting> {
    if parts <= 1 {
        return vec![a.clone()];
    }
    let cap = a.size().div_ceil(parts);
    let mut out = vec![NodeWeighting::new()];
    let mut room = cap;
    for (v, mut w) in a.iter() {
        while w > 0 {
            if room == 0 {
                out.push(NodeWeighting::new());
                room = cap;
            }
            let x = w.min(room);
            out.last_mut().unwrap().add(v, x);
            w -= x;
            room -= x;
        }
    }
    out
}

/// Greedy northwest-corner pairing of the unmatched sources and sinks.
fn transport(cm: &CutmatchResult, pairs: &[(NodeWeighting, NodeWeighting)]) -> Demand {
    let mut d = Demand::new();
    for ((a, b), o) in pairs.iter().zip(&cm.pairs) {
        let mut sent: BTreeMap<usize, Q> = BTreeMap::new();
        let mut got: BTreeMap<usize, Q> = BTreeMap::new();
        for (p, x) in o.flow.iter() {
            *sent.entry(p[0]).or_insert_with(Q::zero) += x;
            *got.entry(*p.last().unwrap()).or_insert_with(Q::zero) += x;
        }
        let mut src: Vec<(usize, Q)> =
            o.unmatched.iter().map(|&v| (v, qu(a.get(v)) - sent.get(&v).cloned().unwrap_or_else(Q::zero))).collect();
        let mut dst: Vec<(usize, Q)> = o
            .unmatched_sink
            .iter()
            .map(|&v| (v, qu(b.get(v)) - got.get(&v).cloned().unwrap_or_else(Q::zero)))
            .collect();
        let (mut i, mut j) = (0, 0);
        while i < src.len() && j < dst.len() {
            let x = if src[i].1 < dst[j].1 { src[i].1.clone() } else { dst[j].1.clone() };
            if !x.is_zero() {
                d.add(src[i].0, dst[j].0, x.clone());
            }
            src[i].1 -= &x;
            dst[j].1 -= &x;
            if src[i].1.is_zero() {
                i += 1;
            }
            if j < dst.len() && dst[j].1.is_zero() {
                j += 1;
            }
        }
    }
    d
}

#[allow(clippy::too_many_arguments)]
pub fn sparse_cut(
    g: &Graph,
    a: &NodeWeighting,
    h: u64,
    s: u64,
    phi: &Q,
    eps: f64,
    strategy: &dyn CutStrategy,
    cfg: &SparseCutConfig,
    seed: u64,
) -> Result<(SparseCutResult, SparseCutStats)> {
    if h == 0 || s == 0 || *phi <= Q::zero() || cfg.l == 0 || !(eps > 0.0 && eps <= 1.0) {
        return invalid("sparse cut needs h, s, L >= 1, phi > 0 and eps in (0, 1]");
    }
    if a.max_vertex().is_some_and(|v| v >= g.n()) {
        return invalid("node-weighting support outside the graph");
    }
    let log_n = g.log_n();
    let c = cfg.c.clone().unwrap_or_else(|| Q::new(1.into(), log_n.into()));
    let total = a.size();
    let levels = witness_levels(h);

    // Step 1: covers per level, weightings split to mass at most |A|/L, classes by diameter.
    let mut covers: Vec<NeighborhoodCover> = Vec::new();
    let mut clusters: Vec<ClusterInfo> = Vec::new();
    let mut games: Vec<Game> = Vec::new();
    for (li, &lv) in levels.iter().enumerate() {
        let cc = CoverConfig { h_diam: Some(cfg.alpha_s.max(2) * lv), max_width: None };
        let cover = build_cover(g, lv, 2 * s, eps.min(1.0), derive(seed, &[0x5c, li as u64]), &cc)?;
        for (ci, cl) in cover.clusterings.iter().enumerate() {
            for members in &cl.clusters {
                let aw = a.restrict(members);
                if aw.is_empty() {
                    continue;
                }
                let parts = if aw.size() * cfg.l > total { (aw.size() * cfg.l).div_ceil(total) } else { 1 };
                let mut ids = Vec::new();
                for part in split_weighting(&aw, parts) {
                    ids.push(games.len());
                    games.push(Game { key: clusters.len(), weight: part, edges: vec![], flow: Flow::new() });
                }
                clusters.push(ClusterInfo {
                    level: lv,
                    clustering: ci,
                    vertices: members.clone(),
                    class: cl.diameter.max(1),
                    games: ids,
                });
            }
        }
        covers.push(cover);
    }
    let mut class_width: BTreeMap<u64, usize> = BTreeMap::new();
    {
        let mut seen = std::collections::BTreeSet::new();
        for cl in &clusters {
            if seen.insert((cl.class, cl.level, cl.clustering)) {
                *class_width.entry(cl.class).or_insert(0) += 1;
            }
        }
    }
    let mut stats = SparseCutStats {
        levels: levels.clone(),
        widths: covers.iter().map(|c| c.width()).collect(),
        classes: class_width.keys().copied().collect(),
        cutmatches: 0,
        candidates: 0,
        self_matched: 0,
        dropped: 0,
        extra_rounds: 0,
        strategy: strategy.name(),
    };
    let max_supp = games.iter().map(|x| x.weight.support().len()).max().unwrap_or(1) as u64;
    let rounds = cfg.rounds.unwrap_or(((1.0 / eps).ceil() as usize).max(ceil_log2_u64(max_supp) as usize + 1));
    let mut best: Option<CutOutcome> = None;
    let consider = |cand: CutOutcome, best: &mut Option<CutOutcome>| {
        if best.as_ref().is_none_or(|b| cand.demand_size_estimate > b.demand_size_estimate) {
            *best = Some(cand);
        }
    };

    // Step 2: per diameter class, rounds of strategy + one cutmatch.
    for (&class, &width) in &class_width {
        let len = class.saturating_mul(s);
        let phi2 = phi / (&c * qu(width as u64) * qu(log_n));
        let members: Vec<usize> = (0..games.len()).filter(|&i| clusters[games[i].key].class == class).collect();
        let scale = Q::new(1.into(), (width as u64).into());
        let mut round = 0;
        let mut extra = 0;
        loop {
            let active: Vec<usize> = if round < rounds {
                members.clone()
            } else {
                members.iter().copied().filter(|&i| !game_connected(&games[i])).collect()
            };
            if active.is_empty() || extra > 2 * rounds {
                break;
            }
            if round >= rounds {
                extra += 1;
            }
            let plays: Vec<StrategyOutput> = active
                .par_iter()
                .map(|&i| strategy.play(&games[i].edges, &games[i].weight, round, derive(seed, &[class, round as u64, i as u64])))
                .collect();
            let mut pairs = Vec::new();
            let mut owner = Vec::new();
            for (&i, out) in active.iter().zip(plays) {
                stats.self_matched += out.self_matched;
                stats.dropped += out.dropped;
                for p in out.pairs {
                    pairs.push(p);
                    owner.push(i);
                }
            }
            round += 1;
            if pairs.is_empty() {
                continue;
            }
            let cm = cutmatch(g, &pairs, len, &phi2)?;
            stats.cutmatches += 1;
            for (j, o) in cm.pairs.iter().enumerate() {
                record_matches(&mut games[owner[j]], &o.flow);
            }
            if let Some(cand) = certify(g, a, &cm, &pairs, class, s, phi, &scale, &phi2)? {
                stats.candidates += 1;
                consider(cand, &mut best);
            }
        }
        stats.extra_rounds += round.saturating_sub(rounds);
    }

    // Step 3: glue the parts of split clusters.
    if cfg.l > 1 {
        for (&class, &width) in &class_width {
            let mut pairs = Vec::new();
            let mut owner = Vec::new();
            for cl in clusters.iter().filter(|c| c.class == class && c.games.len() > 1) {
                for w in cl.games.windows(2) {
                    if let Some(p) = glue_pair(&games[w[0]].weight, &games[w[1]].weight) {
                        pairs.push(p);
                        owner.push(w[0]);
                    }
                }
            }
            if pairs.is_empty() {
                continue;
            }
            let phi2 = phi / (&c * qu(width as u64) * qu(log_n) * qu(cfg.l));
            let cm = cutmatch(g, &pairs, class.saturating_mul(s), &phi2)?;
            stats.cutmatches += 1;
            for (j, o) in cm.pairs.iter().enumerate() {
                record_matches(&mut games[owner[j]], &o.flow);
            }
            let scale = Q::new(1.into(), (2 * width as u64).into());
            if let Some(cand) = certify(g, a, &cm, &pairs, class, s, phi, &scale, &phi2)? {
                stats.candidates += 1;
                consider(cand, &mut best);
            }
        }
    }

    if let Some(b) = best {
        return Ok((SparseCutResult::Cut(Box::new(b)), stats));
    }
    let mut wcs = Vec::new();
    for cl in &clusters {
        let weight = a.restrict(&cl.vertices);
        let mut caps: BTreeMap<(usize, usize), Q> = BTreeMap::new();
        let mut emb: BTreeMap<(usize, usize), Flow> = BTreeMap::new();
        for &gi in &cl.games {
            for (p, x) in games[gi].flow.iter() {
                let (u, v) = (p[0], *p.last().unwrap());
                let key = (u.min(v), u.max(v));
                *caps.entry(key).or_insert_with(Q::zero) += x;
                emb.entry(key).or_default().add(p.clone(), x.clone());
            }
        }
        let router = Router::from_host_edges(&weight, &caps);
        let mut embedding = Embedding::new();
        for ((u, v), f) in emb {
            embedding.insert(u, v, f);
        }
        wcs.push(WitnessCluster {
            level: cl.level,
            clustering: cl.clustering,
            vertices: cl.vertices.clone(),
            router,
            embedding,
        });
    }
    let w = Witness::assemble(g, covers, wcs)?;
    Ok((SparseCutResult::Witness(Box::new(w)), stats))
}

fn game_connected(game: &Game) -> bool {
    let supp = game.weight.support();
    if supp.len() <= 1 {
        return true;
    }
    let idx: BTreeMap<usize, usize> = supp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..supp.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for (u, v, _) in &game.edges {
        if let (Some(&a), Some(&b)) = (idx.get(u), idx.get(v)) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    let r = find(&mut parent, 0);
    (0..supp.len()).all(|i| find(&mut parent, i) == r)
}

/// Equal-size, disjoint-support halves from two consecutive parts.
fn glue_pair(x: &NodeWeighting, y: &NodeWeighting) -> Option<(NodeWeighting, NodeWeighting)> {
    let mut a: BTreeMap<usize, u64> = x.iter().collect();
    let mut b: BTreeMap<usize, u64> = y.iter().collect();
    for (v, w) in a.iter_mut() {
        if let Some(z) = b.get_mut(v) {
            let k = (*w).min(*z);
            *w -= k;
            *z -= k;
        }
    }
    let sa: u64 = a.values().sum();
    let sb: u64 = b.values().sum();
    let m = sa.min(sb);
    let trim = |map: BTreeMap<usize, u64>| -> NodeWeighting {
        let mut need = m;
        let mut out = NodeWeighting::new();
        for (v, w) in map {
            let t = w.min(need);
            if t > 0 {
                out.add(v, t);
            }
            need -= t;
        }
        out
    };
    if m == 0 {
        return None;
    }
    Some((trim(a), trim(b)))
}

/// Turns a cutmatch with a nonzero cut and unmatched mass into a certified
/// candidate; a cut cannot fail its certificate silently.
#[allow(clippy::too_many_arguments)]
fn certify(
    g: &Graph,
    a: &NodeWeighting,
    cm: &CutmatchResult,
    pairs: &[(NodeWeighting, NodeWeighting)],
    class: u64,
    s: u64,
    phi: &Q,
    scale: &Q,
    phi2: &Q,
) -> Result<Option<CutOutcome>> {
    if cm.cut.is_zero() || cm.deficit() == 0 {
        return Ok(None);
    }
    let size = cm.cut.size(g);
    let d = transport(cm, pairs).scaled(scale);
    let rep = demand_report(&d, a, g, class);
    let gc = apply_cut(g, &cm.cut)?;
    let sep = separated_amount(&gc, &d, class.saturating_mul(s));
    let ds = d.size();
    let ok = rep.respecting && rep.h_length && sep == ds && !ds.is_zero() && size <= phi * &ds;
    if !ok {
        return Err(Error::Invalid(format!(
            "cutmatch cut of size {} failed its certificate (respecting {}, length {}, separated {}/{})",
            fmt_q(&size),
            rep.respecting,
            rep.h_length,
            fmt_q(&sep),
            fmt_q(&ds)
        )));
    }
    Ok(Some(CutOutcome {
        cut: cm.cut.clone(),
        h2: class,
        demand_size_estimate: ds,
        witness_demand: d,
        demand_scale: scale.clone(),
        cutmatch_phi: phi2.clone(),
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct CutCertificate {
    pub h_length: bool,
    pub respecting: bool,
    pub separated: bool,
    pub sparse: bool,
    pub cut_size: String,
    pub demand_size: String,
    pub sparsity: String,
}

impl CutCertificate {
    pub fn pass(&self) -> bool {
        self.h_length && self.respecting && self.separated && self.sparse
    }
}

/// Exact check of a cut outcome's self-certificate.
pub fn check_cut(g: &Graph, a: &NodeWeighting, s: u64, phi: &Q, out: &CutOutcome) -> Result<CutCertificate> {
    let rep = demand_report(&out.witness_demand, a, g, out.h2);
    let gc = apply_cut(g, &out.cut)?;
    let ds = out.witness_demand.size();
    let sep = separated_amount(&gc, &out.witness_demand, out.h2.saturating_mul(s));
    let size = out.cut.size(g);
    if ds.is_zero() {
        return Err(Error::Invalid("cut outcome carries an empty witness demand".into()));
    }
    Ok(CutCertificate {
        h_length: rep.h_length,
        respecting: rep.respecting,
        separated: sep == ds && out.cut.scale == out.h2 * s,
        sparse: size <= phi * &ds,
        sparsity: fmt_q(&(&size / &ds)),
        cut_size: fmt_q(&size),
        demand_size: fmt_q(&ds),
    })
}

impl SparseCutResult {
    pub fn is_witness(&self) -> bool {
        matches!(self, SparseCutResult::Witness(_))
    }

    pub fn cut(&self) -> Option<&CutOutcome> {
        match self {
            SparseCutResult::Cut(c) => Some(c),
            SparseCutResult::Witness(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            SparseCutResult::Witness(w) => Some(w),
            SparseCutResult::Cut(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{clique, dumbbell};
    use crate::oracle::cut_sparsity;
    use crate::rational::qr;
    use crate::router::verify_witness;

    #[test]
    fn halves_and_degenerate_splits() {
        let out = split_halves(&[(0, 1), (1, 1), (2, 1), (3, 1)]);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].0.size(), 2);
        assert_eq!(out.pairs[0].1.size(), 2);
        let odd = split_halves(&[(0, 1), (1, 1), (2, 1)]);
        assert_eq!(odd.dropped, 1);
        assert_eq!(odd.pairs[0].0.size(), odd.pairs[0].1.size());
        let single = split_halves(&[(4, 5)]);
        assert!(single.pairs.is_empty());
        assert_eq!((single.self_matched, single.dropped), (4, 1));
        let a: NodeWeighting = (0..6).map(|v| (v, 3)).collect();
        let out = krv_cut_strategy(&[], &a, 0, 9);
        let (x, y) = &out.pairs[0];
        assert_eq!(x.size(), y.size());
        assert!(x.plus(y).leq(&a));
    }

    #[test]
    fn single_vertex_gives_witness() {
        let g = Graph::unit(1, &[]).unwrap();
        let a = NodeWeighting::from_iter([(0, 3)]);
        let (r, _) = sparse_cut(&g, &a, 2, 4, &qr(1, 10), 0.5, &KrvStrategy, &SparseCutConfig::default(), 1).unwrap();
        let w = r.witness().expect("witness");
        assert!(verify_witness(&g, w, &a, 2, 0).unwrap().pass());
    }

    #[test]
    fn clique_gives_witness() {
        let g = clique(6);
        let a = g.degree_weighting();
        let (r, _) = sparse_cut(&g, &a, 2, 4, &qr(1, 50), 0.5, &KrvStrategy, &SparseCutConfig::default(), 3).unwrap();
        let w = r.witness().expect("witness on a clique");
        let rep = verify_witness(&g, w, &a, 2, 0).unwrap();
        assert!(rep.pass(), "{rep:?}");
    }

    #[test]
    fn dumbbell_bridge_is_cut() {
        let g = dumbbell(5);
        let a = g.degree_weighting();
        let phi = qr(1, 5);
        let (r, _) = sparse_cut(&g, &a, 2, 4, &phi, 0.5, &KrvStrategy, &SparseCutConfig::default(), 3).unwrap();
        let c = r.cut().expect("cut on a dumbbell");
        assert!(check_cut(&g, &a, 4, &phi, c).unwrap().pass());
        let sp = cut_sparsity(&g, &c.cut, &a, c.h2, 4).unwrap();
        assert!(sp.le_q(&phi), "oracle sparsity {sp}");
    }
}
