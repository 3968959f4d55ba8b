//! Epoch loop of the decomposition: repeated sparse cuts at shrinking lengths
//! and sparsities, the closing certificate run, and the linkedness alternation.

use std::collections::BTreeMap;

use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::graph::{apply_increase, Graph, MovingCut, NodeWeighting};
use crate::oracle::cut_sparsity;
use crate::rational::ExtQ;
use crate::rational::{ceil_u64, fmt_q, qu, to_f64, Q};
use crate::rng::derive;
use crate::router::Witness;
use crate::sparse_cut::{
    krv_cut_strategy, sparse_cut, split_halves, CmgEdges, CutStrategy, KrvStrategy, SparseCutConfig, SparseCutResult,
    StrategyOutput,
};
use crate::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StrategyChoice {
    Krv,
    Recursive,
}

#[derive(Clone, Debug)]
pub struct DriverConfig {
    pub alpha_s: u64,
    pub alpha_phi: Q,
    pub c: Q,
    pub s0: u64,
    /// Inner sparse-cut calls per epoch; `None` uses `⌈4·log₂N⌉`.
    pub l: Option<usize>,
    /// Calls allowed in the last epoch before giving up on a witness.
    pub closing_cap: usize,
    pub sparse: SparseCutConfig,
    pub strategy: StrategyChoice,
    pub seed: u64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            alpha_s: 2,
            alpha_phi: Q::one(),
            c: Q::new(1.into(), 8.into()),
            s0: 1,
            l: None,
            closing_cap: 256,
            sparse: SparseCutConfig::default(),
            strategy: StrategyChoice::Krv,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CutRecord {
    pub epoch: usize,
    pub call: usize,
    pub scale: u64,
    pub h2: u64,
    pub size: String,
    pub certified_demand: String,
    pub edges: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpochReport {
    pub h: u64,
    pub s: u64,
    pub phi: String,
    pub calls: usize,
    pub cuts: usize,
    pub ended_with_witness: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DriverReport {
    pub epochs: Vec<EpochReport>,
    pub cuts: Vec<CutRecord>,
    pub phi0: String,
    pub phi: String,
    pub h: u64,
    pub s_final: u64,
    pub a_size: u64,
    pub cut_size: String,
    pub kappa_realized: String,
    pub kappa_realized_f64: f64,
    pub size_bound_holds: bool,
    pub witness: bool,
    pub witness_s: Option<u64>,
    pub witness_phi: Option<String>,
    pub strategy: StrategyChoice,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Each applied cut, at its own scale `h″·s`.
    pub cuts: Vec<MovingCut>,
    pub witness: Option<Witness>,
    pub report: DriverReport,
}

impl Decomposition {
    /// Total length increase per edge.
    pub fn increase(&self) -> BTreeMap<usize, u64> {
        total_increase(&self.cuts)
    }

    /// `G - ΣC`.
    pub fn cut_graph(&self, g: &Graph) -> Graph {
        apply_increase(g, self.increase())
    }

    pub fn size(&self, g: &Graph) -> Q {
        self.cuts.iter().map(|c| c.size(g)).sum()
    }
}

fn total_increase(cuts: &[MovingCut]) -> BTreeMap<usize, u64> {
    let mut inc = BTreeMap::new();
    for c in cuts {
        for (e, w) in c.iter() {
            *inc.entry(e).or_insert(0u64) += w;
        }
    }
    inc
}

/// Smallest exact sparsity of a single-edge full moving cut over every
/// length budget `h′ ≤ h` that is a power of two, at length slack `s`.
/// Cuts that separate nothing are infinitely sparse and skipped. Returns the
/// minimum (if any cut separates something) and how many cuts were checked.
pub fn single_edge_sparsity_floor(g: &Graph, a: &NodeWeighting, h: u64, s: u64) -> Result<(Option<Q>, usize)> {
    let mut best: Option<Q> = None;
    let mut checked = 0;
    let mut hp = 1;
    while hp <= h {
        for e in 0..g.m() {
            checked += 1;
            if let ExtQ::Finite(x) = cut_sparsity(g, &MovingCut::full(hp * s, [e]), a, hp, s)? {
                if best.as_ref().is_none_or(|b| x < *b) {
                    best = Some(x);
                }
            }
        }
        hp *= 2;
    }
    Ok((best, checked))
}

/// Largest final `φ` for which, at every epoch's `(h_j, s_j)`, each
/// single-edge full cut is at least `φ_j`-sparse. Below it the driver has no
/// single-edge cut to find. `None` when no single-edge cut separates anything.
pub fn epoch_single_edge_threshold(
    g: &Graph,
    a: &NodeWeighting,
    h: u64,
    eps_prime: f64,
    cfg: &DriverConfig,
) -> Result<Option<Q>> {
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return invalid("eps' must lie in (0, 1)");
    }
    let epochs = recursion_cap(eps_prime);
    let mut best: Option<Q> = None;
    for (hj, sj, pj) in epoch_parameters(h, &Q::one(), epochs, cfg)? {
        if let (Some(f), _) = single_edge_sparsity_floor(g, a, hj, sj)? {
            let t = f / pj;
            if best.as_ref().is_none_or(|b| t < *b) {
                best = Some(t);
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct PostCertificate {
    pub size_bound: bool,
    pub kappa_realized: String,
    /// A fresh sparse cut on `G - C` at the final parameters returns a witness.
    pub fresh_witness: bool,
    pub single_edge_cuts: usize,
    /// Smallest single-edge sparsity on `G - C`; `None` when nothing separates.
    pub single_edge_floor: Option<String>,
    pub single_edge_ok: bool,
    pub witness_ok: Option<bool>,
}

impl PostCertificate {
    pub fn pass(&self) -> bool {
        self.size_bound && self.fresh_witness && self.single_edge_ok && self.witness_ok.unwrap_or(true)
    }
}

/// Exact post-run checks of a decomposition: the size bound, a fresh
/// witness-returning sparse cut on `G - C`, the single-edge sparsity scan
/// against `φ`, and `verify_witness` on the emitted witness. The scan uses the
/// exact oracle and is meant for small graphs.
pub fn certify_decomposition(
    g: &Graph,
    a: &NodeWeighting,
    h: u64,
    phi: &Q,
    eps: f64,
    d: &Decomposition,
    seed: u64,
) -> Result<PostCertificate> {
    let gc = d.cut_graph(g);
    let s = d.report.s_final;
    let (fresh, _) = sparse_cut(&gc, a, h, s, phi, eps, &KrvStrategy, &SparseCutConfig::default(), derive(seed, &[0xce]))?;
    let (floor, checked) = single_edge_sparsity_floor(&gc, a, h, s)?;
    let witness_ok = match &d.witness {
        Some(w) => Some(crate::router::verify_witness(&gc, w, a, h, seed)?.pass()),
        None => None,
    };
    Ok(PostCertificate {
        size_bound: d.report.size_bound_holds,
        kappa_realized: d.report.kappa_realized.clone(),
        fresh_witness: fresh.is_witness(),
        single_edge_cuts: checked,
        single_edge_ok: floor.as_ref().is_none_or(|x| x >= phi),
        single_edge_floor: floor.as_ref().map(fmt_q),
        witness_ok,
    })
}

/// Per-epoch `(h_j, s_j, φ_j)` for `j = 0..=E`, ending at `(h, α_s^E·s₀, φ)`.
pub fn epoch_parameters(h: u64, phi: &Q, epochs: usize, cfg: &DriverConfig) -> Result<Vec<(u64, u64, Q)>> {
    let mut hs = vec![h];
    for _ in 0..epochs {
        let next = hs.last().unwrap().checked_mul(2 * cfg.alpha_s).ok_or_else(|| Error::Invalid("h_0 overflows".into()))?;
        hs.push(next);
    }
    hs.reverse();
    let ss: Vec<u64> = (0..=epochs as u32).map(|j| cfg.s0 * cfg.alpha_s.pow(j)).collect();
    let mut phis = vec![phi.clone()];
    for j in (1..=epochs).rev() {
        let f = &cfg.c * &cfg.alpha_phi * qu(ss[j]).pow(3);
        phis.push(phis.last().unwrap() * f);
    }
    phis.reverse();
    Ok((0..=epochs).map(|j| (hs[j], ss[j], phis[j].clone())).collect())
}

pub fn expander_decomposition(
    g: &Graph,
    a: &NodeWeighting,
    h: u64,
    phi: &Q,
    eps: f64,
    eps_prime: f64,
    cfg: &DriverConfig,
) -> Result<Decomposition> {
    decompose_at_depth(g, a, h, phi, eps, eps_prime, cfg, recursion_cap(eps_prime))
}

fn recursion_cap(eps_prime: f64) -> usize {
    (1.0 / eps_prime).ceil() as usize
}

#[allow(clippy::too_many_arguments)]
fn decompose_at_depth(
    g: &Graph,
    a: &NodeWeighting,
    h: u64,
    phi: &Q,
    eps: f64,
    eps_prime: f64,
    cfg: &DriverConfig,
    depth: usize,
) -> Result<Decomposition> {
    if !(eps > 0.0 && eps < 1.0 && eps_prime > 0.0 && eps_prime < 1.0) {
        return invalid("eps and eps' must lie in (0, 1)");
    }
    if h == 0 || *phi <= Q::zero() || cfg.alpha_s == 0 || cfg.s0 == 0 || cfg.c <= Q::zero() || cfg.alpha_phi <= Q::zero() {
        return invalid("decomposition needs h >= 1, phi > 0 and positive configuration constants");
    }
    let epochs = recursion_cap(eps_prime);
    let params = epoch_parameters(h, phi, epochs, cfg)?;
    let l = cfg.l.unwrap_or(4 * g.log_n() as usize).max(1);
    let strategy: Box<dyn CutStrategy> = match cfg.strategy {
        StrategyChoice::Krv => Box::new(KrvStrategy),
        StrategyChoice::Recursive => Box::new(RecursiveStrategy::new(cfg, eps, eps_prime, depth.saturating_sub(1))),
    };
    let mut sparse = cfg.sparse.clone();
    if cfg.strategy == StrategyChoice::Recursive && sparse.l == 1 {
        sparse.l = (g.n().max(1) as f64).powf(eps_prime).ceil() as u64;
    }
    let mut cuts: Vec<MovingCut> = Vec::new();
    let mut records = Vec::new();
    let mut epoch_reports = Vec::new();
    let mut witness = None;
    let mut current = g.clone();
    for (j, (hj, sj, phij)) in params.iter().enumerate().skip(1) {
        let last = j == epochs;
        let cap = if last { cfg.closing_cap.max(l) } else { l };
        let mut rep = EpochReport { h: *hj, s: *sj, phi: fmt_q(phij), calls: 0, cuts: 0, ended_with_witness: false };
        let mut found = None;
        for call in 0..cap {
            rep.calls += 1;
            let seed = derive(cfg.seed, &[j as u64, call as u64]);
            let (res, _) = sparse_cut(&current, a, *hj, *sj, phij, eps, strategy.as_ref(), &sparse, seed)?;
            match res {
                SparseCutResult::Witness(w) => {
                    rep.ended_with_witness = true;
                    found = Some(*w);
                    break;
                }
                SparseCutResult::Cut(c) => {
                    rep.cuts += 1;
                    records.push(CutRecord {
                        epoch: j,
                        call,
                        scale: c.cut.scale,
                        h2: c.h2,
                        size: fmt_q(&c.cut.size(g)),
                        certified_demand: fmt_q(&c.demand_size_estimate),
                        edges: c.cut.support().len(),
                    });
                    current = apply_increase(&current, c.cut.iter());
                    cuts.push(c.cut);
                }
            }
        }
        epoch_reports.push(rep);
        if last {
            match found {
                Some(w) => witness = Some(w),
                None => {
                    return Err(Error::IterationCap(format!(
                        "no witness after {cap} sparse-cut calls at h = {hj}, s = {sj}, phi = {}",
                        fmt_q(phij)
                    )))
                }
            }
        }
    }
    let size: Q = cuts.iter().map(|c| c.size(g)).sum();
    let a_size = a.size();
    let kappa = if a_size == 0 { Q::zero() } else { &size / (phi * qu(a_size)) };
    let report = DriverReport {
        epochs: epoch_reports,
        cuts: records,
        phi0: fmt_q(&params[0].2),
        phi: fmt_q(phi),
        h,
        s_final: params[epochs].1,
        a_size,
        cut_size: fmt_q(&size),
        kappa_realized_f64: to_f64(&kappa),
        kappa_realized: fmt_q(&kappa),
        size_bound_holds: size <= &kappa * phi * qu(a_size),
        witness_s: witness.as_ref().map(|w| w.s),
        witness_phi: witness.as_ref().map(|w| fmt_q(&w.phi)),
        witness: witness.is_some(),
        strategy: cfg.strategy,
    };
    Ok(Decomposition { cuts, witness, report })
}

/// `ΔA(v) = ⌈C(v)·ℓ⌉` with `C(v)` the summed cut value of edges at `v`.
pub fn self_loop_weighting(g: &Graph, cuts: &[MovingCut], ell: u64) -> NodeWeighting {
    let mut at: BTreeMap<usize, Q> = BTreeMap::new();
    for c in cuts {
        for (e, _) in c.iter() {
            let ed = g.edge(e);
            let x = c.value(e);
            *at.entry(ed.u).or_insert_with(Q::zero) += &x;
            if !ed.is_loop() {
                *at.entry(ed.v).or_insert_with(Q::zero) += &x;
            }
        }
    }
    at.into_iter().map(|(v, x)| (v, ceil_u64(&(x * qu(ell))))).filter(|x| x.1 > 0).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkedReport {
    pub ell: u64,
    pub rounds: usize,
    pub round_sizes: Vec<String>,
    pub total_size: String,
    pub first_size: String,
    pub geometric_decay: bool,
    pub converged: bool,
    pub total_within_twice_first: bool,
    pub final_a_size: u64,
    pub last: DriverReport,
}

#[derive(Clone, Debug)]
pub struct LinkedDecomposition {
    pub cuts: Vec<MovingCut>,
    pub a: NodeWeighting,
    pub witness: Option<Witness>,
    pub report: LinkedReport,
}

/// Alternates decomposition rounds with self-loop weight updates. `ell = None`
/// derives `ℓ = ⌈1/(2·κ·φ·log₂N)⌉` from the first round.
#[allow(clippy::too_many_arguments)]
pub fn linked_decomposition(
    g: &Graph,
    a: &NodeWeighting,
    h: u64,
    phi: &Q,
    eps: f64,
    eps_prime: f64,
    ell: Option<u64>,
    cfg: &DriverConfig,
) -> Result<LinkedDecomposition> {
    let cap = g.log_n() as usize;
    let mut weights = a.clone();
    let mut cuts: Vec<MovingCut> = Vec::new();
    let mut sizes: Vec<Q> = Vec::new();
    let mut current = g.clone();
    let mut ell_used = ell.unwrap_or(0);
    let mut last = None;
    let mut converged = false;
    for round in 0..cap {
        let mut rc = cfg.clone();
        rc.seed = derive(cfg.seed, &[0x11, round as u64]);
        let d = expander_decomposition(&current, &weights, h, phi, eps, eps_prime, &rc)?;
        let size = d.size(g);
        if round == 0 && ell.is_none() {
            let kappa = if weights.size() == 0 { Q::zero() } else { &size / (phi * qu(weights.size())) };
            ell_used = if kappa.is_zero() {
                0
            } else {
                ceil_u64(&(Q::one() / (qu(2) * kappa * phi * qu(g.log_n()))))
            };
        }
        let empty = d.cuts.iter().all(|c| c.size(g).is_zero());
        sizes.push(size);
        current = apply_increase(&current, total_increase(&d.cuts));
        let inc = self_loop_weighting(g, &d.cuts, ell_used);
        weights = weights.plus(&inc);
        cuts.extend(d.cuts.clone());
        last = Some(d);
        if empty || ell_used == 0 || inc.is_empty() {
            converged = true;
            break;
        }
    }
    let last = last.expect("at least one round");
    let total: Q = sizes.iter().sum();
    let geometric = sizes.windows(2).all(|w| qu(2) * &w[1] <= w[0]);
    let twice = total <= qu(2) * &sizes[0];
    if geometric && !twice {
        return Err(Error::Invalid("geometric decay held but the total exceeds twice the first round".into()));
    }
    let report = LinkedReport {
        ell: ell_used,
        rounds: sizes.len(),
        round_sizes: sizes.iter().map(fmt_q).collect(),
        total_size: fmt_q(&total),
        first_size: fmt_q(&sizes[0]),
        geometric_decay: geometric,
        converged,
        total_within_twice_first: twice,
        final_a_size: weights.size(),
        last: last.report.clone(),
    };
    Ok(LinkedDecomposition { cuts, a: weights, witness: last.witness, report })
}

/// Cut player that decomposes the game's union graph and splits the mass so
/// that the pieces of that decomposition land on opposite sides.
pub struct RecursiveStrategy {
    cfg: DriverConfig,
    eps: f64,
    eps_prime: f64,
    depth: usize,
}

impl RecursiveStrategy {
    pub fn new(cfg: &DriverConfig, eps: f64, eps_prime: f64, depth: usize) -> RecursiveStrategy {
        let mut cfg = cfg.clone();
        cfg.closing_cap = cfg.closing_cap.min(32);
        RecursiveStrategy { cfg, eps, eps_prime, depth }
    }

    fn pieces(&self, cmg: &CmgEdges, a: &NodeWeighting, seed: u64) -> Option<Vec<(usize, u64)>> {
        let supp = a.support();
        let idx: BTreeMap<usize, usize> = supp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut caps: BTreeMap<(usize, usize), Q> = BTreeMap::new();
        for (u, v, x) in cmg {
            if let (Some(&i), Some(&j)) = (idx.get(u), idx.get(v)) {
                if i != j {
                    *caps.entry((i.min(j), i.max(j))).or_insert_with(Q::zero) += x;
                }
            }
        }
        if caps.is_empty() {
            return None;
        }
        let edges: Vec<(usize, usize, u64, u64)> =
            caps.iter().map(|(&(i, j), x)| (i, j, 1, x.ceil().to_integer().to_u64().unwrap_or(u64::MAX).max(1))).collect();
        let h = crate::graph::Graph::from_tuples(supp.len(), &edges).ok()?;
        let w: NodeWeighting = supp.iter().enumerate().map(|(i, &v)| (i, a.get(v))).collect();
        let phi = Q::new(1.into(), (2 * h.log_n()).into());
        let mut cfg = self.cfg.clone();
        cfg.seed = seed;
        let d = decompose_at_depth(&h, &w, 1, &phi, self.eps, self.eps_prime, &cfg, self.depth).ok()?;
        let cut_graph = d.cut_graph(&h);
        let far: Vec<(usize, usize)> = cut_graph
            .edges()
            .iter()
            .filter(|e| e.length == 1)
            .map(|e| (e.u, e.v))
            .collect();
        let pruned = Graph::unit(supp.len(), &far).ok()?;
        let comp = pruned.components();
        let mut order: Vec<(usize, usize, u64)> = supp.iter().enumerate().map(|(i, &v)| (comp[i], v, a.get(v))).collect();
        order.sort();
        Some(order.into_iter().map(|(_, v, x)| (v, x)).collect())
    }
}

impl CutStrategy for RecursiveStrategy {
    fn name(&self) -> &'static str {
        "recursive"
    }

    fn play(&self, cmg: &CmgEdges, a: &NodeWeighting, round: usize, seed: u64) -> StrategyOutput {
        if self.depth == 0 {
            return krv_cut_strategy(cmg, a, round, seed);
        }
        match self.pieces(cmg, a, derive(seed, &[0x7265, round as u64])) {
            Some(order) => split_halves(&order),
            None => krv_cut_strategy(cmg, a, round, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{clique, dumbbell, path};
    use crate::rational::qr;
    use crate::router::verify_witness;

    #[test]
    fn epoch_recurrences() {
        let cfg = DriverConfig::default();
        let p = epoch_parameters(2, &qr(1, 100), 2, &cfg).unwrap();
        assert_eq!(p[0].0, 32);
        assert_eq!(p[1].0, 8);
        assert_eq!(p[2], (2, 4, qr(1, 100)));
        assert_eq!(p[1].2, qr(8, 100));
        assert_eq!(p[0].2, qr(8, 100));
    }

    #[test]
    fn self_loops() {
        let g = Graph::unit(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(self_loop_weighting(&g, &[MovingCut::new(2)], 4).is_empty());
        let one = self_loop_weighting(&g, &[MovingCut::full(3, [0])], 4);
        assert_eq!((one.get(0), one.get(1), one.get(2)), (4, 4, 0));
        let mut half = MovingCut::new(2);
        half.set(1, 1).unwrap();
        let w = self_loop_weighting(&g, &[half], 4);
        assert_eq!((w.get(1), w.get(2)), (2, 2));
    }

    #[test]
    fn clique_needs_no_cut() {
        let g = clique(5);
        let a = g.degree_weighting();
        let d = expander_decomposition(&g, &a, 2, &qr(1, 400), 0.5, 0.5, &DriverConfig::default()).unwrap();
        let w = d.witness.as_ref().expect("witness");
        assert!(verify_witness(&d.cut_graph(&g), w, &a, 2, 1).unwrap().pass());
        assert!(d.report.size_bound_holds);
    }

    #[test]
    fn dumbbell_decomposition_certifies() {
        let g = dumbbell(5);
        let a = g.degree_weighting();
        let d = expander_decomposition(&g, &a, 2, &qr(1, 10), 0.5, 0.5, &DriverConfig::default()).unwrap();
        assert!(d.witness.is_some());
        assert!(d.report.size_bound_holds);
        let bridge = g.edge_between(4, 5).unwrap();
        let on_bridge: Q = d.cuts.iter().map(|c| Q::new(c.numerator(bridge).into(), c.scale.into())).sum();
        for e in 0..g.m() {
            let x: Q = d.cuts.iter().map(|c| Q::new(c.numerator(e).into(), c.scale.into())).sum();
            assert!(x < on_bridge || e == bridge, "edge {e} carries {x}");
        }
    }

    #[test]
    fn path_is_left_alone_below_the_single_edge_floor() {
        let g = path(8);
        let a = g.degree_weighting();
        let cfg = DriverConfig::default();
        let t = epoch_single_edge_threshold(&g, &a, 2, 0.5, &cfg).unwrap().unwrap();
        // The middle edge at full reach separates 7 units each way under the
        // degree weighting, so 1/14; the early epochs ask for 8 times more.
        assert_eq!(t, qr(1, 112));
        let phi = t / qu(2);
        let d = expander_decomposition(&g, &a, 2, &phi, 0.5, 0.5, &cfg).unwrap();
        assert!(d.cuts.is_empty());
        assert!(d.witness.is_some());
        assert!(certify_decomposition(&g, &a, 2, &phi, 0.5, &d, 3).unwrap().pass());
    }

    #[test]
    fn single_edge_floor_on_k2() {
        // Cutting the only edge separates 1 unit each way: |C| = 1, demand 2.
        let g = Graph::unit(2, &[(0, 1)]).unwrap();
        let (f, n) = single_edge_sparsity_floor(&g, &g.degree_weighting(), 1, 1).unwrap();
        assert_eq!((f, n), (Some(qr(1, 2)), 1));
    }

    #[test]
    fn linked_on_clique_is_one_round() {
        let g = clique(4);
        let a = g.degree_weighting();
        let r = linked_decomposition(&g, &a, 2, &qr(1, 400), 0.5, 0.5, None, &DriverConfig::default()).unwrap();
        assert_eq!(r.report.rounds, 1);
        assert!(r.report.converged);
    }
}
