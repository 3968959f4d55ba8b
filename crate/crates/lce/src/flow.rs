//! Path-explicit flows, their congestion and dilation, and projection of
//! router flows through embeddings.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::graph::{shortcut_walk, Demand, Graph};
use crate::rational::{fmt_q, qu, ExtQ, Q};
use crate::{Error, Result};

/// Map from simple vertex sequences to positive rational values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Flow {
    paths: BTreeMap<Vec<usize>, Q>,
}

impl Flow {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `x` on `path`; zero additions are dropped.
    pub fn add(&mut self, path: Vec<usize>, x: Q) {
        assert!(x >= Q::zero(), "negative flow value");
        assert!(path.len() >= 2, "a flow path needs at least one edge");
        if x.is_zero() {
            return;
        }
        let e = self.paths.entry(path).or_insert_with(Q::zero);
        *e += x;
    }

    pub fn get(&self, path: &[usize]) -> Q {
        self.paths.get(path).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &Q)> + '_ {
        self.paths.iter()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn value(&self) -> Q {
        self.paths.values().fold(Q::zero(), |a, b| a + b)
    }

    pub fn plus(&self, other: &Flow) -> Flow {
        let mut out = self.clone();
        for (p, x) in other.iter() {
            out.add(p.clone(), x.clone());
        }
        out
    }

    pub fn scaled(&self, f: &Q) -> Flow {
        let mut out = Flow::new();
        for (p, x) in self.iter() {
            out.add(p.clone(), x * f);
        }
        out
    }

    pub fn is_integral(&self) -> bool {
        self.paths.values().all(crate::rational::is_integer)
    }

    /// Flow value per edge id; errors if a step is not an edge of `g`.
    pub fn edge_flow(&self, g: &Graph) -> Result<BTreeMap<usize, Q>> {
        let mut out: BTreeMap<usize, Q> = BTreeMap::new();
        for (p, x) in self.iter() {
            let es = g
                .path_edges(p)
                .ok_or_else(|| Error::UnknownEdge(format!("flow path {p:?} leaves the graph")))?;
            for e in es {
                *out.entry(e).or_insert_with(Q::zero) += x;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowStats {
    pub value: Q,
    pub edge_flow: BTreeMap<usize, Q>,
    pub congestion: ExtQ,
    pub dilation: u64,
    pub step: usize,
    pub support: usize,
}

impl FlowStats {
    pub fn summary(&self) -> String {
        format!(
            "value={} congestion={} dilation={} step={} support={}",
            fmt_q(&self.value),
            self.congestion,
            self.dilation,
            self.step,
            self.support
        )
    }
}

pub fn flow_stats(g: &Graph, f: &Flow) -> Result<FlowStats> {
    let edge_flow = f.edge_flow(g)?;
    let congestion = congestion_of(g, &edge_flow);
    let mut dilation = 0;
    let mut step = 0;
    for (p, _) in f.iter() {
        dilation = dilation.max(g.path_length(p).expect("checked by edge_flow"));
        step = step.max(p.len() - 1);
    }
    Ok(FlowStats { value: f.value(), edge_flow, congestion, dilation, step, support: f.len() })
}

/// `max_e F(e)/U_e`, infinite when a zero-capacity edge carries flow.
pub fn congestion_of(g: &Graph, edge_flow: &BTreeMap<usize, Q>) -> ExtQ {
    let mut best = Q::zero();
    for (&e, x) in edge_flow {
        if x.is_zero() {
            continue;
        }
        let u = g.edge(e).capacity;
        if u == 0 {
            return ExtQ::Infinite;
        }
        let c = x / qu(u);
        if c > best {
            best = c;
        }
    }
    ExtQ::Finite(best)
}

pub fn routed_demand(f: &Flow) -> Demand {
    let mut d = Demand::new();
    for (p, x) in f.iter() {
        d.add(p[0], *p.last().unwrap(), x.clone());
    }
    d
}

/// Flows in a host graph realizing each edge of a router graph, keyed by
/// the router edge's endpoints in increasing order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Embedding {
    pub edges: BTreeMap<(usize, usize), Flow>,
}

impl Embedding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, u: usize, v: usize, f: Flow) {
        self.edges.insert((u.min(v), u.max(v)), f);
    }

    pub fn get(&self, u: usize, v: usize) -> Option<&Flow> {
        self.edges.get(&(u.min(v), u.max(v)))
    }

    /// Sum of all embedding flows, the load the host graph carries.
    pub fn total_flow(&self) -> Flow {
        self.edges.values().fold(Flow::new(), |acc, f| acc.plus(f))
    }

    /// Checks that each router edge of capacity `U` is realized by value `>= U`
    /// between its own endpoints.
    pub fn check_routes(&self, router: &Graph) -> Result<()> {
        for e in router.edges() {
            if e.is_loop() || e.capacity == 0 {
                continue;
            }
            let f = self
                .get(e.u, e.v)
                .ok_or_else(|| Error::Invalid(format!("router edge {} {} has no embedding", e.u, e.v)))?;
            let mut val = Q::zero();
            for (p, x) in f.iter() {
                let (a, b) = (p[0], *p.last().unwrap());
                if (a, b) != (e.u, e.v) && (a, b) != (e.v, e.u) {
                    return Err(Error::Invalid(format!(
                        "embedding path {p:?} does not join router edge {} {}",
                        e.u, e.v
                    )));
                }
                val += x;
            }
            if val < qu(e.capacity) {
                return Err(Error::Invalid(format!(
                    "router edge {} {} embedded with value {} below capacity {}",
                    e.u,
                    e.v,
                    fmt_q(&val),
                    e.capacity
                )));
            }
        }
        Ok(())
    }
}

/// Pieces of `[0, total)` as `(path, amount)` in order, normalized so that the
/// amounts of `paths` (oriented `from -> to`) are rescaled to sum to `total`.
fn oriented_pieces(f: &Flow, from: usize, to: usize, total: &Q) -> Vec<(Vec<usize>, Q)> {
    let val = f.value();
    f.iter()
        .map(|(p, x)| {
            let mut p = p.clone();
            if p[0] != from {
                p.reverse();
            }
            debug_assert!(p[0] == from && *p.last().unwrap() == to);
            (p, x * total / &val)
        })
        .collect()
}

/// Splits each router path across embedding paths proportionally, merging
/// consecutive steps by interval overlap in canonical order, then concatenates
/// and removes cycles.
pub fn project_flow(router_flow: &Flow, embedding: &Embedding) -> Result<Flow> {
    // Flow across each router edge, to check the embedding covers it.
    let mut across: BTreeMap<(usize, usize), Q> = BTreeMap::new();
    for (p, x) in router_flow.iter() {
        for w in p.windows(2) {
            *across.entry((w[0].min(w[1]), w[0].max(w[1]))).or_insert_with(Q::zero) += x;
        }
    }
    for (&(u, v), x) in &across {
        let f = embedding
            .get(u, v)
            .ok_or_else(|| Error::Invalid(format!("router edge {u} {v} missing from embedding")))?;
        let val = f.value();
        if val < *x {
            return Err(Error::Invalid(format!(
                "router edge {u} {v} carries {} but is embedded with {}",
                fmt_q(x),
                fmt_q(&val)
            )));
        }
    }
    let mut out = Flow::new();
    for (p, x) in router_flow.iter() {
        let mut partial: Vec<(Vec<usize>, Q)> = vec![(vec![p[0]], x.clone())];
        for w in p.windows(2) {
            let pieces = oriented_pieces(embedding.get(w[0], w[1]).unwrap(), w[0], w[1], x);
            partial = merge_by_overlap(&partial, &pieces);
        }
        for (walk, amount) in partial {
            let simple = shortcut_walk(&walk);
            if simple.len() >= 2 {
                out.add(simple, amount);
            }
        }
    }
    Ok(out)
}

/// Both inputs partition the same total; emits one concatenated piece per
/// nonempty overlap of their intervals.
pub(crate) fn merge_by_overlap(left: &[(Vec<usize>, Q)], right: &[(Vec<usize>, Q)]) -> Vec<(Vec<usize>, Q)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut rem_l = left.first().map(|x| x.1.clone()).unwrap_or_else(Q::zero);
    let mut rem_r = right.first().map(|x| x.1.clone()).unwrap_or_else(Q::zero);
    while i < left.len() && j < right.len() {
        let take = if rem_l < rem_r { rem_l.clone() } else { rem_r.clone() };
        if !take.is_zero() {
            let mut walk = left[i].0.clone();
            walk.extend_from_slice(&right[j].0[1..]);
            out.push((walk, take.clone()));
        }
        rem_l -= &take;
        rem_r -= &take;
        if rem_l.is_zero() {
            i += 1;
            if i < left.len() {
                rem_l = left[i].1.clone();
            }
        }
        if rem_r.is_zero() {
            j += 1;
            if j < right.len() {
                rem_r = right[j].1.clone();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};

    #[test]
    fn stats_examples() {
        let g = Graph::from_tuples(3, &[(0, 1, 1, 4), (1, 2, 1, 4)]).unwrap();
        let s = flow_stats(&g, &Flow::new()).unwrap();
        assert_eq!((s.value.clone(), s.congestion.clone(), s.dilation), (q(0), ExtQ::Finite(q(0)), 0));
        let mut f = Flow::new();
        f.add(vec![0, 1, 2], q(3));
        let s = flow_stats(&g, &f).unwrap();
        assert_eq!(s.congestion, ExtQ::Finite(qr(3, 4)));
        assert_eq!((s.dilation, s.step), (2, 2));
        let g2 = Graph::from_tuples(4, &[(0, 1, 1, 2), (1, 2, 1, 5), (1, 3, 1, 5)]).unwrap();
        let mut f = Flow::new();
        f.add(vec![0, 1, 2], q(1));
        f.add(vec![0, 1, 3], q(1));
        assert_eq!(flow_stats(&g2, &f).unwrap().congestion, ExtQ::Finite(q(1)));
        let z = Graph::from_tuples(2, &[(0, 1, 1, 0)]).unwrap();
        let mut f = Flow::new();
        f.add(vec![0, 1], q(1));
        assert_eq!(flow_stats(&z, &f).unwrap().congestion, ExtQ::Infinite);
    }

    #[test]
    fn routed_demand_examples() {
        let mut f = Flow::new();
        assert!(routed_demand(&f).is_empty());
        f.add(vec![0, 1], q(2));
        assert_eq!(routed_demand(&f).get(0, 1), q(2));
        let mut f = Flow::new();
        f.add(vec![0, 1, 2], q(1));
        f.add(vec![0, 3, 2], q(1));
        assert_eq!(routed_demand(&f).get(0, 2), q(2));
    }

    #[test]
    fn project_examples() {
        let mut emb = Embedding::new();
        let mut e = Flow::new();
        e.add(vec![0, 2, 1], q(1));
        emb.insert(0, 1, e);
        let mut rf = Flow::new();
        rf.add(vec![0, 1], q(1));
        let h = project_flow(&rf, &emb).unwrap();
        assert_eq!(h.get(&[0, 2, 1]), q(1));
        assert!(project_flow(&Flow::new(), &emb).unwrap().is_empty());

        // router path 0-1-3 with unit embeddings 0-4-1 and 3-5-1 (stored reversed)
        let mut emb = Embedding::new();
        let mut a = Flow::new();
        a.add(vec![0, 4, 1], q(1));
        let mut b = Flow::new();
        b.add(vec![3, 5, 1], q(1));
        emb.insert(0, 1, a);
        emb.insert(1, 3, b);
        let mut rf = Flow::new();
        rf.add(vec![0, 1, 3], q(1));
        let h = project_flow(&rf, &emb).unwrap();
        assert_eq!(h.get(&[0, 4, 1, 5, 3]), q(1));
        assert_eq!(h.value(), q(1));
    }

    #[test]
    fn projection_splits_proportionally() {
        let mut emb = Embedding::new();
        let mut a = Flow::new();
        a.add(vec![0, 2, 1], q(1));
        a.add(vec![0, 3, 1], q(3));
        emb.insert(0, 1, a);
        let mut rf = Flow::new();
        rf.add(vec![0, 1], q(2));
        let h = project_flow(&rf, &emb).unwrap();
        assert_eq!(h.get(&[0, 2, 1]), qr(1, 2));
        assert_eq!(h.get(&[0, 3, 1]), qr(3, 2));
        let mut big = Flow::new();
        big.add(vec![0, 1], q(5));
        assert!(project_flow(&big, &emb).is_err());
    }
}
