//! Unions of cut sequences: classic cut-sequence trees, demand matching
//! graphs, forest covers and matching-dispersed demands.
//!
//! Sequence sparsity of classic cuts is measured with degrees of the subgraph
//! induced by the component the cut splits (component-local degrees); the
//! union itself is measured in the whole graph.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::Serialize;

use crate::graph::{apply_cut, demand_report, separated_amount, Demand, Edge, Graph, MovingCut, NodeWeighting};
use crate::oracle::classic_cut_sparsity;
use crate::rational::{fmt_q, is_integer, qu, to_u64, Q};
use crate::{invalid, Error, Result};

pub const DEGREE_CONVENTION: &str = "component-local degrees per sequence cut";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub vertices: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Index of the cut that split this component, if any.
    pub cut: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutSequenceTree {
    pub nodes: Vec<TreeNode>,
    /// Sequence sparsity of each cut, in order.
    pub sparsity: Vec<Q>,
    pub cut_sizes: Vec<u64>,
}

impl CutSequenceTree {
    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> + '_ {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    pub fn depth(&self) -> usize {
        fn go(t: &CutSequenceTree, v: usize) -> usize {
            t.nodes[v].children.iter().map(|&c| 1 + go(t, c)).max().unwrap_or(0)
        }
        go(self, 0)
    }
}

/// Builds the cut-sequence tree of classic cuts given as edge-id sets. Each
/// cut must lie inside one current component and disconnect it.
pub fn cut_sequence_tree(g: &Graph, cuts: &[Vec<usize>]) -> Result<CutSequenceTree> {
    if g.components().iter().any(|&c| c != 0) {
        return Err(Error::Precondition("cut sequences need a connected graph".into()));
    }
    let mut removed = vec![false; g.m()];
    let mut leaf_of = vec![0usize; g.n()];
    let mut nodes = vec![TreeNode { vertices: (0..g.n()).collect(), parent: None, children: vec![], cut: None }];
    let mut sparsity = Vec::new();
    let mut cut_sizes = Vec::new();
    for (i, cut) in cuts.iter().enumerate() {
        let mut source = None;
        for &e in cut {
            if e >= g.m() {
                return Err(Error::UnknownEdge(format!("edge id {e}")));
            }
            if removed[e] {
                return invalid(format!("cut {i}: edge id {e} was already cut"));
            }
            let ed = g.edge(e);
            let (a, b) = (leaf_of[ed.u], leaf_of[ed.v]);
            if a != b || source.is_some_and(|s| s != a) {
                return invalid(format!("cut {i} spans more than one component"));
            }
            source = Some(a);
        }
        let Some(src) = source else {
            return invalid(format!("cut {i} is empty"));
        };
        let members = nodes[src].vertices.clone();
        let (sub, ids) = local_subgraph(g, &members, &removed);
        let local_of: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let local_cut: Vec<usize> = cut
            .iter()
            .map(|&e| {
                let ed = g.edge(e);
                sub.edge_between(local_of[&ed.u], local_of[&ed.v]).expect("edge inside the component")
            })
            .collect();
        let cs = classic_cut_sparsity(&sub, &local_cut).map_err(|e| Error::Invalid(format!("cut {i}: {e}")))?;
        for &e in cut {
            removed[e] = true;
        }
        let count = cs.components.iter().max().unwrap() + 1;
        nodes[src].cut = Some(i);
        for c in 0..count {
            let vs: Vec<usize> = (0..ids.len()).filter(|&x| cs.components[x] == c).map(|x| ids[x]).collect();
            let id = nodes.len();
            for &v in &vs {
                leaf_of[v] = id;
            }
            nodes[src].children.push(id);
            nodes.push(TreeNode { vertices: vs, parent: Some(src), children: vec![], cut: None });
        }
        sparsity.push(cs.sparsity);
        cut_sizes.push(cs.cut_size);
    }
    Ok(CutSequenceTree { nodes, sparsity, cut_sizes })
}

/// Subgraph induced on `members` without the removed edges, and the
/// original vertex id of each local vertex.
fn local_subgraph(g: &Graph, members: &[usize], removed: &[bool]) -> (Graph, Vec<usize>) {
    let local: BTreeMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let edges = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, e)| !removed[*i] && local.contains_key(&e.u) && local.contains_key(&e.v))
        .map(|(_, e)| Edge { u: local[&e.u], v: local[&e.v], length: e.length, capacity: e.capacity })
        .collect();
    (Graph::new(members.len(), edges).expect("subgraph of a valid graph"), members.to_vec())
}

#[derive(Clone, Debug, Serialize)]
pub struct UnionReport {
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub union_sparsity: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub bound: Q,
    pub holds: bool,
    pub sequence_sparsity: Vec<String>,
    pub convention: &'static str,
}

pub fn union_classic_check(g: &Graph, cuts: &[Vec<usize>]) -> Result<UnionReport> {
    if cuts.iter().all(|c| c.is_empty()) {
        return invalid("the cut sequence removes no edge");
    }
    let tree = cut_sequence_tree(g, cuts)?;
    let all: Vec<usize> = cuts.iter().flatten().copied().collect();
    let union = classic_cut_sparsity(g, &all)?;
    let total: u64 = tree.cut_sizes.iter().sum();
    let volume: Q = tree.cut_sizes.iter().zip(&tree.sparsity).map(|(&c, p)| qu(c) / p).sum();
    let factor = crate::rational::floor_log2_u64(g.n() as u64) as u64 + 1;
    let bound = qu(factor * total) / volume;
    Ok(UnionReport {
        holds: union.sparsity <= bound,
        union_sparsity: union.sparsity,
        bound,
        sequence_sparsity: tree.sparsity.iter().map(fmt_q).collect(),
        convention: DEGREE_CONVENTION,
    })
}

/// Multigraph on vertex copies whose edges come in one matching per demand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandMatchingGraph {
    /// Original vertex of each copy.
    pub owner: Vec<usize>,
    /// First copy index of each vertex in the weighting's support.
    pub first_copy: BTreeMap<usize, usize>,
    /// `(copy, copy, demand index)`.
    pub edges: Vec<(usize, usize, usize)>,
}

impl DemandMatchingGraph {
    pub fn copies(&self) -> usize {
        self.owner.len()
    }

    /// Checks that each batch is a matching realizing its demand.
    pub fn check(&self, demands: &[Demand]) -> bool {
        for (i, d) in demands.iter().enumerate() {
            let mut used = BTreeSet::new();
            let mut count: BTreeMap<(usize, usize), u64> = BTreeMap::new();
            for &(a, b, k) in &self.edges {
                if k != i {
                    continue;
                }
                if !used.insert(a) || !used.insert(b) {
                    return false;
                }
                *count.entry((self.owner[a], self.owner[b])).or_insert(0) += 1;
            }
            let want: BTreeMap<(usize, usize), u64> =
                d.iter().filter(|(_, x)| !x.is_zero()).map(|(k, x)| (k, to_u64(x).unwrap_or(u64::MAX))).collect();
            if count != want {
                return false;
            }
        }
        true
    }
}

/// Matches copies greedily in index order. Because one copy can end only one
/// edge of a batch, each vertex needs `out(v) + in(v) <= A(v)` in every demand.
pub fn demand_matching_graph(a: &NodeWeighting, demands: &[Demand]) -> Result<DemandMatchingGraph> {
    let mut owner = Vec::new();
    let mut first_copy = BTreeMap::new();
    for (v, w) in a.iter() {
        first_copy.insert(v, owner.len());
        owner.extend(std::iter::repeat_n(v, w as usize));
    }
    let mut edges = Vec::new();
    for (i, d) in demands.iter().enumerate() {
        let mut next: BTreeMap<usize, u64> = BTreeMap::new();
        for ((u, v), x) in d.iter() {
            if !is_integer(x) {
                return invalid(format!("demand {i} is not integral at ({u}, {v})"));
            }
            if u == v && !x.is_zero() {
                return invalid(format!("demand {i} has a self pair at {u}"));
            }
            let k = to_u64(x).unwrap();
            for _ in 0..k {
                let mut take = |z: usize| -> Result<usize> {
                    let used = next.entry(z).or_insert(0);
                    if *used >= a.get(z) {
                        return invalid(format!("demand {i} uses more than A({z}) = {} copies of {z}", a.get(z)));
                    }
                    *used += 1;
                    Ok(first_copy[&z] + *used as usize - 1)
                };
                let cu = take(u)?;
                let cv = take(v)?;
                edges.push((cu, cv, i));
            }
        }
    }
    Ok(DemandMatchingGraph { owner, first_copy, edges })
}

/// Partitions multigraph edges into forests by repeatedly peeling a DFS
/// spanning forest off the remaining edges. Returns edge indices per forest.
pub fn forest_cover(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].0 != edges[i].1).collect();
    let mut forests = Vec::new();
    while !left.is_empty() {
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for &i in &left {
            let (u, v) = edges[i];
            adj[u].push((v, i));
            adj[v].push((u, i));
        }
        let mut seen = vec![false; n];
        let mut taken = BTreeSet::new();
        for root in 0..n {
            if seen[root] || adj[root].is_empty() {
                continue;
            }
            seen[root] = true;
            let mut stack = vec![(root, 0usize)];
            while let Some(&mut (v, ref mut k)) = stack.last_mut() {
                if *k == adj[v].len() {
                    stack.pop();
                    continue;
                }
                let (w, i) = adj[v][*k];
                *k += 1;
                if !seen[w] {
                    seen[w] = true;
                    taken.insert(i);
                    stack.push((w, 0));
                }
            }
        }
        left.retain(|i| !taken.contains(i));
        forests.push(taken.into_iter().collect());
    }
    forests
}

/// Sibling-matching demand of the tree spanned by `edges`, rooted at `root`.
/// Pairs are oriented from the smaller vertex id.
pub fn tree_matching_demand(edges: &[(usize, usize)], root: usize) -> Result<Demand> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    adj.entry(root).or_default();
    for &(u, v) in edges {
        if u == v {
            return invalid("tree has a self-loop");
        }
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut seen = BTreeSet::from([root]);
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let mut kids = Vec::new();
        for &w in &adj[&v] {
            if seen.insert(w) {
                kids.push(w);
                queue.push_back(w);
            }
        }
        children.insert(v, kids);
    }
    if seen.len() != adj.len() || edges.len() + 1 != adj.len() {
        return invalid("input is not a tree");
    }
    let mut d = Demand::new();
    for (&v, kids) in &children {
        if kids.is_empty() {
            continue;
        }
        let mut u: Vec<usize> = kids.clone();
        if u.len() % 2 == 1 {
            u.push(v);
        }
        u.sort_unstable();
        for p in u.chunks(2) {
            d.add(p[0], p[1], qu(1));
        }
    }
    Ok(d)
}

#[derive(Clone, Debug, Serialize)]
pub struct DispersedReport {
    pub alpha: usize,
    pub respecting: bool,
    pub two_h_length: bool,
    pub fully_separated: bool,
    pub size_bound: bool,
    pub size: String,
    pub input_size: String,
}

impl DispersedReport {
    pub fn pass(&self) -> bool {
        self.respecting && self.two_h_length && self.fully_separated && self.size_bound
    }
}

/// Matching-dispersed demand of a cut sequence's witnessing demands. `cuts`
/// share one scale; the report checks the demand against `h` and `s`.
pub fn dispersed_demand(
    g: &Graph,
    a: &NodeWeighting,
    demands: &[Demand],
    cuts: &[MovingCut],
    h: u64,
    s: u64,
) -> Result<(Demand, DispersedReport)> {
    let mg = demand_matching_graph(a, demands)?;
    let pairs: Vec<(usize, usize)> = mg.edges.iter().map(|&(x, y, _)| (x, y)).collect();
    let forests = forest_cover(mg.copies(), &pairs);
    let alpha = forests.len();
    let mut d = Demand::new();
    for forest in &forests {
        let fe: Vec<(usize, usize)> = forest.iter().map(|&i| pairs[i]).collect();
        for (root, tree) in trees_of(&fe) {
            for ((x, y), w) in tree_matching_demand(&tree, root)?.iter() {
                d.add(mg.owner[x], mg.owner[y], w.clone());
            }
        }
    }
    if alpha > 0 {
        d = d.scaled(&Q::new(1.into(), (2 * alpha as u64).into()));
    }
    let input: Q = demands.iter().map(|x| x.size()).sum();
    let rep = demand_report(&d, a, g, 2 * h);
    let total = match cuts.split_first() {
        None => MovingCut::new(h.saturating_mul(s).max(1)),
        Some((first, rest)) => rest.iter().fold(first.clone(), |acc, c| acc.plus_clamped(c)),
    };
    let gc = apply_cut(g, &total)?;
    let sep = separated_amount(&gc, &d, h.saturating_mul(s.saturating_sub(2)));
    let size = d.size();
    let size_bound = alpha == 0 || size.clone() * qu(4 * alpha as u64) >= input;
    let report = DispersedReport {
        alpha,
        respecting: rep.respecting,
        two_h_length: rep.h_length,
        fully_separated: sep == size,
        size_bound,
        size: fmt_q(&size),
        input_size: fmt_q(&input),
    };
    Ok((d, report))
}

/// Connected pieces of an edge list as `(lowest vertex, edges)`.
fn trees_of(edges: &[(usize, usize)]) -> Vec<(usize, Vec<(usize, usize)>)> {
    let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
    fn find(p: &mut BTreeMap<usize, usize>, x: usize) -> usize {
        let up = *p.entry(x).or_insert(x);
        if up == x {
            return x;
        }
        let r = find(p, up);
        p.insert(x, r);
        r
    }
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent.insert(a.max(b), a.min(b));
        }
    }
    let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for &(u, v) in edges {
        let r = find(&mut parent, u);
        groups.entry(r).or_default().push((u, v));
    }
    let mut out: Vec<(usize, Vec<(usize, usize)>)> = groups
        .into_values()
        .map(|es| (es.iter().map(|&(u, v)| u.min(v)).min().unwrap(), es))
        .collect();
    out.sort();
    out
}
