//! CLI-only file formats: pair lists, cut sequences, and JSON forms of covers
//! and witnesses.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use lce::cover::{Clustering, NeighborhoodCover};
use lce::flow::{Embedding, Flow};
use lce::rational::{fmt_q, parse_q};
use lce::router::{Router, Witness, WitnessCluster};
use lce::{Graph, NodeWeighting, Q};
use serde::{Deserialize, Serialize};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn vertex_list(line: usize, tok: &str) -> Result<Vec<usize>> {
    tok.split(',').map(|x| x.parse().map_err(|_| anyhow!("line {line}: bad vertex {x:?}"))).collect()
}

/// One pair per line: `s1,s2,... t1,t2,...`.
pub fn parse_pairs(text: &str) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    content_lines(text)
        .map(|(ln, l)| {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 2 {
                bail!("line {ln}: expected \"sources targets\"");
            }
            Ok((vertex_list(ln, toks[0])?, vertex_list(ln, toks[1])?))
        })
        .collect()
}

/// One pair per line: `v:w,v:w,... v:w,...`.
pub fn parse_weighted_pairs(text: &str) -> Result<Vec<(NodeWeighting, NodeWeighting)>> {
    let side = |ln: usize, tok: &str| -> Result<NodeWeighting> {
        let mut a = NodeWeighting::new();
        for part in tok.split(',') {
            let (v, w) = part.split_once(':').ok_or_else(|| anyhow!("line {ln}: expected v:w, found {part:?}"))?;
            let v: usize = v.parse().map_err(|_| anyhow!("line {ln}: bad vertex {v:?}"))?;
            let w: u64 = w.parse().map_err(|_| anyhow!("line {ln}: bad weight {w:?}"))?;
            a.add(v, w);
        }
        Ok(a)
    };
    content_lines(text)
        .map(|(ln, l)| {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 2 {
                bail!("line {ln}: expected two weightings");
            }
            Ok((side(ln, toks[0])?, side(ln, toks[1])?))
        })
        .collect()
}

/// One cut per line, as edges `u-v` resolved against `g`.
pub fn parse_sequence(text: &str, g: &Graph) -> Result<Vec<Vec<usize>>> {
    content_lines(text)
        .map(|(ln, l)| {
            l.split_whitespace()
                .map(|t| {
                    let (u, v) = t.split_once('-').ok_or_else(|| anyhow!("line {ln}: expected u-v, found {t:?}"))?;
                    let u: usize = u.parse().map_err(|_| anyhow!("line {ln}: bad vertex {u:?}"))?;
                    let v: usize = v.parse().map_err(|_| anyhow!("line {ln}: bad vertex {v:?}"))?;
                    g.edge_between(u, v).ok_or_else(|| anyhow!("line {ln}: no edge {u}-{v}"))
                })
                .collect()
        })
        .collect()
}

fn q(s: &str) -> Result<Q> {
    parse_q(s).map_err(|e| anyhow!(e))
}

#[derive(Serialize, Deserialize)]
pub struct FlowJson(pub Vec<(Vec<usize>, String)>);

impl FlowJson {
    pub fn of(f: &Flow) -> FlowJson {
        FlowJson(f.iter().map(|(p, x)| (p.clone(), fmt_q(x))).collect())
    }

    fn into_flow(self) -> Result<Flow> {
        let mut f = Flow::new();
        for (p, x) in self.0 {
            if p.len() < 2 {
                bail!("flow path {p:?} has no edge");
            }
            f.add(p, q(&x)?);
        }
        Ok(f)
    }
}

#[derive(Serialize, Deserialize)]
pub struct ClusteringJson {
    pub diameter: u64,
    pub clusters: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
pub struct CoverJson {
    pub h_cov: u64,
    pub sep_factor: u64,
    pub h_diam: u64,
    pub clusterings: Vec<ClusteringJson>,
}

impl CoverJson {
    pub fn of(c: &NeighborhoodCover) -> CoverJson {
        CoverJson {
            h_cov: c.h_cov,
            sep_factor: c.sep_factor,
            h_diam: c.h_diam,
            clusterings: c
                .clusterings
                .iter()
                .map(|x| ClusteringJson { diameter: x.diameter, clusters: x.clusters.clone() })
                .collect(),
        }
    }

    pub fn into_cover(self) -> NeighborhoodCover {
        NeighborhoodCover {
            h_cov: self.h_cov,
            sep_factor: self.sep_factor,
            h_diam: self.h_diam,
            clusterings: self
                .clusterings
                .into_iter()
                .map(|x| Clustering { diameter: x.diameter, clusters: x.clusters })
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct RouterJson {
    pub labels: Vec<Option<usize>>,
    pub weights: Vec<u64>,
    pub edges: Vec<(usize, usize, String)>,
}

#[derive(Serialize, Deserialize)]
pub struct ClusterJson {
    pub level: u64,
    pub clustering: usize,
    pub vertices: Vec<usize>,
    pub router: RouterJson,
    pub embedding: Vec<(usize, usize, FlowJson)>,
}

#[derive(Serialize, Deserialize)]
pub struct WitnessJson {
    pub s0: usize,
    pub kappa0: String,
    pub s1: u64,
    pub kappa1: String,
    pub s: u64,
    pub phi: String,
    pub covers: Vec<CoverJson>,
    pub clusters: Vec<ClusterJson>,
}

impl WitnessJson {
    pub fn of(w: &Witness) -> WitnessJson {
        WitnessJson {
            s0: w.s0,
            kappa0: fmt_q(&w.kappa0),
            s1: w.s1,
            kappa1: fmt_q(&w.kappa1),
            s: w.s,
            phi: fmt_q(&w.phi),
            covers: w.covers.iter().map(CoverJson::of).collect(),
            clusters: w
                .clusters
                .iter()
                .map(|c| ClusterJson {
                    level: c.level,
                    clustering: c.clustering,
                    vertices: c.vertices.clone(),
                    router: RouterJson {
                        labels: c.router.labels.clone(),
                        weights: c.router.weights.clone(),
                        edges: c.router.edges.iter().map(|(a, b, x)| (*a, *b, fmt_q(x))).collect(),
                    },
                    embedding: c.embedding.edges.iter().map(|(&(u, v), f)| (u, v, FlowJson::of(f))).collect(),
                })
                .collect(),
        }
    }

    pub fn into_witness(self) -> Result<Witness> {
        let mut clusters = Vec::with_capacity(self.clusters.len());
        for c in self.clusters {
            if c.router.labels.len() != c.router.weights.len() {
                bail!("router labels and weights differ in length");
            }
            let mut edges = Vec::new();
            for (a, b, x) in c.router.edges {
                if a >= c.router.labels.len() || b >= c.router.labels.len() {
                    bail!("router edge {a} {b} names a missing router vertex");
                }
                edges.push((a, b, q(&x)?));
            }
            let mut embedding = Embedding::new();
            let mut seen = BTreeMap::new();
            for (u, v, f) in c.embedding {
                if seen.insert((u.min(v), u.max(v)), ()).is_some() {
                    bail!("embedding lists router edge {u} {v} twice");
                }
                embedding.insert(u, v, f.into_flow()?);
            }
            clusters.push(WitnessCluster {
                level: c.level,
                clustering: c.clustering,
                vertices: c.vertices,
                router: Router { labels: c.router.labels, weights: c.router.weights, edges },
                embedding,
            });
        }
        Ok(Witness {
            covers: self.covers.into_iter().map(CoverJson::into_cover).collect(),
            clusters,
            s0: self.s0,
            kappa0: q(&self.kappa0).context("kappa0")?,
            s1: self.s1,
            kappa1: q(&self.kappa1).context("kappa1")?,
            s: self.s,
            phi: q(&self.phi).context("phi")?,
        })
    }
}
