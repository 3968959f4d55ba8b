//! Neighborhood covers by randomized ball carving, and their verifier.
//!
//! Each clustering draws one radius `r >= h_cov`. Centers are visited in a
//! seeded random order among vertices whose `h_cov`-ball is still uncovered;
//! a center is accepted only if its `(r + s·2r)`-ball misses every cluster
//! already placed in the clustering, which makes the separation hold by
//! construction. The center's own ball is then covered, so every clustering
//! makes progress.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::graph::{Distance, Graph};
use crate::rational::ceil_log2_u64;
use crate::rng::{derive, rng};
use crate::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Clustering {
    pub clusters: Vec<Vec<usize>>,
    /// Declared weak-diameter bound for this clustering's clusters.
    pub diameter: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NeighborhoodCover {
    pub clusterings: Vec<Clustering>,
    pub h_cov: u64,
    pub sep_factor: u64,
    /// Maximum declared diameter over clusterings.
    pub h_diam: u64,
}

impl NeighborhoodCover {
    pub fn width(&self) -> usize {
        self.clusterings.len()
    }

    pub fn clusters(&self) -> impl Iterator<Item = &Vec<usize>> + '_ {
        self.clusterings.iter().flat_map(|c| c.clusters.iter())
    }
}

#[derive(Clone, Debug, Default)]
pub struct CoverConfig {
    /// Upper bound on any radius is `h_diam / 2`; `None` uses `8·s·h_cov·⌈log2(n+1)⌉`.
    pub h_diam: Option<u64>,
    /// `None` uses `64·log2(n+2)`.
    pub max_width: Option<usize>,
}


pub fn default_h_diam(n: usize, h_cov: u64, s: u64) -> u64 {
    8 * s * h_cov * ceil_log2_u64(n as u64 + 1).max(1)
}

pub fn default_max_width(n: usize) -> usize {
    (64.0 * ((n + 2) as f64).log2()).floor() as usize
}

/// Builds a cover; `eps` divides the mean of the exponential radius so that
/// smaller values favour fewer, larger clusters.
pub fn build_cover(g: &Graph, h_cov: u64, s: u64, eps: f64, seed: u64, cfg: &CoverConfig) -> Result<NeighborhoodCover> {
    if h_cov == 0 || s == 0 {
        return invalid("covering radius and separation factor must be at least 1");
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid(format!("cover eps must lie in (0, 1], got {eps}"));
    }
    let n = g.n();
    let h_diam = cfg.h_diam.unwrap_or_else(|| default_h_diam(n, h_cov, s));
    if h_diam < 2 * h_cov {
        return invalid(format!("declared diameter {h_diam} is below twice the covering radius {h_cov}"));
    }
    let max_width = cfg.max_width.unwrap_or_else(|| default_max_width(n));
    let cover_balls: Vec<Vec<usize>> = (0..n).map(|v| g.ball(v, h_cov)).collect();
    let mut covered = vec![false; n];
    let mut clusterings = Vec::new();
    let mean = (h_cov * ceil_log2_u64(n as u64 + 1).max(1)) as f64 / eps;
    while covered.iter().any(|c| !c) {
        if clusterings.len() >= max_width {
            return Err(Error::IterationCap(format!("cover not complete within width {max_width}")));
        }
        let mut r = rng(derive(seed, &[0x0c0e, clusterings.len() as u64]));
        let draw: f64 = -mean * (1.0 - r.gen::<f64>()).ln();
        let radius = (h_cov + draw.floor() as u64).min(h_diam / 2);
        let block = radius.saturating_add(s.saturating_mul(2 * radius));
        let mut order: Vec<usize> = (0..n).filter(|&v| !covered[v]).collect();
        order.shuffle(&mut r);
        let mut owner = vec![usize::MAX; n];
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        let mut widest = 0u64;
        for c in order {
            if covered[c] || owner[c] != usize::MAX {
                continue;
            }
            let dist = g.distances_from(&[c], Some(block));
            if dist.iter().enumerate().any(|(y, d)| d.within(block) && owner[y] != usize::MAX) {
                continue;
            }
            let ecc = dist.iter().filter_map(|d| d.finite()).max().unwrap_or(0);
            let rc = radius.min(ecc);
            let members: Vec<usize> = (0..n).filter(|&y| dist[y].within(rc)).collect();
            for &y in &members {
                owner[y] = clusters.len();
            }
            widest = widest.max(rc);
            clusters.push(members);
        }
        for v in 0..n {
            if !covered[v] {
                let o = owner[v];
                if o != usize::MAX && cover_balls[v].iter().all(|&y| owner[y] == o) {
                    covered[v] = true;
                }
            }
        }
        clusterings.push(Clustering { clusters, diameter: 2 * widest });
    }
    let h = clusterings.iter().map(|c| c.diameter).max().unwrap_or(0);
    let cover = NeighborhoodCover { clusterings, h_cov, sep_factor: s, h_diam: h };
    debug_assert!(verify_cover(g, &cover).pass());
    Ok(cover)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverReport {
    pub covering: bool,
    pub diameter: bool,
    pub separation: bool,
    pub disjoint: bool,
    pub in_range: bool,
    pub uncovered_vertex: Option<usize>,
    pub measured_diameter: Distance,
    /// Smallest distance between two clusters of one clustering.
    pub measured_separation: Option<Distance>,
    pub width: usize,
}

impl CoverReport {
    pub fn pass(&self) -> bool {
        self.covering && self.diameter && self.separation && self.disjoint && self.in_range
    }
}

pub fn verify_cover(g: &Graph, cover: &NeighborhoodCover) -> CoverReport {
    let n = g.n();
    let in_range = cover.clusters().all(|c| c.iter().all(|&v| v < n));
    let mut rep = CoverReport {
        covering: true,
        diameter: true,
        separation: true,
        disjoint: true,
        in_range,
        uncovered_vertex: None,
        measured_diameter: Distance::Finite(0),
        measured_separation: None,
        width: cover.width(),
    };
    if !in_range {
        rep.covering = false;
        return rep;
    }
    let mut balls_ok = vec![false; n];
    for cl in &cover.clusterings {
        let mut owner = vec![usize::MAX; n];
        for (i, c) in cl.clusters.iter().enumerate() {
            for &v in c {
                if owner[v] != usize::MAX {
                    rep.disjoint = false;
                }
                owner[v] = i;
            }
        }
        for (i, c) in cl.clusters.iter().enumerate() {
            let d = g.weak_diameter(c);
            rep.measured_diameter = rep.measured_diameter.max(d);
            if d.exceeds(cl.diameter) {
                rep.diameter = false;
            }
            let need = cover.sep_factor.saturating_mul(cl.diameter);
            let from = g.distances_from(c, None);
            for (y, dy) in from.iter().enumerate() {
                if owner[y] != usize::MAX && owner[y] != i {
                    rep.measured_separation = Some(rep.measured_separation.map_or(*dy, |m| m.min(*dy)));
                    if dy.within(need.saturating_sub(1)) {
                        rep.separation = false;
                    }
                }
            }
        }
        for v in 0..n {
            if !balls_ok[v] {
                let o = owner[v];
                if o != usize::MAX && g.ball(v, cover.h_cov).iter().all(|&y| owner[y] == o) {
                    balls_ok[v] = true;
                }
            }
        }
    }
    if let Some(v) = (0..n).find(|&v| !balls_ok[v]) {
        rep.covering = false;
        rep.uncovered_vertex = Some(v);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        let e: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::unit(n, &e).unwrap()
    }

    #[test]
    fn single_vertex_and_clique() {
        let g = Graph::unit(1, &[]).unwrap();
        let c = build_cover(&g, 1, 1, 0.5, 1, &CoverConfig::default()).unwrap();
        assert_eq!(c.width(), 1);
        assert_eq!(c.clusterings[0].clusters, vec![vec![0]]);
        let mut e = Vec::new();
        for u in 0..5 {
            for v in u + 1..5 {
                e.push((u, v));
            }
        }
        let k5 = Graph::unit(5, &e).unwrap();
        let c = build_cover(&k5, 1, 2, 0.5, 3, &CoverConfig::default()).unwrap();
        assert_eq!(c.width(), 1);
        assert_eq!(c.clusterings[0].clusters, vec![vec![0, 1, 2, 3, 4]]);
        assert!(verify_cover(&k5, &c).pass());
    }

    #[test]
    fn path_cover_verifies() {
        let g = path(9);
        for seed in 0..10 {
            let c = build_cover(&g, 1, 2, 0.5, seed, &CoverConfig::default()).unwrap();
            let r = verify_cover(&g, &c);
            assert!(r.pass(), "{r:?}");
            assert!(c.width() <= 8);
        }
        let tight = CoverConfig { h_diam: Some(2), max_width: None };
        let c = build_cover(&g, 1, 2, 0.5, 0, &tight).unwrap();
        assert!(verify_cover(&g, &c).pass());
    }

    #[test]
    fn verifier_flags_problems() {
        let g = path(4);
        let missing = NeighborhoodCover {
            clusterings: vec![Clustering { clusters: vec![vec![0, 1]], diameter: 1 }],
            h_cov: 1,
            sep_factor: 1,
            h_diam: 1,
        };
        let r = verify_cover(&g, &missing);
        assert!(!r.covering);
        assert_eq!(r.uncovered_vertex, Some(1));
        let close = NeighborhoodCover {
            clusterings: vec![Clustering { clusters: vec![vec![0], vec![1]], diameter: 1 }],
            h_cov: 0,
            sep_factor: 4,
            h_diam: 1,
        };
        assert!(!verify_cover(&g, &close).separation);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn random_covers_verify(seed in 0u64..1000, h in 1u64..4, s in 1u64..3) {
            let g = crate::gen::random_connected(12, 20, 2, 1, seed);
            let c = build_cover(&g, h, s, 0.5, seed, &CoverConfig::default()).unwrap();
            let r = verify_cover(&g, &c);
            proptest::prop_assert!(r.pass(), "{:?}", r);
        }
    }
}
