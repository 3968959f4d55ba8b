//! Whitespace-separated text formats. Blank lines and lines starting with `#`
//! are skipped; errors carry the 1-based line number.
//!
//! ```text
//! graph:           "n m" then m lines "u v length capacity"
//! node-weighting:  lines "v w"
//! demand:          lines "u v value"      (value as p/q, integer or decimal)
//! moving cut:      "scale k" then lines "u v numerator"; several blocks allowed
//! ```

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::graph::{Demand, Edge, Graph, MovingCut, NodeWeighting};
use crate::rational::{fmt_q, parse_q, Q};
use crate::{Error, Result};

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') {
            None
        } else {
            Some((i + 1, t.split_whitespace().collect()))
        }
    })
}

fn fields<'a, const K: usize>(line: usize, toks: &[&'a str], what: &str) -> Result<[&'a str; K]> {
    toks.try_into().or_else(|_| err(line, format!("expected {K} fields for {what}, found {}", toks.len())))
}

fn num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse().or_else(|_| err(line, format!("bad {what} {tok:?}")))
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut it = lines(text);
    let Some((hl, header)) = it.next() else { return err(1, "missing header \"n m\"") };
    let [n, m] = fields::<2>(hl, &header, "the header")?;
    let n: usize = num(hl, n, "vertex count")?;
    let m: usize = num(hl, m, "edge count")?;
    let mut edges = Vec::with_capacity(m);
    let mut seen = BTreeSet::new();
    let mut last = hl;
    for (ln, toks) in it {
        last = ln;
        if edges.len() == m {
            return err(ln, format!("more than the declared {m} edges"));
        }
        let [u, v, l, c] = fields::<4>(ln, &toks, "an edge")?;
        let (u, v): (usize, usize) = (num(ln, u, "endpoint")?, num(ln, v, "endpoint")?);
        let length: u64 = num(ln, l, "length")?;
        let capacity: u64 = num(ln, c, "capacity")?;
        if u >= n || v >= n {
            return err(ln, format!("endpoint outside 0..{n}"));
        }
        if length == 0 {
            return err(ln, "length must be positive");
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return err(ln, format!("duplicate edge {u} {v}"));
        }
        edges.push(Edge { u, v, length, capacity });
    }
    if edges.len() != m {
        return err(last, format!("declared {m} edges, found {}", edges.len()));
    }
    Graph::new(n, edges).or_else(|e| err(hl, e.to_string()))
}

pub fn emit_graph(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.m());
    for e in g.edges() {
        writeln!(s, "{} {} {} {}", e.u, e.v, e.length, e.capacity).unwrap();
    }
    s
}

pub fn parse_weighting(text: &str) -> Result<NodeWeighting> {
    let mut a = NodeWeighting::new();
    let mut seen = BTreeSet::new();
    for (ln, toks) in lines(text) {
        let [v, w] = fields::<2>(ln, &toks, "a node weight")?;
        let v: usize = num(ln, v, "vertex")?;
        if !seen.insert(v) {
            return err(ln, format!("vertex {v} listed twice"));
        }
        a.set(v, num(ln, w, "weight")?);
    }
    Ok(a)
}

pub fn emit_weighting(a: &NodeWeighting) -> String {
    let mut s = String::new();
    for (v, w) in a.iter() {
        writeln!(s, "{v} {w}").unwrap();
    }
    s
}

pub fn parse_demand(text: &str) -> Result<Demand> {
    let mut d = Demand::new();
    let mut seen = BTreeSet::new();
    for (ln, toks) in lines(text) {
        let [u, v, x] = fields::<3>(ln, &toks, "a demand entry")?;
        let (u, v): (usize, usize) = (num(ln, u, "vertex")?, num(ln, v, "vertex")?);
        let x: Q = parse_q(x).or_else(|m| err(ln, m))?;
        if x < Q::from_integer(0.into()) {
            return err(ln, "negative demand");
        }
        if !seen.insert((u, v)) {
            return err(ln, format!("pair {u} {v} listed twice"));
        }
        d.add(u, v, x);
    }
    Ok(d)
}

pub fn emit_demand(d: &Demand) -> String {
    let mut s = String::new();
    for ((u, v), x) in d.iter() {
        writeln!(s, "{u} {v} {}", fmt_q(x)).unwrap();
    }
    s
}

/// Cut blocks; edges are named by endpoints and resolved against `g`.
pub fn parse_cuts(text: &str, g: &Graph) -> Result<Vec<MovingCut>> {
    let mut out: Vec<MovingCut> = Vec::new();
    let mut seen = BTreeSet::new();
    for (ln, toks) in lines(text) {
        if toks[0] == "scale" {
            let [_, k] = fields::<2>(ln, &toks, "a scale header")?;
            let k: u64 = num(ln, k, "scale")?;
            if k == 0 {
                return err(ln, "scale must be positive");
            }
            out.push(MovingCut::new(k));
            seen.clear();
            continue;
        }
        let Some(cut) = out.last_mut() else { return err(ln, "cut entry before any \"scale\" header") };
        let [u, v, w] = fields::<3>(ln, &toks, "a cut entry")?;
        let (u, v): (usize, usize) = (num(ln, u, "vertex")?, num(ln, v, "vertex")?);
        let w: u64 = num(ln, w, "numerator")?;
        let Some(e) = g.edge_between(u, v) else { return err(ln, format!("no edge {u} {v} in the graph")) };
        if !seen.insert(e) {
            return err(ln, format!("edge {u} {v} listed twice in one block"));
        }
        cut.set(e, w).or_else(|x| err(ln, x.to_string()))?;
    }
    Ok(out)
}

pub fn emit_cuts(g: &Graph, cuts: &[MovingCut]) -> String {
    let mut s = String::new();
    for c in cuts {
        writeln!(s, "scale {}", c.scale).unwrap();
        for (e, w) in c.iter() {
            let ed = g.edge(e);
            writeln!(s, "{} {} {w}", ed.u, ed.v).unwrap();
        }
    }
    s
}

/// Parses exactly one cut block.
pub fn parse_cut(text: &str, g: &Graph) -> Result<MovingCut> {
    let mut cuts = parse_cuts(text, g)?;
    match cuts.len() {
        1 => Ok(cuts.pop().unwrap()),
        k => err(1, format!("expected one cut block, found {k}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};
    use proptest::prelude::*;

    #[test]
    fn k2_and_loops() {
        let g = parse_graph("2 1\n0 1 1 5\n").unwrap();
        assert_eq!(g.edge(0), &Edge { u: 0, v: 1, length: 1, capacity: 5 });
        let l = parse_graph("1 1\n0 0 1 1\n").unwrap();
        assert!(l.edge(0).is_loop());
        assert_eq!(emit_graph(&g), "2 1\n0 1 1 5\n");
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_graph("3 2\n0 1 1 1\n1 0 2 2\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 3, msg: "duplicate edge 1 0".into() });
        assert!(matches!(parse_graph("2 1\n\n0 x 1 1\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_graph("2 2\n0 1 1 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_graph("2 1\n0 1 0 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_demand("0 1 1/0\n"), Err(Error::Parse { line: 1, .. })));
        let g = parse_graph("2 1\n0 1 1 1\n").unwrap();
        assert!(matches!(parse_cuts("0 1 1\n", &g), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_cuts("scale 2\n0 1 3\n", &g), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn demand_values() {
        let d = parse_demand("0 1 0.25\n1 2 3/6\n2 0 4\n").unwrap();
        assert_eq!(d.get(0, 1), qr(1, 4));
        assert_eq!(d.get(1, 2), qr(1, 2));
        assert_eq!(d.get(2, 0), q(4));
        assert_eq!(emit_demand(&d), "0 1 1/4\n1 2 1/2\n2 0 4\n");
    }

    #[test]
    fn several_cut_blocks() {
        let g = parse_graph("3 2\n0 1 1 1\n1 2 1 1\n").unwrap();
        let cuts = parse_cuts("scale 4\n1 0 2\nscale 2\n1 2 2\n", &g).unwrap();
        assert_eq!(cuts.len(), 2);
        assert_eq!(cuts[0].value(0), qr(1, 2));
        assert_eq!(emit_cuts(&g, &cuts), "scale 4\n0 1 2\nscale 2\n1 2 2\n");
    }

    proptest! {
        #[test]
        fn round_trips(n in 1usize..12, m in 0usize..30, seed in any::<u64>()) {
            let g = crate::gen::random_graph(n, m, 5, 9, seed);
            let text = emit_graph(&g);
            let back = parse_graph(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(emit_graph(&back), text);
            let a: NodeWeighting = (0..n).map(|v| (v, (seed >> (v % 60)) % 7)).filter(|x| x.1 > 0).collect();
            prop_assert_eq!(parse_weighting(&emit_weighting(&a)).unwrap(), a);
            let mut d = Demand::new();
            let mut c = MovingCut::new(6);
            for e in 0..g.m() {
                let ed = g.edge(e);
                d.add(ed.u, ed.v, qr((seed % 11) as i64 + e as i64, 1 + (e as i64 % 5)));
                c.set(e, (seed.wrapping_add(e as u64)) % 7).unwrap();
            }
            prop_assert_eq!(parse_demand(&emit_demand(&d)).unwrap(), d);
            prop_assert_eq!(parse_cut(&emit_cuts(&g, std::slice::from_ref(&c)), &g).unwrap(), c);
        }
    }
}
