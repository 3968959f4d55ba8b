//! Integer max-flow (Dinic) on a directed network.

use std::collections::VecDeque;

pub const INF: u64 = u64::MAX / 4;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: u64,
    rev: usize,
}

#[derive(Clone, Debug)]
pub struct Network {
    adj: Vec<Vec<Arc>>,
    original: Vec<(usize, usize, u64)>,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Network { adj: vec![Vec::new(); n], original: Vec::new() }
    }

    /// Returns an arc handle usable with [`Network::flow_on`].
    pub fn add_arc(&mut self, from: usize, to: usize, cap: u64) -> usize {
        let rf = self.adj[to].len() + usize::from(from == to);
        let rt = self.adj[from].len();
        self.adj[from].push(Arc { to, cap, rev: rf });
        self.adj[to].push(Arc { to: from, cap: 0, rev: rt });
        self.original.push((from, rt, cap));
        self.original.len() - 1
    }

    pub fn flow_on(&self, handle: usize) -> u64 {
        let (from, idx, cap) = self.original[handle];
        cap - self.adj[from][idx].cap
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        if s == t {
            return 0;
        }
        let n = self.adj.len();
        let mut total = 0u64;
        loop {
            let mut level = vec![usize::MAX; n];
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for a in &self.adj[x] {
                    if a.cap > 0 && level[a.to] == usize::MAX {
                        level[a.to] = level[x] + 1;
                        queue.push_back(a.to);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            let mut iter = vec![0usize; n];
            loop {
                let pushed = self.push(s, t, INF, &level, &mut iter);
                if pushed == 0 {
                    break;
                }
                total = total.saturating_add(pushed);
            }
        }
    }

    fn push(&mut self, x: usize, t: usize, limit: u64, level: &[usize], iter: &mut [usize]) -> u64 {
        if x == t {
            return limit;
        }
        while iter[x] < self.adj[x].len() {
            let i = iter[x];
            let (to, cap) = (self.adj[x][i].to, self.adj[x][i].cap);
            if cap > 0 && level[to] == level[x] + 1 {
                let got = self.push(to, t, limit.min(cap), level, iter);
                if got > 0 {
                    self.adj[x][i].cap -= got;
                    let rev = self.adj[x][i].rev;
                    self.adj[to][rev].cap += got;
                    return got;
                }
            }
            iter[x] += 1;
        }
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond() {
        let mut n = Network::new(4);
        let a = n.add_arc(0, 1, 3);
        n.add_arc(0, 2, 2);
        n.add_arc(1, 3, 2);
        n.add_arc(2, 3, 3);
        n.add_arc(1, 2, 5);
        assert_eq!(n.max_flow(0, 3), 5);
        assert_eq!(n.flow_on(a), 3);
    }

    proptest::proptest! {
        #[test]
        fn matches_brute_force_min_cut(arcs in proptest::collection::vec((0usize..6, 0usize..6, 0u64..5), 0..14)) {
            let n = 6;
            let mut net = Network::new(n);
            for &(a, b, c) in &arcs {
                net.add_arc(a, b, c);
            }
            let value = net.max_flow(0, n - 1);
            let mut best = u64::MAX;
            for mask in 0u32..(1 << n) {
                if mask & 1 == 0 || mask & (1 << (n - 1)) != 0 {
                    continue;
                }
                let cut: u64 = arcs
                    .iter()
                    .filter(|&&(a, b, _)| mask & (1 << a) != 0 && mask & (1 << b) == 0)
                    .map(|&(_, _, c)| c)
                    .sum();
                best = best.min(cut);
            }
            proptest::prop_assert_eq!(value, best);
        }
    }
}
