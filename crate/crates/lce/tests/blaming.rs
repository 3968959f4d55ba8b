use lce::blocker::{check_blaming, lightest_path_blocker, make_blaming};
use lce::gen::{random_graph, random_hlength_flow};
use lce::graph::lightest_h_path_sets;
use lce::rational::{qu, to_f64};
use lce::rng::{derive, rng};
use rand::Rng;

#[test]
fn make_blaming_on_random_flows() {
    let mut runs = 0;
    let mut below = 0;
    for seed in 0..200u64 {
        let mut r = rng(derive(seed, &[3]));
        let n = r.gen_range(3..=10);
        let g = random_graph(n, r.gen_range(n..=20), 3, 64, seed);
        let h = r.gen_range(1..=5);
        let f = random_hlength_flow(&g, h, 8, seed).unwrap();
        if f.is_empty() {
            continue;
        }
        runs += 1;
        let caps: Vec<u64> = g.edges().iter().map(|e| e.capacity).collect();
        let b = make_blaming(&g, &caps, &f).unwrap();
        let check = check_blaming(&g, &caps, &b.flow, &b.blame).unwrap();
        assert!(check.pass(), "seed {seed}: {check:?}");
        assert!(!b.flow.is_empty());
        assert!(b.flow.iter().all(|(p, _)| !f.get(p).eq(&qu(0))), "seed {seed}: support grew");
        let shape = 1.0 / (h as f64 * (g.log_n() as f64).powi(2));
        if to_f64(&b.value_ratio) < shape {
            below += 1;
        }
    }
    assert!(runs >= 150, "only {runs} nonempty flows");
    eprintln!("{runs} runs, {below} with value ratio below 1/(h log^2 N)");
}

#[test]
fn blocker_blames_each_edge_few_times() {
    for seed in 0..60u64 {
        let mut r = rng(derive(seed, &[4]));
        let n = r.gen_range(3..=10);
        let g = random_graph(n, r.gen_range(n..=20), 3, 64, seed);
        let h = r.gen_range(1..=5);
        let w: Vec<f64> = (0..g.m()).map(|_| r.gen_range(0.5..2.0)).collect();
        let caps: Vec<u64> = g.edges().iter().map(|e| e.capacity).collect();
        let (s, t) = (0, n - 1);
        let mut is_t = vec![false; n];
        is_t[t] = true;
        let ws: Vec<Option<f64>> = w.iter().map(|&x| Some(x)).collect();
        let Some(p) = lightest_h_path_sets(&g, &ws, &[s], &is_t, h).unwrap() else { continue };
        let b = lightest_path_blocker(&g, &w, &caps, &[s], &[t], h, 0.5, p.weight).unwrap();
        let limit = 4 * g.log_n() as usize;
        for step in &b.sequence {
            let c = check_blaming(&g, &step.residual_before, &step.flow, &step.blame).unwrap();
            assert!(c.pass(), "seed {seed}: {c:?}");
        }
        assert!(b.blame_counts.values().all(|&c| c <= limit), "seed {seed}: {:?}", b.blame_counts);
    }
}
