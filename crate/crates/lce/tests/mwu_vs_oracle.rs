use lce::flow::flow_stats;
use lce::gen::random_graph;
use lce::graph::unblocked_pair;
use lce::mwu::{mwu_flow_cut, MwuConfig};
use lce::oracle::{exact_hlength_maxflow, DEFAULT_PATH_CAP};
use lce::rational::{q, qr};
use rand::{Rng, SeedableRng};

#[test]
fn mwu_matches_oracle_on_random_instances() {
    let start = std::time::Instant::now();
    for seed in 0..50u64 {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = r.gen_range(4..=10);
        let m = r.gen_range(n..=20);
        let g = random_graph(n, m, 3, 8, seed);
        let h = r.gen_range(2..=5);
        let k = r.gen_range(1..=3);
        let mut pairs = Vec::new();
        for _ in 0..k {
            let s = r.gen_range(0..n);
            let mut t = r.gen_range(0..n);
            while t == s {
                t = r.gen_range(0..n);
            }
            pairs.push((vec![s], vec![t]));
        }
        let res = mwu_flow_cut(&g, &pairs, None, h, 0.1, &MwuConfig::default()).unwrap();
        let st = flow_stats(&g, &res.flow).unwrap();
        let oracle = exact_hlength_maxflow(&g, &pairs, h, DEFAULT_PATH_CAP).unwrap();
        assert!(st.congestion.le_q(&q(1)));
        assert!(st.dilation <= h);
        assert!(unblocked_pair(&g, &res.cut, &pairs, h).unwrap().is_none());
        assert!(st.value <= oracle.value);
        assert!(&oracle.value * qr(9, 10) <= st.value, "seed {seed}: {} vs {}", res.report.value, oracle.value);
        eprintln!("seed {seed} val {} oracle {} cut {} phases {} calls {} bound {}", res.report.value, oracle.value, res.report.cut_size, res.report.phases, res.report.blocker_calls, res.report.bound_holds);
    }
    eprintln!("elapsed {:?}", start.elapsed());
}
