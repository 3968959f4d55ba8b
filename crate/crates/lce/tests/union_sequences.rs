use lce::gen::{random_classic_sequence, random_connected, random_moving_sequence};
use lce::oracle::cut_sparsity;
use lce::rational::{qu, to_f64};
use lce::rng::{derive, rng};
use lce::union::{dispersed_demand, union_classic_check};
use lce::{MovingCut, NodeWeighting};
use rand::Rng;

#[test]
fn classic_union_bound_on_random_sequences() {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut r = rng(derive(seed, &[1]));
        let n = r.gen_range(3..=12);
        let m = r.gen_range(n - 1..=(n * (n - 1) / 2).min(3 * n));
        let g = random_connected(n, m, 1, 4, seed);
        let cuts = random_classic_sequence(&g, 4, seed);
        let rep = union_classic_check(&g, &cuts).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        worst = worst.max(to_f64(&rep.union_sparsity) / to_f64(&rep.bound));
        assert!(rep.holds, "seed {seed}: {rep:?}");
    }
    eprintln!("worst union/bound ratio {worst:.3}");
}

#[test]
fn dispersed_demand_of_moving_sequences() {
    let (h, s) = (1, 4);
    let mut used = 0;
    for seed in 0..40u64 {
        let mut r = rng(derive(seed, &[2]));
        let n = r.gen_range(4..=10);
        let g = random_connected(n, r.gen_range(n - 1..=2 * n), 1, 3, seed);
        let a: NodeWeighting = (0..n).map(|v| (v, r.gen_range(1..=3))).collect();
        let seq = random_moving_sequence(&g, &a, h, s, 4, seed).unwrap();
        if seq.is_empty() {
            continue;
        }
        used += 1;
        let (cuts, demands): (Vec<MovingCut>, Vec<_>) = seq.into_iter().unzip();
        let (d, rep) = dispersed_demand(&g, &a, &demands, &cuts, h, s).unwrap();
        assert!(rep.pass(), "seed {seed}: {rep:?}");
        let total = cuts[1..].iter().fold(cuts[0].clone(), |x, c| x.plus_clamped(c));
        let sp = cut_sparsity(&g, &total, &a, 2 * h, (s - 2) / 2).unwrap();
        let bound = total.size(&g) / d.size();
        assert!(sp.le_q(&bound), "seed {seed}: sparsity {sp:?} above {bound}");
        assert!(d.size() > qu(0));
    }
    assert!(used >= 20, "only {used} nonempty sequences");
}
