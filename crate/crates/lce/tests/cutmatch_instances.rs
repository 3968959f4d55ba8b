use lce::cutmatch::{cutmatch, verify_cutmatch};
use lce::gen::{random_connected, random_weighting_pairs};
use lce::rational::{qr, qu};
use lce::rng::{derive, rng};
use rand::Rng;

#[test]
fn cutmatch_invariants_on_random_instances() {
    for seed in 0..50u64 {
        let mut r = rng(derive(seed, &[5]));
        let n = r.gen_range(4..=10);
        let g = random_connected(n, r.gen_range(n - 1..=20), 2, 2, seed);
        let h = r.gen_range(1..=4);
        let pairs = random_weighting_pairs(n, r.gen_range(1..=2), 5, seed);
        let phi = qr(1, 1 << r.gen_range(0..3));
        let res = cutmatch(&g, &pairs, h, &phi).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let check = verify_cutmatch(&g, &pairs, h, &phi, &res).unwrap();
        assert!(check.pass(), "seed {seed}: {check:?}");
        assert!(res.cut.size(&g) <= &phi * qu(res.deficit()));
    }
}
