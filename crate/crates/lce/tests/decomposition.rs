use lce::driver::{certify_decomposition, expander_decomposition, linked_decomposition, DriverConfig};
use lce::gen::{clustered, dumbbell, random_connected};
use lce::rational::qr;

fn instance(seed: u64) -> lce::Graph {
    if seed.is_multiple_of(2) {
        clustered(3 + (seed as usize % 3), 8 + (seed as usize % 5), 0.6, seed)
    } else {
        random_connected(20 + 2 * seed as usize, 40 + 4 * seed as usize, 2, 3, seed)
    }
}

#[test]
fn decompositions_certify() {
    let phi = qr(1, 20);
    for seed in 0..4u64 {
        let g = instance(seed);
        let a = g.degree_weighting();
        let cfg = DriverConfig { seed, ..Default::default() };
        let d = expander_decomposition(&g, &a, 2, &phi, 0.5, 0.5, &cfg).unwrap();
        let cert = certify_decomposition(&g, &a, 2, &phi, 0.5, &d, seed).unwrap();
        assert!(cert.pass(), "seed {seed}: {cert:?}");
        assert_eq!(cert.witness_ok, Some(true));
    }
}

#[test]
fn linked_dumbbell_converges() {
    let g = dumbbell(5);
    let a = g.degree_weighting();
    let r = linked_decomposition(&g, &a, 2, &qr(1, 10), 0.5, 0.5, None, &DriverConfig::default()).unwrap();
    assert!(r.report.rounds as u64 <= g.log_n());
    if r.report.geometric_decay {
        assert!(r.report.total_within_twice_first);
    }
}
