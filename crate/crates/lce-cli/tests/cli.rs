mod common;

use common::{lce, lce_env, s, write};

#[test]
fn gen_is_deterministic() {
    let a = lce(&["gen", "--n", "10", "--m", "20", "--seed", "7"]);
    let b = lce(&["gen", "--n", "10", "--m", "20", "--seed", "7"]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.starts_with("10 20\n"));
    let c = lce_env(&["gen", "--n", "10", "--m", "20", "--seed", "1"], &[("LCE_SEED", "7")]);
    assert_eq!(c.stdout, a.stdout);
}

#[test]
fn usage_and_input_errors_exit_2() {
    assert_eq!(lce(&["gen", "--bogus"]).code, 2);
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g", "2 2\n0 1 1 1\n1 0 1 1\n");
    let r = lce(&["oracle", "maxflow", "--graph", s(&g), "--pairs", s(&g)]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.contains("duplicate edge"), "{}", r.stdout);
    let loops = write(dir.path(), "l", "2 2\n0 0 1 1\n0 1 1 1\n");
    let pairs = write(dir.path(), "p", "0 1\n");
    let r = lce(&["oracle", "maxflow", "--graph", s(&loops), "--pairs", s(&pairs), "--h", "1"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("\"value\": \"1\""));
}

#[test]
fn dumbbell_cut_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    let c = dir.path().join("c");
    assert_eq!(lce(&["gen", "--kind", "dumbbell", "--n", "10", "--out", s(&g)]).code, 0);
    let r = lce(&["sparse-cut", "--graph", s(&g), "--h", "2", "--s", "4", "--phi", "1/5", "--out", s(&c)]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("\"result\": \"cut\""));
    let a = write(dir.path(), "a", &(0..10).map(|v| format!("{v} {}\n", if v == 4 || v == 5 { 5 } else { 4 })).collect::<String>());
    let v = lce(&["verify", "cut", "--graph", s(&g), "--cut", s(&c), "--A", s(&a), "--h", "2", "--s", "4", "--phi", "0.25"]);
    assert_eq!(v.code, 0, "{}", v.stdout);
}

#[test]
fn clique_decomposition_then_witness_check() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    let w = dir.path().join("w");
    let c = dir.path().join("c");
    assert_eq!(lce(&["gen", "--kind", "clique", "--n", "6", "--out", s(&g)]).code, 0);
    let d = lce(&["decompose", "--graph", s(&g), "--phi", "1/50", "--out", s(&c), "--witness-out", s(&w)]);
    assert_eq!(d.code, 0, "{}", d.stdout);
    let v = lce(&["verify", "witness", "--graph", s(&g), "--witness", s(&w), "--cut", s(&c)]);
    assert_eq!(v.code, 0, "{}", v.stdout);
}

#[test]
fn failed_verification_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    assert_eq!(lce(&["gen", "--kind", "clique", "--n", "4", "--out", s(&g)]).code, 0);
    let c = write(dir.path(), "c", "scale 8\n0 1 8\n");
    let r = lce(&["verify", "cut", "--graph", s(&g), "--cut", s(&c), "--phi", "1/1000"]);
    assert_eq!(r.code, 1, "{}", r.stdout);
    assert!(r.stdout.contains("\"pass\": false"));
}
