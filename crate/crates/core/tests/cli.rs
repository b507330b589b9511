use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use balk1::cli::SweepSpec;
use balk1::loops::LoopPairJson;

fn balk1(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_balk1")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("balk1-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_identities_exit_codes() {
    let out = scratch("identities.json");
    assert_eq!(code(&balk1(&["verify-identities", "--out", s(&out)])), 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["all_certified"], true);

    let suite = scratch("false.suite");
    std::fs::write(&suite, "identity difference\n  target: a - b = 0\n  ideal: rel1\n").unwrap();
    assert_eq!(code(&balk1(&["verify-identities", s(&suite)])), 1);
    assert_eq!(code(&balk1(&["verify-identities", "/nonexistent/suite"])), 2);
    let broken = scratch("broken.suite");
    std::fs::write(&broken, "identity x\n  target: a ·· b\n").unwrap();
    assert_eq!(code(&balk1(&["verify-identities", s(&broken)])), 2);
}

#[test]
fn example_and_homotopy() {
    let pair = scratch("ex41.json");
    let csv = scratch("detc.csv");
    let o = balk1(&["example41", "--alpha-turns", "1", "--beta-turns", "0", "--grid", "256", "--out", s(&pair), "--csv", s(&csv)]);
    assert_eq!(code(&o), 0);
    let lp: LoopPairJson = serde_json::from_str(&std::fs::read_to_string(&pair).unwrap()).unwrap();
    assert_eq!(lp.decode().unwrap().grid(), 256);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 257);
    for kind in ["swap", "adjoint", "iota-kappa"] {
        assert_eq!(code(&balk1(&["homotopy", "--kind", kind, s(&pair), "--grid", "101"])), 0, "{kind}");
    }
    assert_eq!(code(&balk1(&["homotopy", "--kind", "linear-trivial", s(&pair)])), 2);
    assert_eq!(code(&balk1(&["example41", "--gamma-depth", "1.5"])), 2);
}

#[test]
fn pair_commands() {
    let pair = scratch("unit.json");
    assert_eq!(code(&balk1(&["unitalize", "--dim", "3", "--delta", "0.2", "--seed", "4", "--out", s(&pair)])), 0);
    assert_eq!(code(&balk1(&["check-pair", s(&pair), "--tol", "1e-8"])), 0);
    assert_eq!(code(&balk1(&["homotopy", "--kind", "swap", s(&pair)])), 0);
    let unbalanced = scratch("unbalanced.json");
    std::fs::write(&unbalanced, r#"{"dim":1,"a":[[[1.0,0.0]]],"b":[[[0.5,0.0]]],"tol":1e-9}"#).unwrap();
    assert_eq!(code(&balk1(&["check-pair", s(&unbalanced)])), 1);
    let malformed = scratch("malformed.json");
    std::fs::write(&malformed, "{\"dim\": 2, \"a\": [").unwrap();
    assert_eq!(code(&balk1(&["check-pair", s(&malformed)])), 2);
    assert_eq!(code(&balk1(&["check-pair", "/nonexistent/pair.json"])), 2);
    assert_eq!(code(&balk1(&["check-pair", s(&pair), "--tol=-1"])), 2);
    assert_eq!(code(&balk1(&["unitalize", "--delta", "0.5"])), 2);
    assert_eq!(code(&balk1(&["check-pair", s(&pair), "--out", "/nonexistent/dir/out.json"])), 2);
    assert_eq!(code(&balk1(&["frobnicate"])), 2);
}

#[test]
fn determinism() {
    let (x, y) = (scratch("u1.json"), scratch("u2.json"));
    for p in [&x, &y] {
        assert_eq!(code(&balk1(&["unitalize", "--seed", "9", "--out", s(p)])), 0);
    }
    assert_eq!(std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap());
}

#[test]
fn index_command() {
    let sym = scratch("sym.json");
    let report = scratch("report.json");
    assert_eq!(code(&balk1(&["example41", "--symbol", "--grid", "1024", "--out", s(&sym)])), 0);
    let o = balk1(&["index", s(&sym), "--modes", "128", "--out", s(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["analytic_svd"], -1);
    assert_eq!(r["analytic_fedosov"], -1);
    assert_eq!(r["topological"], -1);

    let coarse = scratch("coarse.json");
    assert_eq!(code(&balk1(&["example41", "--symbol", "--alpha-turns", "6", "--grid", "1024", "--out", s(&coarse)])), 0);
    let o = balk1(&["index", s(&coarse), "--modes", "16"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage quantize"));

    assert_eq!(code(&balk1(&["index", s(&sym), "--modes", "64", "--tail-cutoff", "64"])), 2);
    assert_eq!(code(&balk1(&["index", "--modes", "64"])), 2);
}

#[test]
fn index_sweep_csv() {
    let csv = scratch("sweep.csv");
    let o = balk1(&["index", "--sweep", "-2:2,-2:2", "--modes", "32", "--out", s(&csv)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,q,analytic,topological,fedosov_residue,pass"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 25);
    for r in rows {
        let (p, q): (i64, i64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert_eq!(r[2].parse::<i64>().unwrap(), q - p);
        assert_eq!(r[3], r[2]);
        assert_eq!(r[5], "true");
    }
    assert_eq!(code(&balk1(&["index", "--sweep", "2:1,0:0"])), 2);
}

#[test]
fn thread_cap() {
    let o = Command::new(env!("CARGO_BIN_EXE_balk1"))
        .args(["unitalize", "--dim", "2"])
        .env("BALK1_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_balk1")).args(["unitalize"]).env("BALK1_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_spec_parsing() {
    assert_eq!("-2:2,0:1".parse::<SweepSpec>().unwrap(), SweepSpec { p: (-2, 2), q: (0, 1) });
    assert!("1:0,0:0".parse::<SweepSpec>().is_err());
    assert!("1:2".parse::<SweepSpec>().is_err());
}
