use std::path::Path;
use std::process::{Command, Output};

fn jpac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jpac")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_symmetric(dir: &Path, g: f64) -> std::path::PathBuf {
    let file = dir.join(format!("sym{g}.json"));
    let doc = format!(r#"{{"K": 2, "G": [1, {g}, {g}, 1], "eta_watts": 0.1, "gamma_linear": 1, "pbar_watts": 0.2}}"#);
    std::fs::write(&file, doc).unwrap();
    file
}

#[test]
fn gen_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    let out = jpac(&["gen", "-k", "6", "--seed", "9", "--out", path(&net)]);
    assert!(out.status.success(), "{out:?}");
    for algo in ["nlpd", "pnmd", "oracle"] {
        let out = jpac(&["solve", path(&net), "--algo", algo]);
        assert!(out.status.success(), "{algo}: {out:?}");
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(v["total_power_w"].as_f64().unwrap() > 0.0, "{algo}");
    }
}

#[test]
fn gen_is_deterministic() {
    let a = jpac(&["gen", "-k", "4", "--seed", "3"]);
    let b = jpac(&["gen", "-k", "4", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, jpac(&["gen", "-k", "4", "--seed", "4"]).stdout);
}

#[test]
fn solve_reports_one_based_links() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_symmetric(dir.path(), 0.6);
    let out = jpac(&["solve", path(&file), "--algo", "nlpd"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["supported"], serde_json::json!([2]));
    assert_eq!(v["removal_trace"][0]["link"], 1);
    assert_eq!(v["removal_trace"][0]["stage"], "PRE");
    let oracle: serde_json::Value =
        serde_json::from_slice(&jpac(&["solve", path(&file), "--algo", "oracle"]).stdout).unwrap();
    assert_eq!(oracle["best_set"], serde_json::json!([1]));
}

#[test]
fn trace_adds_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_symmetric(dir.path(), 1.2);
    let plain: serde_json::Value = serde_json::from_slice(&jpac(&["solve", path(&file)]).stdout).unwrap();
    assert!(plain.get("iterations").is_none());
    let file = dir.path().join("twelve.json");
    assert!(jpac(&["gen", "-k", "12", "--seed", "3", "--out", path(&file)])
        .status
        .success());
    let traced: serde_json::Value = serde_json::from_slice(&jpac(&["solve", path(&file), "--trace"]).stdout).unwrap();
    let iters = traced["iterations"].as_array().unwrap();
    assert!(!iters.is_empty());
    assert!(iters[0]["kkt_residual"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn bench_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let run = jpac(&[
        "bench",
        "--k-list",
        "3,4",
        "--trials",
        "2",
        "--seed",
        "5",
        "--algos",
        "nlpd,oracle",
        "--json",
        "--out",
        path(&out),
    ]);
    assert!(run.status.success(), "{run:?}");
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 2 * 2 * 2);
    assert!(trials.starts_with("K,algorithm,trial,seed,supported,total_power_w,wall_time_s,status\n"));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4);
    assert!(out.join("report.json").exists());
}

#[test]
fn empty_k_list_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e");
    let run = jpac(&["bench", "--k-list", "--out", path(&out)]);
    assert!(run.status.success(), "{run:?}");
    assert_eq!(
        std::fs::read_to_string(out.join("trials.csv")).unwrap().lines().count(),
        1
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(jpac(&["--help"]).status.code(), Some(0));
    assert_eq!(jpac(&["bench", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(jpac(&["bench", "--algos", "simplex"]).status.code(), Some(1));
    assert_eq!(jpac(&["bench", "--p", "1.5", "--trials", "1"]).status.code(), Some(1));
    assert_eq!(
        jpac(&["bench", "--alpha2-mode", "value:-1", "--trials", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        jpac(&["bench", "--k-list", "20", "--algos", "oracle"]).status.code(),
        Some(1)
    );
    assert_eq!(
        jpac(&["solve", path(&dir.path().join("missing.json"))]).status.code(),
        Some(3)
    );

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let sub = blocker.join("out");
    assert_eq!(
        jpac(&["bench", "--trials", "1", "--k-list", "3", "--out", path(&sub)])
            .status
            .code(),
        Some(3)
    );

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"K": 2, "G": [1, 0.1, 0.1, 0], "eta_watts": 0.1, "gamma_linear": 1, "pbar_watts": 0.2}"#,
    )
    .unwrap();
    assert_eq!(jpac(&["solve", path(&bad)]).status.code(), Some(1));
}

#[test]
fn verify_passes() {
    let out = jpac(&["verify", "--rounds", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
