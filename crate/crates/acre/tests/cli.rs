use std::path::Path;
use std::process::{Command, Output};

fn acre(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acre")).arg("--out").arg(out).args(args).output().expect("spawn acre")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn value_at(csv: &str, x: &str) -> f64 {
    csv.lines().find_map(|l| l.strip_prefix(&format!("{x},"))).and_then(|v| v.split(',').next()).unwrap().parse().unwrap()
}

#[test]
fn limits_free_value_and_header() {
    let tmp = tempfile::tempdir().unwrap();
    let o = acre(tmp.path(), &["limits", "--variant", "free", "--rho", "4", "--grid", "-3:3:0.01", "--format", "csv,svg"]);
    assert!(o.status.success());
    let csv = read(&tmp.path().join("limits-free.csv"));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# acre 0.1.0 spec="));
    assert!(csv.contains("# variant=free(rho=4.0)"));
    assert!((value_at(&csv, "0.0") - 0.9545).abs() < 1e-4);
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 602);
    let svg = read(&tmp.path().join("limits-free.svg"));
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    assert!(!tmp.path().join("limits-free.json").exists());
}

#[test]
fn validate_passes_for_builtin() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("spec.cfg");
    std::fs::write(&cfg, "# induced Ginibre\nfamily=induced-ginibre\nn=64\nrho=2\n").unwrap();
    let o = acre(tmp.path(), &["validate", "--spec", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("validate.json"))).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn converge_softhard_is_strictly_decreasing() {
    let tmp = tempfile::tempdir().unwrap();
    let o = acre(tmp.path(), &["converge", "--bc", "softhard", "--rho", "4", "--ladder", "256,1024,4096"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("converge.json"))).unwrap();
    let e: Vec<f64> = v["sup_errors"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(e.len(), 3);
    assert!(e[0] > e[1] && e[1] > e[2]);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "n=4\nrho=2\nshape=round\nsize=9\n").unwrap();
    let o = acre(tmp.path(), &["validate", "--spec", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown keys: shape, size"));

    assert_eq!(acre(tmp.path(), &["limits", "--variant", "free"]).status.code(), Some(2));
    assert_eq!(acre(tmp.path(), &["limits", "--variant", "free", "--rho", "-1"]).status.code(), Some(2));
    assert_eq!(acre(tmp.path(), &["bogus"]).status.code(), Some(2));

    // a tolerance that cannot hold
    let o = acre(tmp.path(), &["ward", "--variant", "free", "--rho", "1", "--tol", "1e-12"]);
    assert_eq!(o.status.code(), Some(3));
    let summary: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(summary["passed"], false);
    let v: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("ward.json"))).unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn cache_dir_is_used_and_results_match() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let run = |out: &str| {
        Command::new(env!("CARGO_BIN_EXE_acre"))
            .env("ACRE_CACHE_DIR", &cache)
            .arg("--out")
            .arg(tmp.path().join(out))
            .args(["finite-n", "--n", "128", "--rho", "2", "--grid", "-1:1:0.1"])
            .status()
            .unwrap()
    };
    assert!(run("a").success());
    let cached: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(cached.len(), 1);
    assert!(run("b").success());
    assert_eq!(read(&tmp.path().join("a/finite-n.csv")), read(&tmp.path().join("b/finite-n.csv")));
}

#[test]
fn sample_is_seed_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |seed: &'static str| ["sample", "--n", "50", "--rho", "2", "--trials", "200", "--seed", seed, "--check"];
    assert!(acre(&tmp.path().join("a"), &args("5")).status.success());
    assert!(acre(&tmp.path().join("b"), &args("5")).status.success());
    assert!(acre(&tmp.path().join("c"), &args("6")).status.success());
    let a = read(&tmp.path().join("a/sample.csv"));
    assert_eq!(a, read(&tmp.path().join("b/sample.csv")));
    assert_ne!(a, read(&tmp.path().join("c/sample.csv")));
    assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 201);
}

#[test]
fn no_temporary_files_left_behind() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(acre(tmp.path(), &["extremes", "--bc", "softhard", "--rho", "4", "--ladder", "200", "--grid", "-3:0:0.5"])
        .status
        .success());
    let names: Vec<String> =
        std::fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert!(names.iter().all(|n| !n.starts_with('.')), "{names:?}");
    assert!(names.contains(&"extremes-n200.csv".to_string()));
}
