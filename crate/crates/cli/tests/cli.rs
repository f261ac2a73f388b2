use std::path::Path;
use std::process::{Command, Output};

fn tubehom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubehom")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_CYLINDER: &str = "[curve]\nkind = \"cylinder\"\n[grid]\nns = 32\nnw = 41\n[study]\nepsilons = [0.4, 0.2, 0.1, 0.05]\n";

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[curve]\nkind = \"elipse\"\n[study]\nepsilons = [0.0]\n");
    let out = tubehom(&["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("curve.kind") && err.contains("ε must be in (0,1]"), "{err}");
    assert_eq!(tubehom(&["sweep", "--config", "/nonexistent.toml"]).status.code(), Some(2));
}

#[test]
fn slcheck_passes_and_rejects_bad_orders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let out_dir = dir.path().join("out");
    let out = tubehom(&["slcheck", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("slcheck.json")).unwrap()).unwrap();
    assert!(report.is_object());
    assert!(out_dir.join("manifest.json").exists());
    assert_eq!(tubehom(&["slcheck", "--config", &cfg, "--k", "9"]).status.code(), Some(2));
    let one = tubehom(&["slcheck", "--config", &cfg, "--k", "3", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(one.status.code(), Some(0));
}

#[test]
fn verify_passes_on_the_cylinder() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cyl.toml", SMALL_CYLINDER);
    let out_dir = dir.path().join("v");
    let out = tubehom(&["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}{}", String::from_utf8_lossy(&out.stderr));
    assert!(!text.contains("FAIL"), "{text}");
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], true);
    assert_eq!(manifest["semigroup"], "exp(-(t/2) Delta)");
}

#[test]
fn sweep_then_report_writes_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cyl.toml", SMALL_CYLINDER);
    let out_dir = dir.path().join("s");
    let o = out_dir.to_str().unwrap();
    assert_eq!(tubehom(&["sweep", "--config", &cfg, "--out", o]).status.code(), Some(0));
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "epsilon,t,l2_error,sobolev2_error,sobolev4_error,rate_flag,cell_status");
    for l in lines {
        let err: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert!(err < 1e-8, "{l}");
    }
    assert_eq!(tubehom(&["report", "--config", &cfg, "--out", o]).status.code(), Some(0));
    for name in ["l2_error", "sobolev2_error", "sobolev4_error"] {
        let svg = std::fs::read_to_string(out_dir.join("plots").join(format!("{name}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
    }
}

#[test]
fn report_without_sweep_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let out = tubehom(&["report", "--config", &cfg, "--out", dir.path().join("none").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn spectrum_dumps_the_operator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cyl.toml", "[curve]\nkind = \"cylinder\"\n[grid]\nns = 16\nnw = 11\n");
    let mtx = dir.path().join("d.mtx");
    let out_dir = dir.path().join("sp");
    let out = tubehom(&["spectrum", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--dump-operator", mtx.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&mtx).unwrap().starts_with("%%MatrixMarket"));
    let csv = std::fs::read_to_string(out_dir.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("epsilon,index,eigenvalue,residual,band,horizontal_part"));

    let big = write(dir.path(), "big.toml", "[curve]\nkind = \"cylinder\"\n");
    let out = tubehom(&["spectrum", "--config", &big, "--out", out_dir.to_str().unwrap(), "--dump-operator", mtx.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
