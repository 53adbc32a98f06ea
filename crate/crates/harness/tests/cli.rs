use std::path::Path;
use std::process::Command;

fn hydrostat(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hydrostat")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_norms_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "system = pe_h\nnx = 8\nny = 8\nnz = 8\nrecipe = heat_mode\nt_final = 0.01\n");
    let snap = dir.path().join("out.hsn");
    let out = hydrostat(&["run", "--config", &cfg, "--snapshot-out", snap.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("time,l2,h1\n"));
    assert_eq!(text.lines().count(), 12);
    let u = hydrostat::load_snapshot(&snap).unwrap();
    assert!((u.time - 0.01).abs() < 1e-15);
}

#[test]
fn unknown_config_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "nx = 8\ncolour = blue\n");
    let out = hydrostat(&["run", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn sweep_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.cfg",
        "mode = eps_delta_to_zero\neps_values = 0.2, 0.1, 0.05\nnx = 8\nny = 8\nnz = 8\nrecipe = heat_mode\nt_final = 0.05\n",
    );
    let out_dir = dir.path().join("out");
    let out = hydrostat(&["sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--plots"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
    assert!(csv.lines().nth(1).unwrap().starts_with("eps_delta_to_zero,0.05,0.05,,EH,"));
    assert!(out_dir.join("total.svg").exists());
    let fits = std::fs::read_to_string(out_dir.join("fits.csv")).unwrap();
    assert!(fits.lines().any(|l| l.starts_with(",total,")));

    let csv_path = out_dir.join("results.csv");
    let out = hydrostat(&["fit", "--csv", csv_path.to_str().unwrap(), "--norm", "total"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let slope: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    // Heat-mode differences scale like delta.
    assert!((slope - 1.0).abs() < 0.1, "{slope}");
    let out = hydrostat(&["fit", "--csv", csv_path.to_str().unwrap(), "--norm", "nothing"]);
    assert!(!out.status.success());
}

#[test]
fn verify_bootstrap_suite_exits_zero() {
    let out = hydrostat(&["verify", "--suite", "bootstrap"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
    assert!(!hydrostat(&["verify", "--suite", "nonsense"]).status.success());
}
