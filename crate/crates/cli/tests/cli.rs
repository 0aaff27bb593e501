use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn steklov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steklov")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn mesh_round_trips_through_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = steklov(&["mesh", "--shape", "annulus", "--h", "0.1", "--out", d]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2 boundary components"));
    let mesh = dir.path().join("mesh.msh");
    let o = steklov(&["spectrum", "--mesh", mesh.to_str().unwrap(), "--n-eigs", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("# spectrum") && out.contains("k,sigma,cluster_start,cluster_size"));
    assert!(!out.contains("disk_oracle"));
}

#[test]
fn disk_spectrum_checks_the_oracle() {
    let o = steklov(&["spectrum", "--h", "0.05"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[pass] disk_oracle_max_rel_err"));
}

#[test]
fn prescribe_prints_a_readable_graph() {
    let dir = tempfile::tempdir().unwrap();
    let o = steklov(&["prescribe", "--targets", "1,2,3", "--seed", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("graph.txt")).unwrap();
    assert!(text.starts_with("steklov-graph v1\nvertices 4\nedges 6\n"));

    let o = steklov(&["thicken", "--graph", dir.path().join("graph.txt").to_str().unwrap(), "--eps", "0.05"]);
    // K_4 has no embedding with all vertices on the outer face
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outerplanar"));
}

#[test]
fn thicken_reports_graph_ratios() {
    let o = steklov(&["thicken", "--eps", "0.05", "--eigs", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let ratios: Vec<f64> =
        out.lines().skip(1).filter_map(|l| l.split(',').nth(3).and_then(|r| r.parse().ok())).collect();
    assert_eq!(ratios.len(), 2);
    assert!((ratios[0] - ratios[1]).abs() < 1e-3 * ratios[0]);
}

#[test]
fn run_writes_the_output_tree_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("06-prescriber-batch.toml");
    let o = steklov(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "99",
        "--jobs",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("tables/prescriber.csv").is_file());
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(json.contains("\"seed\": 99"));
}

#[test]
fn audit_needs_a_seed_and_fails_loudly_on_bad_input() {
    let o = steklov(&["audit", "nodal", "--count", "2", "--k-max", "3", "--h", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let o = steklov(&["audit", "nodal", "--count", "2", "--k-max", "3", "--h", "0.1", "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("[pass] nodal_courant"));

    let o = steklov(&["run"]);
    assert_eq!(o.status.code(), Some(2));
    let wrong = configs().join("01-disk-spectrum.toml");
    let o = steklov(&["audit", "nodal", "--config", wrong.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_checks_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    std::fs::write(&cfg, "kind = \"spectrum\"\n[params]\noracle_threshold = 1e-12\ndomain = { shape = \"disk\", radius = 1.0, h = 0.1 }\n").unwrap();
    let o = steklov(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[FAIL] disk_oracle_max_rel_err"));
}
