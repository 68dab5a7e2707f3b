use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chordarc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_disk_is_chord_arc() {
    let o = run(&["classify", "--spec", "disk", "--h", "0.005"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["verdicts"]["chord_arc"]["status"], "pass");
    assert_eq!(report["provenance"]["schema_version"], 1);
}

#[test]
fn failed_assertion_exits_3() {
    let o = run(&["classify", "--spec", "cantor:4", "--assert", "ntachk"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nta: fail"));
}

#[test]
fn passing_assertion_exits_0() {
    let o = run(&["classify", "--spec", "halfspace", "--h", "0.01", "--assert", "adr,uniform"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn beta_on_the_line_flags_nothing() {
    let o = run(&["beta", "--spec", "line", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,ell,x1,x2,bbeta,flagged"));
    let mut tested = 0;
    for row in lines {
        let flag = row.rsplit(',').next().unwrap();
        assert!(flag == "0" || flag == "untested", "{row}");
        tested += usize::from(flag == "0");
    }
    assert!(tested > 0);
}

#[test]
fn usage_errors_exit_64() {
    for args in [&["bogus"][..], &["classify", "--spec", "disk", "--nope"], &["classify"], &["classify", "--assert", "foo", "--spec", "disk"]] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(64), "{args:?}");
    }
}

#[test]
fn precondition_errors_exit_2() {
    for args in [
        &["generate", "--spec", "disk", "--h", "0.5"][..],
        &["corkscrew", "--spec", "disk", "--x", "1,0", "--r", "0.5", "--step", "0.1"],
        &["energy", "--spec", "disk", "--x", "1,0", "--r", "0.5", "--kappa", "2"],
        &["pack", "--spec", "disk", "--c0", "0.2"],
        &["report", "/nonexistent/report.json"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn generate_then_classify_a_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("disk.cloud");
    let o = run(&["generate", "--spec", "disk", "--h", "0.01", "--out", cloud.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(&cloud).unwrap().starts_with("dim=2 h=0.01\n"));
    let o = run(&["classify", "--cloud", cloud.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["verdicts"]["adr"]["status"], "pass");
    assert_eq!(report["verdicts"]["uniform"]["status"], "untested");
    assert!(report["corkscrews"].is_null());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# disk run\nspec = disk\nh = 0.01\nseed = 7\nur_tail = 0.5\n").unwrap();
    let o = run(&["classify", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["provenance"]["h"], 0.01);
    assert_eq!(report["provenance"]["seed"], 3);
    assert_eq!(report["config"]["thresholds"]["ur_tail"], 0.5);

    fs::write(&cfg, "spec = disk\ncolour = blue\n").unwrap();
    assert_eq!(run(&["classify", "--config", cfg.to_str().unwrap()]).status.code(), Some(64));
}

#[test]
fn curve_writes_polyline_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.txt");
    let o = run(&["curve", "--spec", "halfspace", "--x", "0,0.5", "--y", "0.1,0.02", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let poly = fs::read_to_string(&out).unwrap();
    assert!(poly.starts_with("dim=2 h=0.03125\n"));
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("c.txt.json")).unwrap()).unwrap();
    let keys: Vec<&String> = side.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["C_meas", "c_meas", "case_trace"]);
}

#[test]
fn corkscrew_reports_certificates() {
    let o = run(&["--json", "corkscrew", "--spec", "halfspace", "--x", "0,0", "--r", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let certs: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for c in certs.as_array().unwrap() {
        assert!((c["cert"]["constant"].as_f64().unwrap() - 0.5).abs() < 1e-9, "{c}");
    }
}

#[test]
fn report_digest_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = run(&["--threads", "1", "classify", "--spec", "lipschitz", "--h", "0.01", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("ChordArc"));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let o = run(&["report", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("lipschitz"));
    let o = run(&["--json", "report", a.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["nta"]["status"].is_string());
}

#[test]
fn energy_and_pack_outputs() {
    let o = run(&["--json", "energy", "--spec", "disk", "--h", "0.01", "--x", "1,0", "--x", "-1,0", "--r", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let (e0, e1) = (rows[0]["value"].as_f64().unwrap(), rows[1]["value"].as_f64().unwrap());
    assert!((e0 / e1 - 1.0).abs() < 0.02);

    let o = run(&["--json", "pack", "--spec", "halfspace", "--h", "0.01", "--c0", "0.01"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows[0]["max"], 0.0);
}
