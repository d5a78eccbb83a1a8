use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dcat-sim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn summary(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("summary on stdout")
}

fn dir_arg(d: &Path) -> String {
    d.to_str().unwrap().to_string()
}

#[test]
fn list_names_every_experiment() {
    let out = run(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["fig1", "fig2", "fig3", "fig4", "figA1", "custom"] {
        assert!(text.contains(id), "{id} missing from list");
    }
}

#[test]
fn detuning_at_045_is_worse_than_04() {
    let tmp = tempfile::tempdir().unwrap();
    let a = summary(&run(&[
        "run",
        "custom",
        "--alpha",
        "1",
        "--R",
        "0.4",
        "--out",
        &dir_arg(&tmp.path().join("a")),
    ]));
    let b = summary(&run(&[
        "run",
        "custom",
        "--alpha",
        "1",
        "--R",
        "0.45",
        "--out",
        &dir_arg(&tmp.path().join("b")),
    ]));
    let ea = a["x_gate"]["error"].as_f64().unwrap();
    let eb = b["x_gate"]["error"].as_f64().unwrap();
    assert!(eb > 3.0 * ea, "{eb} vs {ea}");
}

#[test]
fn z_gate_row_at_r1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "fig3",
        "--r_grid",
        "1",
        "--trace_r",
        "1",
        "--grid_points",
        "21",
        "--out",
        &dir_arg(tmp.path()),
    ]);
    let s = summary(&out);
    let row = &s["z_gates"][0];
    let t_pi = row["t_pi_s"].as_f64().unwrap();
    assert!((6.4e-9..=6.5e-9).contains(&t_pi), "{t_pi}");
    assert!(row["fidelity"].as_f64().unwrap() > 0.995);
}

#[test]
fn speed_scan_crossings() {
    let tmp = tempfile::tempdir().unwrap();
    let s = summary(&run(&[
        "run",
        "figA1",
        "--alpha",
        "1.63",
        "--out",
        &dir_arg(tmp.path()),
    ]));
    let zc: Vec<f64> = s["scans"][0]["zero_crossings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(zc.len(), 3, "{zc:?}");
    for (z, want) in zc.iter().zip([2.0, 4.0, 6.0]) {
        assert!((z - want).abs() < 0.05, "{zc:?}");
    }
    assert!(tmp.path().join("speed_alpha1.63.csv").exists());
}

#[test]
fn validation_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = dir_arg(tmp.path());
    for args in [
        vec!["run", "fig9"],
        vec!["run", "custom", "--bogus", "1"],
        vec!["run", "custom", "--alpha", "abc"],
        vec!["run", "custom", "--alpha"],
        vec!["run", "custom", "--alpha", "-1"],
        vec!["run", "fig4", "--t_grid", "-1e-8"],
        vec!["run", "custom", "--kerr_convention", "weird"],
    ] {
        let mut a = args.clone();
        a.extend(["--out", &out_dir]);
        let out = run(&a);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_file_errors_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "kerr_mhz = 6.7\n[custom]\nalpha = 1\nnot_a_key = 2\n").unwrap();
    let out = run(&[
        "run",
        "custom",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &dir_arg(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run.cfg:4") && err.contains("not_a_key"), "{err}");
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        "# shared\nkerr_mhz = 6.7\n[custom]\nalpha = 1\nr = 0.5\n[fig3]\nalpha = 2\n",
    )
    .unwrap();
    let s = summary(&run(&[
        "run",
        "custom",
        "--config",
        cfg.to_str().unwrap(),
        "--r",
        "0.4",
        "--out",
        &dir_arg(tmp.path()),
    ]));
    assert_eq!(s["r"].as_f64(), Some(0.4));
    assert_eq!(s["alpha"].as_f64(), Some(1.0));
}

#[test]
fn simulation_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["run", "custom", "--dim", "6", "--out", &dir_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!tmp.path().join("manifest.json").exists());
}

#[test]
fn manifest_checksums_and_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    summary(&run(&[
        "run",
        "fig2",
        "--r_grid",
        "0.4,0.5",
        "--t_points",
        "41",
        "--trace_r",
        "0.4",
        "--out",
        &dir_arg(&first),
    ]));
    let manifest: Value = serde_json::from_slice(&fs::read(first.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let name = f["name"].as_str().unwrap();
        let bytes = fs::read(first.join(name)).unwrap();
        use sha2::Digest;
        let digest: String = sha2::Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        assert_eq!(f["sha256"].as_str().unwrap(), digest, "{name}");
    }
    assert_eq!(manifest["config"]["r_grid"], "0.4,0.5");

    let m = first.join("manifest.json");
    summary(&run(&[
        "run",
        "fig2",
        "--config",
        m.to_str().unwrap(),
        "--out",
        &dir_arg(&second),
    ]));
    for f in files {
        let name = f["name"].as_str().unwrap();
        assert_eq!(
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
    // a manifest from another experiment is refused
    let out = run(&[
        "run",
        "custom",
        "--config",
        m.to_str().unwrap(),
        "--out",
        &dir_arg(&second),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn headers_carry_units() {
    let tmp = tempfile::tempdir().unwrap();
    summary(&run(&[
        "run",
        "fig1",
        "--grid_points",
        "11",
        "--out",
        &dir_arg(tmp.path()),
    ]));
    summary(&run(&[
        "run",
        "fig4",
        "--beta_c",
        "1",
        "--beta_t",
        "1",
        "--t_grid",
        "1e-8",
        "--dim_c",
        "18",
        "--dim_t",
        "18",
        "--trace_samples",
        "200",
        "--out",
        &dir_arg(&tmp.path().join("cnot")),
    ]));
    let mut seen = 0;
    for dir in [tmp.path().to_path_buf(), tmp.path().join("cnot")] {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|x| x == "csv") {
                let text = fs::read_to_string(&path).unwrap();
                let header = text.lines().next().unwrap();
                for field in header.split(',') {
                    let unit = field.rsplit_once(" [").map(|(_, u)| u.trim_end_matches(']'));
                    assert!(
                        matches!(unit, Some("s" | "dimensionless" | "rad/s")),
                        "{}: {field}",
                        path.display()
                    );
                }
                seen += 1;
            }
        }
    }
    assert!(seen >= 6);
}

#[test]
fn csv_only_skips_summary_file() {
    let tmp = tempfile::tempdir().unwrap();
    summary(&run(&[
        "run",
        "custom",
        "--formats",
        "csv",
        "--out",
        &dir_arg(tmp.path()),
    ]));
    assert!(tmp.path().join("x_trace.csv").exists());
    assert!(!tmp.path().join("summary.json").exists());
    assert!(tmp.path().join("manifest.json").exists());
}

#[test]
fn thread_cap_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "custom", "--out", &dir_arg(tmp.path())])
        .env("DCAT_SIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["run", "custom", "--out", &dir_arg(tmp.path())])
        .env("DCAT_SIM_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
}
