use std::path::Path;
use std::process::Command;

use caplab_cli::anchors::lookup;
use caplab_cli::commands::read_capsules;
use caplab_cli::config::RunConfig;
use caplab_cli::{run_construct, run_cover, run_verify, Status};

fn caplab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_caplab"))
        .args(args)
        .output()
        .expect("spawn caplab")
}

fn quick_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        out: out.to_path_buf(),
        ..RunConfig::default()
    };
    cfg.verify.quick = true;
    cfg
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn quick_verify_is_deterministic_and_anchored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let a = run_verify(&cfg).unwrap();
    let mut ja = json(&dir.path().join("verify.json"));
    let csv_a = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    let b = run_verify(&cfg).unwrap();
    let mut jb = json(&dir.path().join("verify.json"));
    let csv_b = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    ja.as_object_mut().unwrap().remove("timestamp");
    jb.as_object_mut().unwrap().remove("timestamp");
    assert_eq!(ja, jb);
    assert_eq!(csv_a, csv_b);
    assert_eq!(a.summary.failed, 0, "{:#?}", a.failures());
    assert_eq!(a.exit_code(), 0);
    for r in a.records.iter().chain(&b.records) {
        assert!(lookup(&r.anchor).is_some(), "orphan anchor {}", r.anchor);
    }
    // the flagged claims stay visible
    for name in ["mixed_norm_claim", "stream_moment_constant_claim"] {
        let r = a.records.iter().find(|r| r.name == name).unwrap();
        assert_eq!(r.status, Status::Recorded);
        assert!(r.note.as_deref().unwrap_or("").starts_with("flagged"));
    }
}

#[test]
fn impossible_tolerance_fails_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "[tolerances]\npde_residual = 1e-20\n[verify]\nquick = true\n").unwrap();
    let out = dir.path().join("out");
    let o = caplab(&[
        "verify",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL  pde_residual"), "{stdout}");
    let report = json(&out.join("verify.json"));
    let failed: Vec<_> = report["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["status"] == "fail")
        .map(|r| r["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(failed, ["pde_residual"]);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "sead = 3\n").unwrap();
    let o = caplab(&["kernel", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(101));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sead"));
}

#[test]
fn shear_origin_is_round_with_closed_form_radius() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    std::fs::write(&pts, "x,y,z\n0,0,0\n").unwrap();
    let mut cfg = quick_config(dir.path());
    cfg.field = caplab_cli::config::FieldSpec::from_arg("shear");
    cfg.points.csv = Some(pts);
    let report = run_construct(&cfg).unwrap();
    assert_eq!(report.summary.failed, 0);
    let caps = json(&dir.path().join("capsules.json"));
    let c = &caps[0]["capsule"];
    assert_eq!(c["classification"], "round");
    assert_eq!(c["status"], "converged");
    let r = c["capsule"]["R"].as_f64().unwrap();
    assert!((r - cfg.capsule.epsilon0.sqrt()).abs() < 1e-4, "{r}");
}

#[test]
fn constant_field_has_no_root() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    cfg.field = caplab_cli::config::FieldSpec::from_arg("constant");
    cfg.points.lattice.n = [2, 1, 1];
    let report = run_construct(&cfg).unwrap();
    assert_eq!(report.exit_code(), 0);
    let caps = json(&dir.path().join("capsules.json"));
    for entry in caps.as_array().unwrap() {
        assert_eq!(entry["capsule"]["status"], "unbounded");
    }
}

#[test]
fn construct_then_cover_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    run_construct(&cfg).unwrap();
    let capsules = dir.path().join("capsules.json");
    assert_eq!(read_capsules(&capsules).unwrap().len(), 27);
    let report = run_cover(&cfg, &capsules).unwrap();
    assert_eq!(report.summary.failed, 0, "{:#?}", report.records);
    let sel = json(&dir.path().join("selection.json"));
    assert!(!sel["selected"].as_array().unwrap().is_empty());
}

#[test]
fn identical_capsules_select_one() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    let one = r#"{"center":[0,0,0],"R":1.0,"L":3.0,"e":[0,0,1]}"#;
    std::fs::write(&fam, format!("[{one},{one},{one}]")).unwrap();
    let cfg = quick_config(dir.path());
    let report = run_cover(&cfg, &fam).unwrap();
    assert_eq!(report.summary.failed, 0);
    let sel = json(&dir.path().join("selection.json"));
    assert_eq!(sel["selected"].as_array().unwrap().len(), 1);
    assert!((sel["empirical_k"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn disjoint_capsules_all_selected() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    let items: Vec<String> = (0..4)
        .map(|i| format!(r#"{{"center":[{},0,0],"R":0.5,"L":0.5,"e":[1,0,0]}}"#, 3 * i))
        .collect();
    std::fs::write(&fam, format!("[{}]", items.join(","))).unwrap();
    let cfg = quick_config(dir.path());
    let report = run_cover(&cfg, &fam).unwrap();
    assert_eq!(report.summary.failed, 0);
    let sel = json(&dir.path().join("selection.json"));
    assert_eq!(sel["selected"].as_array().unwrap().len(), 4);
}

#[test]
fn malformed_family_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    std::fs::write(&fam, "[\n  {\"center\": [0,0,0],\n  \"R\": }\n]").unwrap();
    let err = read_capsules(&fam).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("line 3"), "{msg}");
}

#[test]
fn functional_and_kernel_subcommands_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = caplab(&["functional", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let report = json(&dir.path().join("functional.json"));
    let t = &report["records"][0]["values"];
    assert_eq!(t["alpha_crit"], "1/9");
    assert_eq!(t["beta_crit"], "29/193");
    assert!(dir.path().join("competitors.csv").exists());

    let o = caplab(&["kernel", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let table = std::fs::read_to_string(dir.path().join("kernel_table.csv")).unwrap();
    // header + 3 speeds × 3 offsets × 41 samples
    assert_eq!(table.lines().count(), 1 + 3 * 3 * 41);
}
