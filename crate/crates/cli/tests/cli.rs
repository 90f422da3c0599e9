use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn msc(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_msc"));
    cmd.args(args).env_remove("MSC_OUTPUT_DIR");
    if let Some(d) = out_dir {
        cmd.env("MSC_OUTPUT_DIR", d);
    }
    cmd.output().expect("spawn msc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const ENSEMBLE: &str = r#"
mode = "ensemble"
seed = 11

[model]
kind = "qp"
l1 = 3
l2 = 3

[rates]
p = 0.1

[temperature]
nishimori = true

[mc]
sweeps = 400
thermalization = 100
disorder_samples = 3
bootstrap_resamples = 50
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn lattice_info_matches_counts_and_is_stable() {
    let a = msc(&["lattice", "info", "--l1", "2", "--l2", "2"], None);
    assert!(a.status.success());
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["N"], 24);
    assert_eq!(v["P"], 12);
    assert_eq!(v["edges"], 36);
    assert_eq!(v["rank"], 10);
    assert_eq!(v["degeneracy"], 4);
    assert_eq!(v["edges_per_color"]["B"], 12);
    let b = msc(&["lattice", "info", "--l1", "2", "--l2", "2"], None);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn lattice_info_rejects_small_sizes() {
    let o = msc(&["lattice", "info", "--l1", "1", "--l2", "2"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("minimum size"));
}

#[test]
fn oracle_verify_passing_models() {
    let o = msc(&["oracle", "verify", "--models", "qp,bilinear-dual-A,bilinear-dual-B,bilinear-dual-C"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() > 20);
}

#[test]
fn oracle_verify_reports_corruption() {
    let o = msc(&["oracle", "verify", "--models", "qp", "--corrupt-term", "3"], None);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], false);
    let f = &v["first_failure"];
    assert!(f["name"].as_str().unwrap().starts_with("mapping-qp"));
    assert!(f["mapping"]["offending_configuration"].is_array());
}

#[test]
fn oracle_verify_refuses_large_lattices() {
    let o = msc(&["oracle", "verify", "--size", "3x3"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bound"), "{}", stderr(&o));
    let o = msc(&["oracle", "verify", "--size", "three"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn noise_and_model_are_deterministic() {
    let args = ["noise", "sample", "--l1", "3", "--l2", "2", "--p-qp", "0.2", "--p-b", "0.1", "--seed", "5"];
    let a = msc(&args, None);
    assert!(a.status.success());
    assert_eq!(a.stdout, msc(&args, None).stdout);
    let m = ["model", "build", "--l1", "2", "--l2", "2", "--kind", "gauge-qp", "--rounds", "2", "--p", "0.1", "--m", "0.1", "--seed", "1"];
    let o = msc(&m, None);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "gauge-qp");
    assert_eq!(v["V"], 2 * (12 + 24));
}

#[test]
fn run_emits_all_artifacts_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", ENSEMBLE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = msc(&["run", "--config", &cfg], Some(d));
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["ensemble.json", "ensemble.csv", "ensemble.svg"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f} differs");
        let text = String::from_utf8(x).unwrap();
        assert!(text.contains("config_hash") && text.contains(env!("CARGO_PKG_VERSION")), "{f} lacks provenance");
        assert!(text.contains("seed"), "{f} lacks the seed");
    }
    let v: Value = serde_json::from_str(&std::fs::read_to_string(a.join("ensemble.json")).unwrap()).unwrap();
    assert_eq!(v["provenance"]["seed"], 11);
    assert_eq!(v["config"]["model"]["kind"], "qp");
    assert_eq!(v["result"]["samples"], 3);
}

#[test]
fn resume_after_halt_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = ENSEMBLE.replace("bootstrap_resamples = 50", "bootstrap_resamples = 50\ncheckpoint_interval = 100");
    let cfg = write_config(dir.path(), "run.toml", &text);
    let (full, part) = (dir.path().join("full"), dir.path().join("part"));
    assert!(msc(&["run", "--config", &cfg], Some(&full)).status.success());

    let o = msc(&["run", "--config", &cfg, "--halt-at-sweep", "250"], Some(&part));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!part.join("ensemble.json").exists());
    let ck = part.join("checkpoint.json");
    assert!(ck.exists());
    let o = msc(&["run", "--config", &cfg, "--resume", ck.to_str().unwrap()], Some(&part));
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(full.join("ensemble.json")).unwrap(), std::fs::read(part.join("ensemble.json")).unwrap());
}

#[test]
fn resume_refuses_foreign_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let text = ENSEMBLE.replace("bootstrap_resamples = 50", "bootstrap_resamples = 50\ncheckpoint_interval = 100");
    let cfg = write_config(dir.path(), "run.toml", &text);
    let out = dir.path().join("o");
    assert!(msc(&["run", "--config", &cfg, "--halt-at-sweep", "200"], Some(&out)).status.success());
    let ck = out.join("checkpoint.json");

    let other = write_config(dir.path(), "other.toml", &text.replace("seed = 11", "seed = 12"));
    let o = msc(&["run", "--config", &other, "--resume", ck.to_str().unwrap()], Some(&out));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("checkpoint"));

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&ck).unwrap()).unwrap();
    v["checkpoint"]["version"] = Value::from(999);
    std::fs::write(&ck, v.to_string()).unwrap();
    let o = msc(&["run", "--config", &cfg, "--resume", ck.to_str().unwrap()], Some(&out));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("version"), "{}", stderr(&o));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &ENSEMBLE.replace("sweeps = 400", "sweeps = 400\nsweps = 1"));
    let o = msc(&["run", "--config", &cfg], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 18") && e.contains("sweps"), "{e}");

    let cfg = write_config(dir.path(), "bad2.toml", &ENSEMBLE.replace("l1 = 3", "l1 = \"three\""));
    let o = msc(&["run", "--config", &cfg], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));
}

#[test]
fn output_dir_comes_from_the_environment_first() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("output_dir = {:?}\n{ENSEMBLE}", dir.path().join("from-config").to_str().unwrap());
    let cfg = write_config(dir.path(), "run.toml", &text);
    let env_dir = dir.path().join("from-env");
    assert!(msc(&["run", "--config", &cfg], Some(&env_dir)).status.success());
    assert!(env_dir.join("ensemble.json").exists());
    assert!(!dir.path().join("from-config").exists());
    assert!(msc(&["run", "--config", &cfg], None).status.success());
    assert!(dir.path().join("from-config").join("ensemble.json").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", ENSEMBLE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(msc(&["--threads", "1", "run", "--config", &cfg], Some(&a)).status.success());
    assert!(msc(&["--threads", "3", "run", "--config", &cfg], Some(&b)).status.success());
    assert_eq!(std::fs::read(a.join("ensemble.json")).unwrap(), std::fs::read(b.join("ensemble.json")).unwrap());
}

#[test]
fn scan_mode_writes_threshold_and_reuses_cache() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
mode = "scan"
seed = 2
cache_dir = {:?}

[model]
kind = "qp"
sizes = [2, 3]

[scan]
variable = "p"
values = [0.05, 0.25, 0.4]

[temperature]
nishimori = true

[mc]
sweeps = 300
thermalization = 100
disorder_samples = 4
bootstrap_resamples = 50
"#,
        dir.path().join("cache").to_str().unwrap()
    );
    let cfg = write_config(dir.path(), "scan.toml", &text);
    let out = dir.path().join("out");
    let o = msc(&["run", "--config", &cfg], Some(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read_to_string(out.join("scan.json")).unwrap();
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["scan"]["computed"], 6);
    assert!(v["threshold"]["crossing"]["status"].is_string());
    assert!(std::fs::read_to_string(out.join("scan.svg")).unwrap().starts_with("<svg"));
    assert!(msc(&["run", "--config", &cfg], Some(&out)).status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join("scan.json")).unwrap()).unwrap();
    assert_eq!(v["scan"]["cached"], 6);
}

#[test]
fn plot_from_csv_matches_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let dir = tempfile::tempdir().unwrap();
    for (csv, kind, svg) in [("scan.csv", "rate", "scan.svg"), ("phase.csv", "phase", "phase.svg")] {
        let out = dir.path().join(svg);
        let o = msc(
            &["plot", "--csv", golden.join(csv).to_str().unwrap(), "--kind", kind, "--out", out.to_str().unwrap()],
            None,
        );
        assert!(o.status.success(), "{}", stderr(&o));
        let got = std::fs::read_to_string(&out).unwrap();
        let want = std::fs::read_to_string(golden.join(svg)).unwrap();
        assert_eq!(got, want, "{svg} drifted from its golden file");
    }
}
