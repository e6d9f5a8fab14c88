use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dcqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcqc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = dcqc(args);
    assert!(
        out.status.success(),
        "dcqc {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn gen_instance_writes_all_pairs_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.json");
    let b = tmp.path().join("b.json");
    let msg = ok(&["gen-instance", "-n", "10", "--seed", "1", "--out", a.to_str().unwrap()]);
    assert!(msg.contains("45 couplings"), "{msg}");
    ok(&["gen-instance", "-n", "10", "--seed", "1", "--out", b.to_str().unwrap()]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let v: serde_json::Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["couplings"].as_array().unwrap().len(), 45);
}

#[test]
fn gen_instance_into_directory() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["gen-instance", "-n", "4", "-s", "7", "--out", tmp.path().to_str().unwrap()]);
    assert!(tmp.path().join("sk_n4_seed7.json").is_file());
}

#[test]
fn single_qubit_instance_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dcqc(&["gen-instance", "-n", "1", "--seed", "1", "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n"));
}

const RUN_CONFIG: &str = r#"{
  "instance": {"n": 6, "seed": 3},
  "ansatz": {"family": "dcqc", "mode": "full", "p": 1},
  "optimizers": [{"kind": "spsa_bfgs", "a": 0.025, "spsa_c": 0.5, "b": 0}],
  "inits": 10,
  "budget": 120
}"#;

#[test]
fn run_writes_one_record_per_init_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), RUN_CONFIG);
    let o1 = tmp.path().join("o1");
    let o2 = tmp.path().join("o2");
    ok(&["run", "--config", &cfg, "--out", o1.to_str().unwrap()]);
    ok(&["run", "--config", &cfg, "--out", o2.to_str().unwrap(), "--threads", "2"]);

    let records: Vec<_> = fs::read_dir(o1.join("records/spsa_bfgs")).unwrap().collect();
    assert_eq!(records.len(), 10);
    for f in ["summary.json", "summary.csv", "config.json", "records/manifest.json"] {
        assert!(o1.join(f).is_file(), "{f} missing");
    }
    assert_eq!(files_under(&o1), files_under(&o2));
}

#[test]
fn compare_emits_traces_and_ranking() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
          "instance": {"n": 5, "seed": 2},
          "optimizers": [{"kind": "ps_adam", "eta": 0.2}, {"kind": "spsa_sgd"}, {"kind": "cobyla"}, {"kind": "cobyla", "rho_i": 0.5}],
          "inits": 3,
          "budget": 200
        }"#,
    );
    let out = tmp.path().join("cmp");
    let stdout = ok(&["compare", "--config", &cfg, "--out", out.to_str().unwrap(), "--accounting", "true"]);
    assert!(stdout.contains("ranking:"));
    assert!(out.join("records/cobyla_2").is_dir());
    let traces = fs::read_to_string(out.join("traces.csv")).unwrap();
    assert!(traces.starts_with("label,evaluations,mean_energy,std_energy,runs\n"));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["ranking"].as_array().unwrap().len(), 4);
    let cfg_out: serde_json::Value = serde_json::from_slice(&fs::read(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg_out["accounting"], "true");
}

#[test]
fn config_errors_name_their_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{\n  \"instance\": {\"n\": 6, \"seed\": 1},\n  \"inits\": \"ten\"\n}");
    let out = dcqc(&["run", "--config", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("inits") && err.contains("line 3"), "{err}");

    let cfg = write_config(
        tmp.path(),
        r#"{"instance": {"file": "missing.json"}, "inits": 0, "optimizers": [{"kind": "spsa_sgd"}]}"#,
    );
    let out = dcqc(&["run", "--config", &cfg]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("instance.file") && err.contains("inits"), "{err}");
}

#[test]
fn scaling_over_capacity_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"scaling": {"n": [4, 31]}, "optimizers": [{"kind": "spsa_bfgs"}], "inits": 1, "budget": 30}"#,
    );
    let out = dcqc(&["scaling", "--config", &cfg, "--out", tmp.path().join("s").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("30"));
}

#[test]
fn scaling_rows_per_n_and_ansatz() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"scaling": {"n": [4, 5]}, "optimizers": [{"kind": "spsa_bfgs", "a": 0.05, "spsa_c": 0.5, "b": 0}], "inits": 2, "budget": 60}"#,
    );
    let out = tmp.path().join("s");
    ok(&["scaling", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let csv = fs::read_to_string(out.join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(out.join("records/n04/dcqc_p1/spsa_bfgs/init_01.jsonl").is_file());
}

#[test]
fn landscape_from_a_run_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), RUN_CONFIG);
    let run = tmp.path().join("run");
    ok(&["run", "--config", &cfg, "--out", run.to_str().unwrap()]);
    let rec = run.join("records/spsa_bfgs/init_00.jsonl");
    let out = tmp.path().join("land");
    ok(&["landscape", rec.to_str().unwrap(), "--resolution", "7", "--out", out.to_str().unwrap()]);

    let grid = fs::read_to_string(out.join("landscape.csv")).unwrap();
    assert_eq!(grid.lines().next(), Some("pc1,pc2,energy"));
    assert_eq!(grid.lines().count(), 1 + 49);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let record_lines = fs::read_to_string(&rec).unwrap().lines().count();
    assert_eq!(traj.lines().count(), 1 + record_lines - 2);
    let pca: serde_json::Value = serde_json::from_slice(&fs::read(out.join("pca.json")).unwrap()).unwrap();
    let top2 = pca["explained_variance_top2"].as_f64().unwrap();
    assert!((0.0..=1.0 + 1e-12).contains(&top2));
}

#[test]
fn landscape_rejects_short_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dcqc(&["landscape", tmp.path().join("nope.jsonl").to_str().unwrap()]);
    assert!(!out.status.success());
}
