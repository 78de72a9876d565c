use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn quatsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quatsync")).args(args).output().expect("spawn quatsync")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn example1_config(dir: &Path) -> std::path::PathBuf {
    let out = quatsync(&["example1", "--out", dir.to_str().unwrap(), "--horizon", "0.05"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("example1.json")
}

fn edit_json(path: &Path, edit: impl FnOnce(&mut serde_json::Value)) {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    edit(&mut v);
    fs::write(path, serde_json::to_string(&v).unwrap()).unwrap();
}

#[test]
fn example1_reports_settling_times_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example1_config(dir.path());
    assert!(cfg.exists());
    assert!(dir.path().join("example1_controlled.csv").exists());
    assert!(dir.path().join("report.json").exists());
    let out = quatsync(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("T1 = 1.491"), "{text}");
    assert!(text.contains("T2 = 2.628"), "{text}");
}

#[test]
fn check_names_violated_condition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example1_config(dir.path());
    edit_json(&cfg, |v| v["controller"]["lambda2"][0] = 0.0.into());
    let out = quatsync(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("condition (iv)"));
}

#[test]
fn run_writes_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example1_config(dir.path());
    let out_dir = dir.path().join("run");
    let out = quatsync(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--horizon", "0.01", "--report"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,V,u_norm,x1_w,"));
    assert_eq!(csv.lines().count(), 1 + 101);
    assert!(out_dir.join("report.json").exists());
}

#[test]
fn sweep_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example1_config(dir.path());
    edit_json(&cfg, |v| {
        v["controller"] = serde_json::json!({
            "type": "thm2", "k1": [45.0, 130.0], "k2": [-0.26, -0.2], "k3": [-10.25, -9.52], "mu": 40.0, "gamma": 1.5
        })
    });
    let out = quatsync(&["sweep", "--config", cfg.to_str().unwrap(), "--param", "k11", "--grid", "31,40"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "k11,d,mu1,T3,T4,t_sync_empirical");
    let row: Vec<f64> = lines[1].split(',').take(5).map(|c| c.parse().unwrap()).collect();
    assert_eq!(row[0], 31.0);
    assert!((row[1] - 3.9).abs() < 1e-9 && (row[3] - 0.071).abs() < 1e-3, "{}", lines[1]);
    let bad = quatsync(&["sweep", "--config", cfg.to_str().unwrap(), "--param", "rho", "--grid", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(quatsync(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let cfg = example1_config(dir.path());
    edit_json(&cfg, |v| v["schema"] = 9.into());
    assert_eq!(quatsync(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(quatsync(&["run"]).status.code(), Some(2));
    assert_eq!(quatsync(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn blow_up_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("blowup.json");
    let doc = serde_json::json!({
        "schema": 1,
        "network": {
            "n": 1, "d": [1.0],
            "a": {"scaled_identity": [1000.0, 0, 0, 0]}, "b": "zero", "c": "zero",
            "act_f": {"kind": "identity"}, "act_g": {"kind": "identity"}, "act_h": {"kind": "identity"},
            "delays": {"tau": {"constant": 0.1}, "pi": 0.1}
        },
        "run": {"t_end": 2.0, "h": 1e-3, "drive_initial": [[1, 0, 0, 0]], "response_initial": [[2, 0, 0, 0]]}
    });
    fs::write(&cfg, doc.to_string()).unwrap();
    let out = quatsync(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));
}

#[test]
fn image_recovery_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("small.ppm");
    let mut bytes = b"P6\n32 32\n255\n".to_vec();
    bytes.extend((0..32 * 32 * 3).map(|i| ((i * 37) % 251) as u8));
    fs::write(&img, bytes).unwrap();
    let cfg = example1_config(dir.path());
    edit_json(&cfg, |v| {
        v["image"] = serde_json::json!({
            "path": img.to_str().unwrap(), "corruption": {"missing": 0.8}, "seed": 5, "t_snapshots": [0.05, 0.3]
        })
    });
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = quatsync(&["example3", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (stdout(&out), fs::read(out_dir.join("custom_t0.30.ppm")).unwrap(), fs::read(out_dir.join("custom_corrupted.ppm")).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    assert!(a.0.contains("max channel error at the last snapshot = 0"), "{}", a.0);
}
