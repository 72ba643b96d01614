use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rfos(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rfos"));
    cmd.args(args).env_remove("RFOS_OUT");
    if let Some(dir) = out {
        cmd.env("RFOS_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SHORT: &str = "seeds = [0, 1]\n[run]\ntotal_steps = 300\n";

#[test]
fn run_writes_csv_into_rfos_out() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("output_dir = \"{}\"\n{SHORT}", tmp.path().join("ignored").display()),
    );
    let out_dir = tmp.path().join("env_out");
    let out = rfos(&["run", "--config", &cfg, "--seed", "3"], Some(&out_dir));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("run_h2_seed3.csv")).unwrap();
    assert!(csv.starts_with("episode,step,reward_raw,reward_norm,known_frac,vi\n"));
    assert_eq!(csv.lines().count(), 301);
    assert!(!tmp.path().join("ignored").exists());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["seed"], 3);
    assert_eq!(summary["total_steps"], 300);
}

#[test]
fn same_seed_gives_byte_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SHORT);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(rfos(&["run", "--config", &cfg, "--seed", "7"], Some(&a))
        .status
        .success());
    assert!(rfos(&["run", "--config", &cfg, "--seed", "7"], Some(&b))
        .status
        .success());
    let x = fs::read(a.join("run_h2_seed7.csv")).unwrap();
    let y = fs::read(b.join("run_h2_seed7.csv")).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
    assert!(rfos(&["run", "--config", &cfg, "--seed", "8"], Some(&b))
        .status
        .success());
    assert_ne!(x, fs::read(b.join("run_h2_seed8.csv")).unwrap());
}

#[test]
fn sweep_then_summarize_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SHORT}[sweep]\nh_values = [1, 2]\n"));
    let out = rfos(&["sweep", "--config", &cfg], Some(tmp.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "summary.json",
        "curves.dat",
        "curve_h1.csv",
        "curve_h2.csv",
        "run_h1_seed1.csv",
    ] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let first = fs::read_to_string(tmp.path().join("summary.json")).unwrap();
    let again = rfos(&["sweep", "--config", &cfg, "--summarize-only"], Some(tmp.path()));
    assert!(again.status.success());
    assert_eq!(first, fs::read_to_string(tmp.path().join("summary.json")).unwrap());
}

#[test]
fn bounds_json_is_exact() {
    let out = rfos(
        &[
            "bounds",
            "--case",
            "ii",
            "--lambda",
            "1.4142135623730951",
            "--epsilon",
            "0.5",
            "--gamma",
            "0.5",
            "--l",
            "4",
            "--format",
            "json",
        ],
        None,
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["sample_complexity"], "1179648");
    assert_eq!(v["m_required"], "1024");
}

#[test]
fn bad_inputs_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[rmax]\ngama = 0.8\n");
    let out = rfos(&["run", "--config", &cfg], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = rfos(&["bounds", "--gamma", "1.0"], None);
    assert!(!out.status.success());
}

#[test]
fn oracle_subcommands() {
    let out = rfos(&["oracle", "best-response", "--h", "1", "--horizon", "50"], None);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("best response value 1.000000"));
    let out = rfos(&["oracle", "simulation-lemma", "--pairs", "50"], None);
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 violations"));
}
