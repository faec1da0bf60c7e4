use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_gkdv-duo");

struct Run {
    code: i32,
    out: PathBuf,
    _dir: tempfile::TempDir,
}

impl Run {
    fn json(&self, name: &str) -> Value {
        serde_json::from_slice(&fs::read(self.out.join(name)).unwrap()).unwrap()
    }
}

fn run(command: &str, config: &str) -> Run {
    run_env(command, config, &[])
}

fn run_env(command: &str, config: &str, env: &[(&str, &str)]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(BIN)
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&out)
        .envs(env.iter().copied())
        .status()
        .unwrap();
    Run { code: status.code().unwrap(), out, _dir: dir }
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

const K2: &str = r#""params": {"k": 2, "a": 1, "b": 4, "c": 1, "d": 1, "mu": 1}"#;
const K3: &str = r#""params": {"k": 3, "a": 1, "b": 8, "c": 0, "d": 0, "mu": 1}"#;
const K1: &str = r#""params": {"k": 1, "a": 1, "b": 1, "c": 0, "d": 0, "mu": 1}"#;

#[test]
fn ground_state_k2() {
    let r = run("ground-state", &format!(r#"{{{K2}, "grid": {{"n": 2048, "length_pi": 20}}}}"#));
    assert_eq!(r.code, 0);
    let v = r.json("result.json");
    assert_eq!(v["status"], "ok");
    let expect = 2f64.powf(-0.75);
    assert!((v["alpha"].as_f64().unwrap() - expect).abs() < 1e-7);
    assert!((v["beta"].as_f64().unwrap() - expect).abs() < 1e-7);
    assert!((v["f_max"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let states = v["ground_states"].as_array().unwrap();
    assert!(!states.is_empty());
    for s in states {
        let res = s["pohozaev"]["residuals"].as_array().unwrap();
        assert!(res.iter().all(|x| x.as_f64().unwrap() < 1e-8), "{res:?}");
    }
}

#[test]
fn spectrum_k3() {
    let r = run("spectrum", &format!(r#"{{{K3}, "grid": {{"n": 1024, "length_pi": 20}}}}"#));
    assert_eq!(r.code, 0);
    let v = r.json("result.json");
    assert_eq!(v["n_negative"]["L1"], 1);
    assert_eq!(v["n_negative"]["minus_channel"], 0);
    assert_eq!(v["unstable"], true);
    assert_eq!(v["verdict"], "unstable");
    let csv = fs::read_to_string(r.out.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("channel,index,eigenvalue\n"));
    assert!(csv.lines().any(|l| l.starts_with("full_block,0,")));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = format!(r#"{{{K2}, "grid": {{"n": 256, "length_pi": 20}}, "options": {{"dt": 0.01, "t_end": 0.5}}}}"#);
    let a = run("evolve", &cfg);
    let b = run("evolve", &cfg);
    assert_eq!(a.code, 0);
    for name in ["result.json", "trajectory.csv"] {
        assert_eq!(fs::read(a.out.join(name)).unwrap(), fs::read(b.out.join(name)).unwrap(), "{name}");
    }
    let header = fs::read_to_string(a.out.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,M,E,G,d\n"));
    let (ma, mb) = (a.json("manifest.json"), b.json("manifest.json"));
    assert_eq!(ma["files"], mb["files"]);
    assert_eq!(ma["input_hash"], mb["input_hash"]);
}

#[test]
fn manifest_hashes_match_files() {
    let r = run_env("direction", &format!("{{{K3}}}"), &[("GKDV_THREADS", "2")]);
    assert_eq!(r.code, 0);
    let m = r.json("manifest.json");
    assert_eq!(m["threads"], 2);
    assert_eq!(m["command"], "direction");
    assert_eq!(m["config"]["params"]["k"], 3);
    for f in m["files"].as_array().unwrap() {
        let bytes = fs::read(r.out.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), format!("{:x}", Sha256::digest(&bytes)));
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
    assert_eq!(listing(&r.out), ["manifest.json", "result.json"]);
    // nothing besides the config and the output directory appears next to them
    assert_eq!(listing(r.out.parent().unwrap()), ["config.json", "out"]);
}

#[test]
fn unknown_key_is_rejected() {
    let r = run("direction", &format!(r#"{{{K3}, "colour": 1}}"#));
    assert_eq!(r.code, 2);
    let v = r.json("result.json");
    assert_eq!(v["status"], "error");
    assert_eq!(v["error"]["exit_code"], 2);
}

#[test]
fn unknown_option_is_rejected() {
    let r = run("direction", &format!(r#"{{{K3}, "options": {{"scan": 10}}}}"#));
    assert_eq!(r.code, 2);
}

#[test]
fn command_mismatch_is_rejected() {
    let r = run("lambda", &format!(r#"{{"command": "spectrum", {K3}}}"#));
    assert_eq!(r.code, 2);
}

#[test]
fn bad_thread_count_is_rejected() {
    let r = run_env("direction", &format!("{{{K3}}}"), &[("GKDV_THREADS", "zero")]);
    assert_eq!(r.code, 2);
}

#[test]
fn non_convergence_is_numerical() {
    let cfg = format!(r#"{{{K2}, "grid": {{"n": 256, "length_pi": 20}}, "options": {{"max_iter": 2}}}}"#);
    let r = run("petviashvili", &cfg);
    assert_eq!(r.code, 3);
    let v = r.json("result.json");
    assert_eq!(v["status"], "error");
    assert_eq!(v["error"]["kind"], "no_convergence");
    assert_eq!(r.json("manifest.json")["exit_code"], 3);
}

#[test]
fn gwp_k1_is_informational() {
    let cfg = format!(r#"{{{K1}, "grid": {{"n": 256, "length_pi": 20}}, "options": {{"dt": 0.01, "t_end": 0.1}}}}"#);
    let r = run("gwp-check", &cfg);
    assert_eq!(r.code, 0);
    assert_eq!(r.json("result.json")["status"], "informational");
}
