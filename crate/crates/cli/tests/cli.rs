use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn coordbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coordbeam")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap();
    serde_json::from_str(line).unwrap()
}

const SPEC: &str = r#"
version = 1
name = "cli"
scenario = "rayleigh"
seed = 2
drops = 5
sweep = [10.0]

[network]
n_t = 2
n_c = 3

[[schemes]]
kind = "max_slnr"

[[schemes]]
kind = "proposed"
alphas = [1, 2]
n_f = 3
"#;

fn write_spec(dir: &Path, text: &str) -> String {
    let path = dir.join("spec.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn account_reports_bits_and_bytes() {
    let v = stdout_json(&coordbeam(&["account", "proposed", "n_t=4", "n_c=7", "n_f_total=35"]));
    assert_eq!((v["bits"].as_u64(), v["bytes"].as_u64()), (Some(252), Some(32)));
    let v = stdout_json(&coordbeam(&["account", "wmmse", "kappa=2", "n_f=5", "n_c=9"]));
    assert_eq!(v["bytes"].as_u64(), Some(304));
    let v = stdout_json(&coordbeam(&["account", "global", "n_f=5", "n_c=9"]));
    assert_eq!(v["bytes"].as_u64(), Some(405));
}

#[test]
fn bad_input_gives_one_json_error_line() {
    let e = stderr_json(&coordbeam(&["account", "proposed", "n_t=4"]));
    assert!(e["error"].is_string() && e["message"].is_string());
    let e = stderr_json(&coordbeam(&["codebook", "train", "--n-t", "4", "--alpha", "5", "--n0", "1", "--n-f", "3"]));
    assert_eq!(e["error"], "invalid_argument");
}

#[test]
fn run_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), SPEC);
    for name in ["out.csv", "out.jsonl"] {
        let out = dir.path().join(name);
        let o = coordbeam(&["run", &spec, "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&coordbeam(&["validate", out.to_str().unwrap()]));
        assert_eq!(v["status"], "ok");
        assert_eq!(v["rows"], 2);
        assert_eq!(v["name"], "cli");
    }
    let o = coordbeam(&["run", &spec]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("scheme,")));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn run_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &SPEC.replace("drops = 5", "drops = 5\nextra = true"));
    let e = stderr_json(&coordbeam(&["run", &spec]));
    assert_eq!(e["error"], "parse");
}

#[test]
fn codebook_train_and_show() {
    let dir = tempfile::tempdir().unwrap();
    let book = dir.path().join("book.json");
    let o = coordbeam(&["codebook", "train", "--n-t", "4", "--alpha", "3", "--snr-db", "0", "--n-f", "2", "-o", book.to_str().unwrap()]);
    assert!(o.status.success());
    let o = coordbeam(&["codebook", "show", book.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("n_t=4 alpha=3 n0=1 n_f=2 levels=4"));
    assert_eq!(text.lines().count(), 3 + 4);
}

#[test]
fn selftest_passes() {
    let o = coordbeam(&["selftest"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
