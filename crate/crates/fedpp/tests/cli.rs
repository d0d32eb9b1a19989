use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fedpp");

fn scenario() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/default.json"))
}

fn fedpp(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn secret_of(o: &Output) -> String {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix("secret "))
        .unwrap()
        .to_string()
}

#[test]
fn run_then_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = fedpp(&["run", "--config", scenario().to_str().unwrap(), "--seed", "7", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["transcript.jsonl", "audit.json", "strategies.csv", "clients.csv"] {
        assert!(tmp.path().join(f).is_file(), "{f}");
    }
    assert!(fs::read_dir(tmp.path().join("cas")).unwrap().count() > 0);

    let transcript = tmp.path().join("transcript.jsonl");
    let t = transcript.to_str().unwrap();
    let secret = secret_of(&o);
    let ok = fedpp(&["verify", "--transcript", t, "--secret", &secret]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok).trim(), "ok");

    let wrong = fedpp(&["verify", "--transcript", t, "--secret", &"00".repeat(32)]);
    assert_eq!(wrong.status.code(), Some(2));
    assert!(stdout(&wrong).starts_with("divergence at height"));

    let bad_hex = fedpp(&["verify", "--transcript", t, "--secret", "zz"]);
    assert_eq!(bad_hex.status.code(), Some(2));
}

#[test]
fn run_json_format() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fedpp(&[
        "run",
        "--config",
        scenario().to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert!(doc["config"]["roster"].is_array());
}

#[test]
fn mc_writes_strategy_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fedpp(&[
        "mc",
        "--config",
        scenario().to_str().unwrap(),
        "--trials",
        "20",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let table = fs::read_to_string(tmp.path().join("strategies.csv")).unwrap();
    assert!(table.starts_with("strategy,effort,mean_payment,se_payment,mean_utility,slash_rate\n"));
}

#[test]
fn delta_over_cas_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fedpp(&["run", "--config", scenario().to_str().unwrap(), "--seed", "3", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let d = fedpp(&["delta", "--reports", tmp.path().join("cas").to_str().unwrap()]);
    assert_eq!(d.status.code(), Some(0));
    let text = stdout(&d);
    assert!(text.contains("sign"), "{text}");
}

#[test]
fn protocol_and_input_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = fedpp(&["run", "--config", "/nonexistent.json", "--seed", "1", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));

    let mut cfg: serde_json::Value = serde_json::from_slice(&fs::read(scenario()).unwrap()).unwrap();
    cfg["min_stake"] = 5_000.into();
    let path = tmp.path().join("under_staked.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let o = fedpp(&["run", "--config", path.to_str().unwrap(), "--seed", "1", "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
