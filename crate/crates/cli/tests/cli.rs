use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pricecomp"));
    cmd.env("PRICECOMP_WORKERS", "1");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const THREE: &str = r#"{"n": 3, "values": ["1", "1", "1"], "costs": ["0.2", "0.3", "0.4"], "budget": "1", "matroid": {"kind": "free"}}"#;

#[test]
fn generate_is_deterministic_in_the_seed() {
    let args = [
        "generate",
        "--n",
        "6",
        "--lambda",
        "1/2",
        "--family",
        "graphic:4",
        "--seed",
        "11",
    ];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let other = run(&[
        "generate",
        "--n",
        "6",
        "--lambda",
        "1/2",
        "--family",
        "graphic:4",
        "--seed",
        "12",
    ]);
    assert_ne!(a.stdout, other.stdout);
    assert_eq!(json(&a)["values"].as_array().unwrap().len(), 6);
}

#[test]
fn weighted_prices_verify() {
    let dir = tempfile::tempdir().unwrap();
    let gen = run(&[
        "generate",
        "--n",
        "5",
        "--lambda",
        "1/2",
        "--family",
        "uniform:3",
        "--seed",
        "3",
    ]);
    let inst = write(dir.path(), "inst.json", &String::from_utf8(gen.stdout).unwrap());
    let eq = run(&["construct-eq", "--algo", "weighted", "--instance", &inst]);
    assert_eq!(code(&eq), 0, "{}", String::from_utf8_lossy(&eq.stderr));
    let prices = write(dir.path(), "eq.json", &String::from_utf8(eq.stdout).unwrap());
    let verdict = run(&["verify-eq", "--instance", &inst, "--prices", &prices]);
    assert_eq!(code(&verdict), 0);
    assert_eq!(json(&verdict)["pass"], true);
}

#[test]
fn undercut_prices_fail_verification_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.json", THREE);
    // each module can raise its price toward the budget share and still be selected
    let prices = write(dir.path(), "p.json", r#"["0.2", "0.3", "0.4"]"#);
    let out = run(&["verify-eq", "--instance", &inst, "--prices", &prices]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn select_reports_one_based_ids() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.json", THREE);
    let prices = write(dir.path(), "p.json", r#"{"prices": ["0.5", "0.3", "0.4"]}"#);
    let out = run(&["select", "--instance", &inst, "--prices", &prices]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_eq!(doc["order"], serde_json::json!([2, 3, 1]));
    assert_eq!(doc["selected"], serde_json::json!([2, 3]));
    assert_eq!(doc["terminated_at"], 1);
}

#[test]
fn usage_and_input_errors_exit_two() {
    assert_eq!(code(&run(&["generate", "--n", "3"])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);
    assert_eq!(
        code(&run(&[
            "generate", "--n", "3", "--lambda", "1/2", "--family", "cube", "--seed", "1"
        ])),
        2
    );
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "inst.json",
        r#"{"n": 1, "values": ["1"], "costs": ["2"], "budget": "1", "matroid": {"kind": "free"}}"#,
    );
    let prices = write(dir.path(), "p.json", r#"["1"]"#);
    let out = run(&["select", "--instance", &inst, "--prices", &prices]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
    let missing = dir.path().join("absent.json");
    assert_eq!(
        code(&run(&[
            "select",
            "--instance",
            missing.to_str().unwrap(),
            "--prices",
            &prices
        ])),
        2
    );
}

#[test]
fn randomized_commands_require_a_seed() {
    assert_eq!(code(&run(&["generate", "--n", "3", "--lambda", "1/2"])), 2);
    assert_eq!(code(&run(&["paper-suite", "--out", "x", "--quick"])), 2);
}

#[test]
fn simulate_writes_a_trace_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.json", THREE);
    let trace = dir.path().join("trace.csv");
    let args = |t: &str| {
        vec![
            "simulate".to_string(),
            "--instance".into(),
            inst.clone(),
            "--delta".into(),
            "1/20".into(),
            "--rounds".into(),
            "300".into(),
            "--seed".into(),
            "5".into(),
            "--trace".into(),
            t.to_string(),
        ]
    };
    let a = bin().args(args(trace.to_str().unwrap())).output().unwrap();
    assert!(matches!(code(&a), 0 | 1), "{}", String::from_utf8_lossy(&a.stderr));
    let first = fs::read_to_string(&trace).unwrap();
    assert!(first.starts_with("seed,round,module,price,selected,reward"));
    assert_eq!(first.lines().count(), 1 + 300 * 3);
    let b = bin().args(args(trace.to_str().unwrap())).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(first, fs::read_to_string(&trace).unwrap());
}

#[test]
fn sweep_emits_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.json", THREE);
    let out = run(&[
        "sweep",
        "--instance",
        &inst,
        "--deltas",
        "1/10,1/20",
        "--rounds",
        "100",
        "--seed",
        "1",
        "--seeds",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2);
}

#[test]
fn quick_suite_writes_csvs_and_a_smoke_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "paper-suite",
        "--out",
        dir.path().to_str().unwrap(),
        "--seed",
        "1",
        "--quick",
        "--only",
        "A1,A8",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.lines().all(|l| l.contains("PASS")));
    assert!(dir.path().join("A1.csv").exists() && dir.path().join("A8.csv").exists());
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["mode"], "smoke");
    assert_eq!(summary["pass"], true);
}

#[test]
fn injected_fault_fails_the_construction_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "paper-suite",
        "--out",
        dir.path().to_str().unwrap(),
        "--seed",
        "1",
        "--quick",
        "--only",
        "A2",
        "--inject-fault",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("A2 FAIL"));
}

#[test]
fn unknown_criterion_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "paper-suite",
        "--out",
        dir.path().to_str().unwrap(),
        "--seed",
        "1",
        "--only",
        "A9",
    ]);
    assert_eq!(code(&out), 2);
}
