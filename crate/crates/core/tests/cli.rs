use std::process::Command;

use serde_json::Value;

fn qipkit(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qipkit"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let (code, out, err) = qipkit(&full);
    let v = serde_json::from_str(&out).unwrap_or_else(|e| panic!("bad JSON ({e}): {out} {err}"));
    (code, v)
}

#[test]
fn bell_circuit_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bell.qc");
    std::fs::write(&path, "# Bell pair\nqubits 2\nh 0\ncnot 0 1\n").unwrap();
    let (code, v) = json(&["--seed", "5", "circuit", path.to_str().unwrap(), "--shots", "10000"]);
    assert_eq!(code, 0);
    let hist = v["result"]["histogram"].as_object().unwrap();
    assert!(hist.get("01").is_none() && hist.get("10").is_none());
    let zeros = hist["00"].as_u64().unwrap() as f64;
    let ones = hist["11"].as_u64().unwrap() as f64;
    assert_eq!(zeros + ones, 10000.0);
    assert!((zeros - 5000.0).abs() < 4.0 * 50.0);
}

#[test]
fn empty_circuit_stays_in_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.qc");
    std::fs::write(&path, "qubits 3\n").unwrap();
    let (code, v) = json(&["--seed", "1", "circuit", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let amps = v["result"]["amplitudes"].as_array().unwrap();
    assert_eq!(amps.len(), 8);
    assert_eq!(amps[0][0].as_f64(), Some(1.0));
    assert_eq!(v["result"]["histogram"]["000"].as_u64(), Some(1000));
}

#[test]
fn non_unitary_gate_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.qc");
    std::fs::write(&path, "qubits 1\nh 0\nu2 0 1 1 1 1\n").unwrap();
    let (code, out, err) = qipkit(&["circuit", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn chsh_quantum_rate() {
    let (code, v) = json(&["chsh", "--strategy", "quantum", "--trials", "1000000", "--seed", "7"]);
    assert_eq!(code, 0);
    let rate = v["result"]["win_rate"].as_f64().unwrap();
    assert!((rate - 0.8536).abs() < 0.002, "{rate}");
    assert_eq!(v["seed"].as_u64(), Some(7));
}

#[test]
fn entropy_of_psi01() {
    let (code, v) = json(&["entropy", "--ensemble", "psi01"]);
    assert_eq!(code, 0);
    let s = v["result"]["value_bits"].as_f64().unwrap();
    assert!((s - 0.8112781).abs() < 1e-6);
}

#[test]
fn bb84_intercept_aborts() {
    let (code, v) = json(&["bb84", "--n", "256", "--eve", "intercept", "--seed", "11"]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["aborted"], Value::Bool(true));
    let (code, v) = json(&["bb84", "--n", "256", "--seed", "11"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["key"]["alice"], v["result"]["key"]["bob"]);
}

#[test]
fn other_subcommands_run() {
    let (code, v) = json(&["densecode"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["all_decoded"], Value::Bool(true));
    let (code, v) = json(&["teleport", "--outcome", "01", "--seed", "1"]);
    assert_eq!(code, 0);
    assert!((v["result"]["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let (code, v) = json(&["ecc", "--error", "xxi", "--seed", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["recovered"], Value::Bool(false));
    let (code, v) = json(&["holevo", "--measurement", "computational"]);
    assert_eq!(code, 0);
    assert!((v["result"]["best_mutual_information_bits"].as_f64().unwrap() - 0.6454211).abs() < 1e-6);
    let (code, v) = json(&["compress", "--n", "8", "--epsilon", "0.15", "--seed", "3"]);
    assert_eq!(code, 0);
    let r = &v["result"];
    assert!(r["avg_fidelity"].as_f64().unwrap() >= r["bound_fidelity"].as_f64().unwrap());
    assert!(r["dim"].as_f64().unwrap() <= r["bound_dim"].as_f64().unwrap());
    let (code, v) = json(&["e91", "--n", "400", "--seed", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["key_agreement"].as_f64(), Some(1.0));
}

#[test]
fn reproducible_and_out_file() {
    let a = qipkit(&["--json", "--seed", "42", "bb84", "--n", "32"]);
    let b = qipkit(&["--json", "--seed", "42", "bb84", "--n", "32"]);
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let (code, out, _) = qipkit(&["--json", "--seed", "42", "--out", path.to_str().unwrap(), "bb84", "--n", "32"]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), a.1);
}

#[test]
fn usage_errors() {
    let (code, _, err) = qipkit(&["chsh", "--bogus"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"), "{err}");
    assert_eq!(qipkit(&[]).0, 2);
    assert_eq!(qipkit(&["teleport", "--outcome", "2"]).0, 2);
}

#[test]
fn generated_seed_is_reported() {
    let (code, v) = json(&["chsh", "--trials", "10"]);
    assert_eq!(code, 0);
    assert!(v["seed"].is_u64());
    assert_eq!(v["schema"], "qipkit/1");
}
