use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn bb84(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bb84")).args(args).output().expect("binary runs")
}

fn run_fixture(sub: &str, name: &str, extra: &[&str]) -> Output {
    let path = fixture(name);
    let mut args = vec![sub, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    bb84(&args)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn validate_fixtures() {
    for name in ["identity.json", "cnot.json", "brute_small.json", "simulate.json"] {
        let out = run_fixture("validate", name, &[]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        assert_eq!(json(&out)["passed"], true);
    }
    let out = run_fixture("validate", "dependent_ecc.json", &[]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    let code = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "code").unwrap();
    assert!(code["detail"].as_str().unwrap().contains("linearly dependent"));
}

#[test]
fn parse_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        "{\n  \"protocol\": {\n    \"n_raw\": \"many\",\n    \"p_allowed\": 0.1,\n    \"rng_seed\": 1\n  }\n}\n",
    )
    .unwrap();
    let out = bb84(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("protocol.n_raw"), "{err}");
    assert!(err.contains("line 3"), "{err}");

    let out = bb84(&["validate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(bb84(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn zero_noise_bounds() {
    let out = run_fixture("bounds", "zero_noise.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["report"];
    assert_eq!(r["tr_delta_bound"], 0.0);
    assert_eq!(r["sd_bound"]["half_trace"], 0.0);
    assert_eq!(r["sd_bound"]["full_trace"], 0.0);
    let tail = r["hoeffding_tail"].as_f64().unwrap();
    assert!((tail - 2.0 * (-2.0 * 4.0 * 0.05f64 * 0.05).exp()).abs() < 1e-12);
    let total = r["total_info_bound"].as_f64().unwrap();
    assert!((total - (r["first_term"].as_f64().unwrap() + tail).min(1.0)).abs() < 1e-12);
}

#[test]
fn p_test_sweep_is_ordered_and_monotone() {
    let out = run_fixture("bounds", "sweep.json", &["--sweep", "p_test=0:0.1:11"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = lines(&out);
    assert_eq!(recs.len(), 11);
    let mut prev = f64::NEG_INFINITY;
    for (i, rec) in recs.iter().enumerate() {
        assert_eq!(rec["index"], i);
        let log2_first = rec["report"]["first_term"].as_f64().map(f64::log2).unwrap_or(f64::INFINITY);
        assert!(log2_first >= prev);
        prev = log2_first;
    }
}

#[test]
fn sweep_errors_do_not_abort() {
    let out = run_fixture("bounds", "sweep.json", &["--sweep", "delta=0:0.01:3"]);
    assert_eq!(out.status.code(), Some(1));
    let recs = lines(&out);
    assert_eq!(recs.len(), 3);
    assert!(recs[0]["error"].is_string());
    assert!(recs[1]["report"].is_object() && recs[2]["report"].is_object());
}

#[test]
fn two_dimensional_sweep() {
    let out = run_fixture("bounds", "sweep.json", &["--sweep", "n=1000:3000:3", "--sweep", "r=0:100:2"]);
    let recs = lines(&out);
    assert_eq!(recs.len(), 6);
    assert_eq!(recs[1]["point"]["n"], 1000);
    assert_eq!(recs[1]["point"]["r"], 100);
    assert_eq!(recs[2]["point"]["n"], 2000);
}

#[test]
fn witness_record() {
    let out = run_fixture("bounds", "sweep.json", &["--witness"]);
    assert_eq!(out.status.code(), Some(0));
    let w = &json(&out)["witness"];
    assert!(w["report"]["log2_total_info_bound"].as_f64().unwrap() <= -100.0);
    assert_eq!(w["report"]["p_test"], 0.02);
    let (n, r, alpha) = (w["n"].as_f64().unwrap(), w["r"].as_f64().unwrap(), w["report"]["alpha"].as_f64().unwrap());
    assert!(r <= alpha * n);
}

#[test]
fn per_coset_mode_flag() {
    let out = run_fixture("bounds", "zero_noise.json", &["--mode", "per_coset"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json(&out)["report"];
    assert_eq!(r["mode"], "per_coset");
    assert_eq!(r["per_coset_terms"].as_array().unwrap().len(), 2);
}

#[test]
fn brute_check_fixtures() {
    for name in ["brute_small.json", "cnot.json", "identity.json"] {
        let out = run_fixture("brute-check", name, &["--trials", "20"]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        assert_eq!(json(&out)["passed"], true);
    }
}

#[test]
fn enumeration_cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_bb84"))
        .args(["brute-check", fixture("brute_small.json").to_str().unwrap()])
        .env("BB84_ENUM_CAP", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds cap"));
}

#[test]
fn identity_simulation_is_clean() {
    let out = run_fixture("simulate", "identity.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let t = json(&out);
    assert_eq!(t["p_test"], 0.0);
    assert_eq!(t["accepted"], true);
}

#[test]
fn certain_errors_fail_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ones.json");
    let ones = vec!["1.0"; 50].join(", ");
    std::fs::write(
        &path,
        format!(r#"{{"protocol": {{"n_raw": 50, "p_allowed": 0.5, "rng_seed": 3, "per_bit_error": [{ones}]}}}}"#),
    )
    .unwrap();
    let out = bb84(&["simulate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["p_test"], 1.0);
}

#[test]
fn out_flag_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("t.json");
    let piped = run_fixture("simulate", "simulate.json", &[]);
    let written = run_fixture("simulate", "simulate.json", &["--out", target.to_str().unwrap()]);
    assert!(written.stdout.is_empty());
    assert_eq!(std::fs::read(&target).unwrap(), piped.stdout);
}

#[test]
fn seed_flag_changes_transcript() {
    let a = run_fixture("simulate", "simulate.json", &["--seed", "1"]);
    let b = run_fixture("simulate", "simulate.json", &["--seed", "2"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn monte_carlo_report() {
    let out = run_fixture("simulate", "simulate.json", &["--trials", "500"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["trials"], 500);
    assert_eq!(r["within_3_sigma"], true);
}
