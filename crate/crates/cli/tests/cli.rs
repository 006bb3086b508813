use assert_cmd::Command;
use serde_json::Value;

const SHEARLET: &str = r#"{"family":"shearlet2d","c":0.5}"#;

fn orbitlet() -> Command {
    Command::cargo_bin("orbitlet").unwrap()
}

fn run_json(args: &[&str]) -> Value {
    let out = orbitlet().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "orbitlet/1");
    v
}

fn code(args: &[&str]) -> i32 {
    orbitlet().args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn describe_toeplitz_and_similitude() {
    let v = run_json(&["describe", "--group", r#"{"family":"toeplitz_shearlet","dim":3}"#]);
    assert_eq!(v["orbit"]["kind"], "first-coordinate-nonzero");
    assert_eq!(v["nilpotency_class"], 3);
    assert_eq!(v["operator"]["name"], "d1");
    assert_eq!(v["modular"]["delta_g"], "exp(-3 r)");
    let v = run_json(&["describe", "--group", r#"{"family":"similitude","dim":2}"#]);
    assert_eq!(v["operator"]["name"], "laplacian");
    assert_eq!(v["orbit"]["kind"], "punctured-space");
}

#[test]
fn malformed_input_exits_2_with_position() {
    let out = orbitlet().args(["describe", "--group", r#"{"family": "shearlet2d", "c": }"#]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1 column"));
    let out = orbitlet().args(["describe", "--group", r#"{"family": "shearlet2d", "k": 1}"#]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`k`"));
    assert_eq!(code(&["describe", "--group", "/nonexistent/group.json"]), 2);
    assert_eq!(code(&["describe"]), 2);
}

#[test]
fn classify_counts_and_unsupported_dim() {
    for (d, n) in [(2, 1), (3, 2), (4, 5)] {
        let v = run_json(&["classify", "--dim", &d.to_string()]);
        assert_eq!(v["count"], n);
    }
    let v = run_json(&["classify", "--dim", "4"]);
    let forms: Vec<&Value> = v["classes"].as_array().unwrap().iter().map(|c| &c["invariants"]["form"]).collect();
    let tagged: Vec<&Value> = forms.iter().copied().filter(|f| !f.is_null()).collect();
    assert_eq!(tagged.len(), 3);
    assert!(tagged[0] != tagged[1] && tagged[1] != tagged[2] && tagged[0] != tagged[2]);
    assert_eq!(code(&["classify", "--dim", "5"]), 3);
}

#[test]
fn pipeline_golden_orders() {
    let v = run_json(&["moments", "--group", SHEARLET, "--weight", "2,2,0,max-delta"]);
    assert_eq!(v["moments_analyzing"], 15);
    assert_eq!(v["moments_atom"], 19);
    let v = run_json(&["moments", "--group", r#"{"family":"toeplitz_shearlet","dim":3}"#]);
    assert_eq!(v["shearlet_atom_order"], 41);
    let v = run_json(&["moments", "--group", r#"{"family":"similitude","dim":2}"#]);
    assert_eq!(v["report"]["notes"].as_array().unwrap().len(), 1);
}

#[test]
fn power_weight_needs_sampling() {
    assert_eq!(code(&["exponents", "--group", SHEARLET, "--weight", "2,2,1,power:1"]), 3);
    assert_eq!(code(&["exponents", "--group", SHEARLET, "--weight", "2,2,1,cubic"]), 2);
}

#[test]
fn seeded_commands_are_byte_identical() {
    let args = ["exponents", "--group", SHEARLET, "--mode", "check", "--budget", "6000", "--seed", "7"];
    let a = orbitlet().args(args).output().unwrap().stdout;
    let b = orbitlet().args(args).output().unwrap().stdout;
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["empirical"]["verdict"], "bounded");
    let args = ["envelope", "--group", SHEARLET, "--robustness", "500", "--seed", "3"];
    assert_eq!(orbitlet().args(args).output().unwrap().stdout, orbitlet().args(args).output().unwrap().stdout);
}

#[test]
fn envelope_points() {
    let v = run_json(&["envelope", "--group", SHEARLET, "--xi", "0,2", "--xi", "-1,0"]);
    assert_eq!(code(&["envelope", "--group", SHEARLET, "--xi", "1,2,3"]), 3);
    let vals = v["values"].as_array().unwrap();
    assert_eq!(vals[0]["a"], 0.0);
    assert_eq!(vals[0]["in_orbit"], false);
    assert!((vals[1]["a"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn invalid_generalized_shearlet_is_rejected() {
    // X_2 not strictly upper triangular
    let g = r#"{"family":"generalized_shearlet","dim":2,"shear_lie_basis":[[0,1,1,0]],"y":[1,0.5]}"#;
    assert_eq!(code(&["validate", "--group", g]), 3);
    let v = run_json(&["validate", "--group", SHEARLET]);
    assert_eq!(v["passed"], true);
}

#[test]
fn atom_build_verify_admissibility() {
    let dir = tempfile::tempdir().unwrap();
    let atom = dir.path().join("atom.json");
    let samples = dir.path().join("atom.bin");
    let f = dir.path().join("f.json");
    let atom_s = atom.to_str().unwrap();
    run_json(&[
        "atom", "build", "--group", SHEARLET, "--order", "2", "--degree", "5", "--half-width", "4.5", "--out", atom_s,
        "--samples", samples.to_str().unwrap(), "--sample-points", "129",
    ]);
    let v = run_json(&["atom", "verify", "--group", SHEARLET, "--atom", atom_s]);
    assert_eq!(v["probe"]["verdict"], "verified");
    let v = run_json(&["atom", "verify", "--group", SHEARLET, "--sampled", samples.to_str().unwrap(), "--order", "2"]);
    assert_eq!(v["probe"]["verdict"], "verified");
    let v = run_json(&["atom", "verify", "--group", SHEARLET, "--atom", atom_s, "--order", "3"]);
    assert_eq!(v["probe"]["verdict"], "failed");
    let v = run_json(&["admissibility", "--group", SHEARLET, "--atom", atom_s]);
    assert_eq!(v["report"]["verdict"], "finite");
    run_json(&["atom", "build", "--group", SHEARLET, "--order", "0", "--degree", "3", "--out", f.to_str().unwrap()]);
    let v = run_json(&["admissibility", "--group", SHEARLET, "--atom", f.to_str().unwrap()]);
    assert_eq!(v["report"]["verdict"], "divergent");
    // degree rule
    assert_eq!(code(&["atom", "build", "--group", SHEARLET, "--order", "3", "--degree", "3"]), 3);
    // dimension mismatch between group and atom
    assert_eq!(code(&["atom", "verify", "--group", r#"{"family":"similitude","dim":3}"#, "--atom", atom_s]), 3);
}

#[test]
fn cwt_icwt_round_trip_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    run_json(&["atom", "build", "--group", SHEARLET, "--order", "2", "--degree", "5", "--half-width", "4.5", "--out", &p("atom.json")]);
    let config = serde_json::json!({
        "group": {"family": "shearlet2d", "c": 0.5},
        "atom": p("atom.json"),
        "r_points": 25,
        "t_points": 9,
    });
    std::fs::write(p("cfg.json"), config.to_string()).unwrap();
    let v = run_json(&[
        "--config", &p("cfg.json"), "cwt", "--test-signal", "packet",
        "--signal-out", &p("sig.csv"), "--out", &p("c.bin"), "--weight", "2,2,0,max-delta",
    ]);
    assert_eq!(v["dilations"], 25 * 9 * 2);
    assert!(v["coefficient_norm"]["value"].as_f64().unwrap() > 0.0);
    let v = run_json(&["icwt", "--config", &p("cfg.json"), "--coeffs", &p("c.bin"), "--reference", &p("sig.csv"), "--out", &p("rec.bin")]);
    let err = v["relative_l2_error"].as_f64().unwrap();
    assert!(err < 0.05, "{err}");
    // explicit flags override the config file
    assert_eq!(code(&["icwt", "--config", &p("cfg.json"), "--coeffs", &p("c.bin"), "--r-points", "7"]), 3);
}

#[test]
fn haar_and_phi_checks() {
    let v = run_json(&["haar-check", "--group", SHEARLET]);
    assert!(v["check"]["relative_error"].as_f64().unwrap() < 1e-3);
    let v = run_json(&["phi-check", "--group", SHEARLET, "--samples", "2", "--seed", "1"]);
    assert_eq!(v["ell"], 4);
    assert!(v["max_relative_error"].as_f64().unwrap() < 1e-2);
}

#[test]
fn threads_flag_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    orbitlet().args(["--threads", "2", "classify", "--dim", "3", "--output", out.to_str().unwrap()]).assert().success();
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["count"], 2);
}
