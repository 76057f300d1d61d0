use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deficiency_core::entanglement::MaxEntWitness;
use deficiency_core::formats::StateFile;
use deficiency_core::qcore::{identity, random_density, substream};
use deficiency_core::{DensityOperator, PureState};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_deficiency"));
    c.env_remove("DEFICIENCY_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_state(dir: &Path, name: &str, rho: &DensityOperator, dims: &[usize]) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, StateFile::from_density(rho, dims).to_json()).unwrap();
    path
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn bell() -> DensityOperator {
    MaxEntWitness::from_local_unitary(identity(2))
        .unwrap()
        .vector()
        .density()
}

#[test]
fn coherence_of_basis_state_is_one_half() {
    let dir = TempDir::new().unwrap();
    let p = write_state(
        dir.path(),
        "zero.json",
        &PureState::basis(2, 0).density(),
        &[2],
    );
    let v = json(&run(&[
        "deficiency",
        "--resource",
        "coherence",
        "--state",
        p.to_str().unwrap(),
    ]));
    assert!((f(&v["result"]["value"]) - 0.5).abs() < 1e-12);
    assert_eq!(v["result"]["method"], "closed_form");
    assert_eq!(v["header"]["tool"], "deficiency");
    assert!(v["header"]["inputs"]["state"].is_string());
    assert!(v["header"]["tolerances"]["completeness"].is_number());
}

#[test]
fn bell_state_has_no_entanglement_deficiency() {
    let dir = TempDir::new().unwrap();
    let p = write_state(dir.path(), "bell.json", &bell(), &[2, 2]);
    let v = json(&run(&[
        "deficiency",
        "--resource",
        "entanglement",
        "--state",
        p.to_str().unwrap(),
    ]));
    assert!(f(&v["result"]["value"]) < 1e-12);
    assert_eq!(v["result"]["method"], "pure_formula");
    assert_eq!(v["result"]["witness"]["re"].as_array().unwrap().len(), 4);
}

#[test]
fn mixed_five_level_state_uses_ascent() {
    let dir = TempDir::new().unwrap();
    let rho = random_density(5, 5, &mut substream(1, "cli/d5")).unwrap();
    let p = write_state(dir.path(), "d5.json", &rho, &[5]);
    let v = json(&run(&[
        "deficiency",
        "--resource",
        "coherence",
        "--state",
        p.to_str().unwrap(),
    ]));
    assert_eq!(v["result"]["method"], "coordinate_ascent");
    assert_eq!(v["result"]["converged"], true);
    assert!(f(&v["result"]["bound_gap"]) >= -1e-12);
}

#[test]
fn method_overrides() {
    let dir = TempDir::new().unwrap();
    let rho = random_density(3, 2, &mut substream(2, "cli/d3")).unwrap();
    let p = write_state(dir.path(), "d3.json", &rho, &[3]);
    let p = p.to_str().unwrap();
    let asc = json(&run(&[
        "deficiency",
        "--resource",
        "coherence",
        "--state",
        p,
        "--method",
        "ascent",
    ]));
    let grid = json(&run(&[
        "deficiency",
        "--resource",
        "coherence",
        "--state",
        p,
        "--method",
        "oracle",
    ]));
    assert_eq!(grid["result"]["method"], "grid_oracle");
    let gap = f(&grid["result"]["grid_gap"]);
    let diff = f(&grid["result"]["value"]) - f(&asc["result"]["value"]);
    assert!((-1e-12..=gap).contains(&diff), "{diff} vs gap {gap}");
    let out = run(&[
        "deficiency",
        "--resource",
        "coherence",
        "--state",
        p,
        "--method",
        "power-iteration",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn exit_codes_for_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let malformed = dir.path().join("bad.json");
    std::fs::write(&malformed, "{\"dims\": [2], \"re\": [[1, 0]]").unwrap();
    let out = run(&[
        "deficiency",
        "--resource",
        "coherence",
        "--state",
        malformed.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let ragged = dir.path().join("ragged.json");
    std::fs::write(
        &ragged,
        r#"{"dims": [2], "re": [[1, 0], [0]], "im": [[0, 0], [0, 0]]}"#,
    )
    .unwrap();
    let out = run(&[
        "deficiency",
        "--resource",
        "coherence",
        "--state",
        ragged.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let trace_two = dir.path().join("trace.json");
    std::fs::write(
        &trace_two,
        r#"{"dims": [2], "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]}"#,
    )
    .unwrap();
    let out = run(&[
        "deficiency",
        "--resource",
        "coherence",
        "--state",
        trace_two.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let flat = write_state(
        dir.path(),
        "flat.json",
        &DensityOperator::maximally_mixed(4),
        &[4],
    );
    let out = run(&[
        "deficiency",
        "--resource",
        "entanglement",
        "--state",
        flat.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let uneven = write_state(
        dir.path(),
        "uneven.json",
        &DensityOperator::maximally_mixed(6),
        &[2, 3],
    );
    let out = run(&[
        "deficiency",
        "--resource",
        "entanglement",
        "--state",
        uneven.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));

    let missing = run(&[
        "deficiency",
        "--resource",
        "coherence",
        "--state",
        "/nonexistent/state.json",
    ]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(
        run(&["deficiency", "--resource", "magic"]).status.code(),
        Some(2)
    );
}

#[test]
fn monotonicity_csv_is_deterministic() {
    let args = [
        "monotonicity",
        "--resource",
        "coherence",
        "--dims",
        "3",
        "--purity",
        "mixed",
        "--trials",
        "30",
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# deficiency ") && lines[0].contains("seed=7"));
    assert!(lines[1].starts_with("seed,trial,dims,margin,verdict"));
    assert_eq!(lines.len(), 33);
    let summary = lines.last().unwrap();
    assert!(
        summary.starts_with("# summary trials=30") && summary.contains("violations=0"),
        "{summary}"
    );
}

#[test]
fn monotonicity_json_and_out_dir() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .env("DEFICIENCY_OUT_DIR", dir.path())
        .args([
            "monotonicity",
            "--resource",
            "entanglement",
            "--dims",
            "2,2",
            "--purity",
            "pure",
            "--trials",
            "10",
            "--format",
            "json",
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let path = dir.path().join("monotonicity-entanglement-3.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["summary"]["trials"], 10);
    assert_eq!(v["summary"]["violations"], 0);
    assert_eq!(v["config"]["seed"], 3);
    assert_eq!(v["trials"].as_array().unwrap().len(), 10);
}

#[test]
fn monotonicity_rejects_bad_combinations() {
    let out = run(&["monotonicity", "--resource", "entanglement", "--dims", "3"]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&["monotonicity", "--resource", "coherence", "--dims", "2,2"]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&[
        "monotonicity",
        "--resource",
        "entanglement",
        "--dims",
        "2,3",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn violations_ship_reproduction_data() {
    // local filtering of mixed two-qubit states can raise the entangled fraction
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("ent.csv");
    let out = run(&[
        "monotonicity",
        "--resource",
        "entanglement",
        "--dims",
        "2,2",
        "--trials",
        "200",
        "--seed",
        "11",
        "--tolerance",
        "1e-6",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let side = dir.path().join("ent.violations.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
    let first = &v.as_array().unwrap()[0];
    assert_eq!(first["verdict"], "violation");
    assert_eq!(first["reverified"], true);
    let state: StateFile = serde_json::from_value(first["reproduction"]["state"].clone()).unwrap();
    assert_eq!(state.dims, vec![2, 2]);
    assert!(state.density().is_ok());
}

#[test]
fn discriminate_bell_against_itself() {
    let dir = TempDir::new().unwrap();
    let p = write_state(dir.path(), "bell.json", &bell(), &[2, 2]);
    let p = p.to_str().unwrap();
    let v = json(&run(&[
        "discriminate",
        "--state",
        p,
        "--sigma",
        p,
        "--samples",
        "20",
    ]));
    for key in [
        "analytic_fidelity",
        "empirical_min",
        "sampled_min",
        "constructed_p_succ",
        "p_succ_sigma",
        "simplified_form",
    ] {
        assert!((f(&v[key]) - 1.0).abs() < 1e-9, "{key}: {}", v[key]);
    }
    assert_eq!(v["in_omega"], true);
}

#[test]
fn discriminate_optimizes_maximally_mixed() {
    let dir = TempDir::new().unwrap();
    let p = write_state(
        dir.path(),
        "mixed.json",
        &DensityOperator::maximally_mixed(4),
        &[2, 2],
    );
    let v = json(&run(&[
        "discriminate",
        "--state",
        p.to_str().unwrap(),
        "--optimize",
        "entanglement",
    ]));
    assert!((f(&v["optimize"]["disadvantage"]) - 0.25).abs() < 1e-12);
    assert!(f(&v["optimize"]["sum_residual"]) <= 1e-6);
    assert!((f(&v["empirical_min"]) - 0.25).abs() < 1e-9);
}

#[test]
fn discriminate_explicit_sigma_matches_fidelity() {
    let dir = TempDir::new().unwrap();
    let rho = random_density(3, 3, &mut substream(5, "cli/rho")).unwrap();
    let sigma = PureState::from_phases(&[0.0, 1.0, 2.5]).density();
    let r = write_state(dir.path(), "rho.json", &rho, &[3]);
    let s = write_state(dir.path(), "sigma.json", &sigma, &[3]);
    let v = json(&run(&[
        "discriminate",
        "--state",
        r.to_str().unwrap(),
        "--sigma",
        s.to_str().unwrap(),
    ]));
    assert!((f(&v["empirical_min"]) - f(&v["analytic_fidelity"])).abs() <= 1e-9);
    assert!(f(&v["form_difference"]) <= 1e-12);
}

#[test]
fn discriminate_rejects_non_maximal_sigma() {
    let dir = TempDir::new().unwrap();
    let rho = write_state(
        dir.path(),
        "rho.json",
        &DensityOperator::maximally_mixed(2),
        &[2],
    );
    let rho = rho.to_str().unwrap();
    let basis = write_state(
        dir.path(),
        "basis.json",
        &PureState::basis(2, 0).density(),
        &[2],
    );
    let out = run(&[
        "discriminate",
        "--state",
        rho,
        "--sigma",
        basis.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));
    let mixed = write_state(
        dir.path(),
        "mixed.json",
        &DensityOperator::maximally_mixed(2),
        &[2],
    );
    let out = run(&[
        "discriminate",
        "--state",
        rho,
        "--sigma",
        mixed.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn quick_selftest_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a_path = dir.path().join("a.json");
    let b_path = dir.path().join("b.json");
    let a = run(&[
        "selftest",
        "--suite",
        "quick",
        "--seed",
        "42",
        "--out",
        a_path.to_str().unwrap(),
    ]);
    let b = run(&[
        "selftest",
        "--suite",
        "quick",
        "--seed",
        "42",
        "--out",
        b_path.to_str().unwrap(),
    ]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        std::fs::read(&a_path).unwrap(),
        std::fs::read(&b_path).unwrap()
    );
    // exit 0 iff every criterion passed
    let report: Value = serde_json::from_slice(&std::fs::read(&a_path).unwrap()).unwrap();
    let passed = report["passed"].as_bool().unwrap();
    assert_eq!(a.status.code(), Some(if passed { 0 } else { 1 }));
    assert_eq!(report["criteria"].as_array().unwrap().len(), 10);
    assert_eq!(
        String::from_utf8(a.stdout)
            .unwrap()
            .lines()
            .filter(|l| l.contains("criterion"))
            .count(),
        10
    );
}
