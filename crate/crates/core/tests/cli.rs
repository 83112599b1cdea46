use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use qsr::cli::{EXIT_FAIL, EXIT_NUMERICAL, EXIT_PASS, EXIT_USAGE};
use qsr::random;
use qsr::wire::{self, Document, Payload, ReportDocument};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn qsr(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qsr"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn qsr");
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn example(args: &[&str]) -> Vec<u8> {
    let mut full = vec!["example", "cavity-squeezer"];
    full.extend_from_slice(args);
    let o = qsr(&full, b"");
    assert_eq!(code(&o), EXIT_PASS, "{}", stderr(&o));
    o.stdout
}

fn write(dir: &Path, name: &str, doc: &Document) -> String {
    let path = dir.join(name);
    wire::save_document(doc, &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn realize_then_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let p = random::physical_params(&mut ChaCha8Rng::seed_from_u64(8), 2, 2);
    let params = write(dir.path(), "params.json", &Document::new(Payload::PhysicalParams(p)));
    let sys_path = dir.path().join("sys.json");

    let o = qsr(&["realize", &params, "-o", sys_path.to_str().unwrap()], b"");
    assert_eq!(code(&o), EXIT_PASS, "{}", stderr(&o));
    assert!(o.stdout.is_empty());

    let o = qsr(&["check", sys_path.to_str().unwrap()], b"");
    assert_eq!(code(&o), EXIT_PASS, "{}", stderr(&o));
    let report = ReportDocument::parse(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(report.verdict, "pass");
    assert_eq!(report.command, "check");
    assert_eq!(report.inputs["document"], wire::digest(&std::fs::read(&sys_path).unwrap()));
    assert!(stderr(&o).starts_with("check: pass"));
}

#[test]
fn check_residuals_equal_library_values() {
    let sys_bytes = example(&["--k1", "0.5", "--k2", "2", "--gamma", "3", "--chi", "0.2,0.4"]);
    let o = qsr(&["check", "-", "--seed", "9", "--samples", "7"], &sys_bytes);
    let report = ReportDocument::parse(std::str::from_utf8(&o.stdout).unwrap()).unwrap();

    let Payload::System(sys) = wire::parse_document(std::str::from_utf8(&sys_bytes).unwrap()).unwrap().payload else {
        panic!("expected a system document");
    };
    let cfg = qsr::system::RealizabilityConfig::for_system(&sys, 7, 9, 1e-8);
    let lib = qsr::system::check_physical_realizability(&sys, &cfg);
    assert_eq!(report.residuals["jj_unitarity"], Some(lib.jj_residual_max));
    assert_eq!(report.residuals["scattering_unitarity"], Some(lib.scattering.unitarity_residual));
    assert_eq!(report.samples_used.len(), 7);
    for (w, s) in report.samples_used.iter().zip(&lib.samples) {
        assert_eq!(w, &[s.re, s.im]);
    }
    assert_eq!(report.verdict, lib.verdict.as_str());
}

#[test]
fn check_is_byte_deterministic() {
    let sys = example(&["--k1", "1", "--k2", "4", "--gamma", "1", "--chi", "0.3,-0.1", "--epsilon", "0.05"]);
    let a = qsr(&["check", "--seed", "5"], &sys);
    let b = qsr(&["check", "--seed", "5"], &sys);
    assert_eq!(code(&a), code(&b));
    assert_eq!(a.stdout, b.stdout);
    let c = qsr(&["check", "--seed", "6"], &sys);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn check_reports_failure_for_non_physical_system() {
    // K = 2I is not a scattering matrix.
    let text = r#"{"qsr_version": 1, "kind": "system", "payload": {
        "f": {"r1": [[[-1, 0]]], "r2": [[[0, 0]]]},
        "g": {"r1": [[[1, 0]]], "r2": [[[0, 0]]]},
        "h": {"r1": [[[1, 0]]], "r2": [[[0, 0]]]},
        "k": {"r1": [[[2, 0]]], "r2": [[[0, 0]]]}}}"#;
    let o = qsr(&["check"], text.as_bytes());
    assert_eq!(code(&o), EXIT_FAIL);
    let report = ReportDocument::parse(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(report.verdict, "fail");
    assert_eq!(report.residuals["scattering_unitarity"], Some(3.0));
}

#[test]
fn singular_fast_dynamics_exit_three() {
    let ps = example(&["--k1", "1", "--k2", "1", "--gamma", "2", "--chi", "1,0", "--emit", "perturbed"]);
    let o = qsr(&["reduce", "-"], &ps);
    assert_eq!(code(&o), EXIT_NUMERICAL);
    assert!(stderr(&o).contains("SingularFastDynamics"));
    assert!(o.stdout.is_empty());

    let sc = example(&["--k1", "1", "--k2", "1", "--gamma", "2", "--chi", "0,1", "--emit", "special-class"]);
    assert_eq!(code(&qsr(&["decompose"], &sc)), EXIT_NUMERICAL);
}

#[test]
fn decompose_reports_all_residuals() {
    let sc = example(&["--k1", "1", "--k2", "1", "--gamma", "2", "--chi", "0.5,0", "--emit", "special-class"]);
    let o = qsr(&["decompose", "--tol", "1e-9"], &sc);
    assert_eq!(code(&o), EXIT_PASS, "{}", stderr(&o));
    let report = ReportDocument::parse(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    for key in [
        "m_tilde_hermiticity",
        "m_tilde_structure",
        "n_tilde_structure",
        "k_tilde_structure",
        "k_tilde_bogoliubov",
        "reconstruction",
        "g_identity",
        "m_tilde_formula_gap",
    ] {
        let v = report.residuals[key].expect(key);
        assert!(v < 1e-9, "{key}: {v}");
    }
    assert_eq!(report.outputs["static_part_is_scattering"], false);
    let b = &report.outputs["static_part"]["b"]["r1"][0][0];
    assert!((b[0].as_f64().unwrap() + 5.0 / 3.0).abs() < 1e-12);
}

#[test]
fn cavity_params_document_drives_every_reduction_command() {
    let params = example(&["--k1", "1", "--k2", "4", "--gamma", "1", "--chi", "0,0", "--emit", "params"]);
    let o = qsr(&["reduce"], &params);
    assert_eq!(code(&o), EXIT_PASS);
    let reduced = o.stdout;
    let o = qsr(&["respond", "--s", "0,1", "--s", "-0.3,2"], &reduced);
    assert_eq!(code(&o), EXIT_PASS, "{}", stderr(&o));
    let report = ReportDocument::parse(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    // Φ₀(i) = (½ − i)/(½ + i) = −0.6 − 0.8i
    let phi = &report.outputs["transfer"][0]["phi"][0][0];
    assert!((phi[0].as_f64().unwrap() + 0.6).abs() < 1e-12);
    assert!((phi[1].as_f64().unwrap() + 0.8).abs() < 1e-12);
    assert_eq!(report.samples_used, vec![[0.0, 1.0], [-0.3, 2.0]]);

    assert_eq!(code(&qsr(&["decompose"], &params)), EXIT_PASS);

    let o = qsr(&["converge", "--s", "0,1", "--eps", "1e-1,1e-2,1e-3"], &params);
    assert_eq!(code(&o), EXIT_PASS, "{}", stderr(&o));
    let report = ReportDocument::parse(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    let rows = report.outputs["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0]["expansion_order"].is_null());
    let order = rows[2]["expansion_order"].as_f64().unwrap();
    assert!((order - 1.9753167616809).abs() < 1e-6);
}

#[test]
fn converge_on_decoupled_system_reports_exact() {
    let text = r#"{"qsr_version": 1, "kind": "perturbed", "payload": {
        "fa": {"r1": [[[-1, 0]]], "r2": [[[0, 0]]]},
        "fb": {"r1": [[[0, 0]]], "r2": [[[0, 0]]]},
        "fc": {"r1": [[[0, 0]]], "r2": [[[0, 0]]]},
        "fd": {"r1": [[[-2, 0]]], "r2": [[[0, 0]]]},
        "ga": {"r1": [[[1, 0]]], "r2": [[[0, 0]]]},
        "gb": {"r1": [[[0, 0]]], "r2": [[[0, 0]]]},
        "ha": {"r1": [[[1, 0]]], "r2": [[[0, 0]]]},
        "hb": {"r1": [[[0, 0]]], "r2": [[[0, 0]]]},
        "k": {"r1": [[[1, 0]]], "r2": [[[0, 0]]]}}}"#;
    let o = qsr(&["converge", "--s", "0,1", "--eps", "0.1,0.01"], text.as_bytes());
    assert_eq!(code(&o), EXIT_PASS, "{}", stderr(&o));
    let report = ReportDocument::parse(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(report.outputs["rows"][1]["expansion_order"], "exact");
    assert_eq!(report.tolerance, None);
}

#[test]
fn input_errors_exit_two() {
    let o = qsr(&["check", "/nonexistent/sys.json"], b"");
    assert_eq!(code(&o), EXIT_USAGE);
    let o = qsr(&["check"], b"{\"qsr_version\": 1,\n \"kind\": \"system\",\n \"payload\": [}");
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let o = qsr(&["converge", "--s", "0,1", "--eps", "0.01,0.1"], &example(&["--k1", "1", "--k2", "4", "--gamma", "1", "--chi", "0,0", "--emit", "params"]));
    assert_eq!(code(&o), EXIT_USAGE);
    let o = qsr(&["example", "cavity-squeezer", "--k1", "1"], b"");
    assert_eq!(code(&o), EXIT_USAGE);
}

#[test]
fn structure_violation_names_field() {
    let text = r#"{"qsr_version": 1, "kind": "system", "payload": {
        "f": {"full": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]},
        "g": {"r1": [[[0, 0]]], "r2": [[[0, 0]]]},
        "h": {"r1": [[[0, 0]]], "r2": [[[0, 0]]]},
        "k": {"r1": [[[1, 0]]], "r2": [[[0, 0]]]}}}"#;
    let o = qsr(&["check"], text.as_bytes());
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(stderr(&o).contains("structure violation in F"), "{}", stderr(&o));
}
