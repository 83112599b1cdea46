//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use qsr::cavity::{self, CavitySqueezerParams};
use qsr::linalg::{self, ComplexMatrix};
use qsr::perturbation::{self, LocalOrder};
use qsr::special_class::{self, SpecialClassParams};
use qsr::system::{self, RealizabilityConfig, Verdict};
use qsr::{random, Complex64, QsrError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SUITE: u64 = 100;

struct Outcome {
    passed: bool,
    detail: String,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn within_budget(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

fn special_suite() -> Vec<SpecialClassParams> {
    (0..SUITE)
        .map(|i| {
            let (n1, n2, m) = (1 + (i % 2) as usize, 1 + (i / 2 % 2) as usize, 1 + (i / 4 % 2) as usize);
            random::special_class_params(&mut ChaCha8Rng::seed_from_u64(1000 + i), n1, n2, m)
        })
        .collect()
}

fn realizability_roundtrip() -> Outcome {
    let start = Instant::now();
    let (mut worst_roundtrip, mut worst_jj, mut passing) = (0.0f64, 0.0f64, 0);
    for i in 0..SUITE {
        let (n, m) = (1 + (i % 3) as usize, 1 + (i / 3 % 2) as usize);
        let p = random::physical_params(&mut ChaCha8Rng::seed_from_u64(i), n, m);
        let sys = system::realize(&p).expect("realize");
        let back = system::extract_canonical_params(&sys, 1e-10).expect("extract");
        let roundtrip = linalg::max_abs_diff(&back.params.m.expand(), &p.m.expand())
            .max(linalg::max_abs_diff(&back.params.n.expand(), &p.n.expand()))
            .max(linalg::max_abs_diff(&back.params.s, &p.s));
        let report = system::check_physical_realizability(&sys, &RealizabilityConfig::for_system(&sys, 12, 42, 1e-8));
        worst_roundtrip = worst_roundtrip.max(roundtrip);
        worst_jj = worst_jj.max(report.jj_residual_max);
        if roundtrip < 1e-10 && report.jj_residual_max < 1e-8 && report.verdict == Verdict::Pass {
            passing += 1;
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: passing == SUITE && within_budget(elapsed, 5.0),
        detail: format!(
            "realizability roundtrip: {passing}/{SUITE} pass, max roundtrip {worst_roundtrip:.2e}, max jj {worst_jj:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn reduction_suite(params: &[SpecialClassParams]) -> Outcome {
    let start = Instant::now();
    let (mut worst_jj, mut worst_gap, mut passing) = (0.0f64, 0.0f64, 0);
    for p in params {
        let reduced = perturbation::reduce(&special_class::to_perturbed(p).expect("to_perturbed")).expect("reduce");
        let direct = special_class::reduce_special(p).expect("reduce_special");
        let samples = system::default_samples(&reduced, 12, 42);
        let jj = system::jj_unitarity_check(&reduced, &samples, 1e-8).expect("jj").residual;
        let gap = [
            (reduced.f(), direct.f()),
            (reduced.g(), direct.g()),
            (reduced.h(), direct.h()),
            (reduced.k(), direct.k()),
        ]
        .iter()
        .map(|(a, b)| linalg::max_abs_diff(&a.expand(), &b.expand()))
        .fold(0.0, f64::max);
        worst_jj = worst_jj.max(jj);
        worst_gap = worst_gap.max(gap);
        if jj < 1e-8 && gap < 1e-10 {
            passing += 1;
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: passing == params.len() && within_budget(elapsed, 10.0),
        detail: format!(
            "reduced special class is (J,J)-unitary: {passing}/{} pass, max jj {worst_jj:.2e}, max route gap {worst_gap:.2e}, {:.2}s",
            params.len(),
            elapsed.as_secs_f64()
        ),
    }
}

fn decomposition_suite(params: &[SpecialClassParams]) -> Outcome {
    let start = Instant::now();
    let (mut worst, mut worst_formula, mut passing) = (0.0f64, 0.0f64, 0);
    for p in params {
        let report = special_class::verify_decomposition(p, 1e-9).expect("verify_decomposition");
        worst = worst.max(report.max_residual());
        worst_formula = worst_formula.max(report.m_tilde_formula_gap);
        if report.passed {
            passing += 1;
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: passing == params.len() && within_budget(elapsed, 10.0),
        detail: format!(
            "decomposition identities: {passing}/{} pass, max residual {worst:.2e}, max M~ formula gap {worst_formula:.2e}, {:.2}s",
            params.len(),
            elapsed.as_secs_f64()
        ),
    }
}

fn expansion_orders() -> Outcome {
    let start = Instant::now();
    let p = CavitySqueezerParams::new(1.0, 4.0, 1.0, c(0.0)).unwrap();
    let rows = perturbation::convergence_probe(&cavity::build_perturbed(&p).unwrap(), Complex64::new(0.0, 1.0), &[1e-1, 1e-2, 1e-3])
        .expect("convergence probe");
    let value = |o: Option<LocalOrder>| o.and_then(|o| o.value()).unwrap_or(f64::NAN);
    let corrected: Vec<f64> = rows[1..].iter().map(|r| value(r.local_order)).collect();
    let raw: Vec<f64> = rows[1..].iter().map(|r| value(r.raw_order)).collect();
    let elapsed = start.elapsed();
    let ok = corrected.iter().all(|o| (1.8..=2.2).contains(o))
        && raw.iter().all(|o| (0.8..=1.2).contains(o))
        && within_budget(elapsed, 1.0);
    let fmt = |v: &[f64]| v.iter().map(|o| format!("{o:.4}")).collect::<Vec<_>>().join(", ");
    Outcome {
        passed: ok,
        detail: format!(
            "O(eps^2) expansion at s=i: corrected orders [{}] (band 1.8..2.2), raw orders [{}] (band 0.8..1.2), {:.3}s",
            fmt(&corrected),
            fmt(&raw),
            elapsed.as_secs_f64()
        ),
    }
}

fn qsr_pipe(args: &[&str], stdin: &[u8]) -> std::process::Output {
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

fn example_fixtures() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();

    // (a) perfect-mirror limit
    let (sys, _) = cavity::reduced_reference(&CavitySqueezerParams::new(1.0, 1.0, 1.0, c(0.0)).unwrap()).unwrap();
    let minus_i = -linalg::identity(2);
    let mut a = linalg::max_abs(&sys.f().expand())
        .max(linalg::max_abs(&sys.g().expand()))
        .max(linalg::max_abs(&sys.h().expand()))
        .max(linalg::max_abs_diff(&sys.k().expand(), &minus_i));
    for s in system::default_samples(&sys, 12, 42) {
        a = a.max(linalg::max_abs_diff(&system::transfer_function(&sys, s).unwrap(), &minus_i));
    }
    let a_ok = a < 1e-12;
    notes.push(format!("(a) {a:.1e}"));

    // (b) squeezing static part
    let sc = cavity::special_class_params(&CavitySqueezerParams::new(1.0, 1.0, 2.0, c(0.5)).unwrap()).unwrap();
    let d = special_class::decompose(&sc).unwrap();
    let expected = ComplexMatrix::from_row_slice(2, 2, &[c(-5.0 / 3.0), c(4.0 / 3.0), c(4.0 / 3.0), c(-5.0 / 3.0)]);
    let b = d.static_part.matrix();
    let k_gap = linalg::max_abs_diff(&b.expand(), &expected);
    let (b1, b2) = (b.upper_left()[(0, 0)], b.upper_right()[(0, 0)]);
    let det_gap = (b1.norm_sqr() - b2.norm_sqr() - 1.0).abs();
    let b_ok = k_gap < 1e-12 && det_gap < 1e-12;
    notes.push(format!("(b) K~ {k_gap:.1e}, |B1|^2-|B2|^2-1 {det_gap:.1e}"));

    // (c) singular fast block, in the library and through the CLI
    let singular = CavitySqueezerParams::new(1.0, 1.0, 2.0, c(1.0)).unwrap();
    let lib_ok = matches!(cavity::reduced_reference(&singular), Err(QsrError::SingularFastDynamics { .. }));
    let doc = qsr_pipe(
        &["example", "cavity-squeezer", "--k1", "1", "--k2", "1", "--gamma", "2", "--chi", "1,0", "--emit", "perturbed"],
        b"",
    );
    let reduce = qsr_pipe(&["reduce", "-"], &doc.stdout);
    let cli_code = reduce.status.code();
    let c_ok = lib_ok && cli_code == Some(3) && String::from_utf8_lossy(&reduce.stderr).contains("SingularFastDynamics");
    notes.push(format!("(c) library {}, cli exit {:?}", if lib_ok { "SingularFastDynamics" } else { "no error" }, cli_code));

    let elapsed = start.elapsed();
    Outcome {
        passed: a_ok && b_ok && c_ok && within_budget(elapsed, 1.0),
        detail: format!("example fixtures: {}, {:.3}s", notes.join("; "), elapsed.as_secs_f64()),
    }
}

fn cli_determinism() -> Outcome {
    let start = Instant::now();
    let run = || {
        let example = qsr_pipe(&["example", "cavity-squeezer", "--k1", "1", "--k2", "4", "--gamma", "1", "--chi", "0,0"], b"");
        let check = qsr_pipe(&["check", "--seed", "42"], &example.stdout);
        (example.status.code(), check.status.code(), check.stdout)
    };
    let first = run();
    let second = run();
    let elapsed = start.elapsed();
    let ok = first.0 == Some(0) && first.1 == Some(0) && first == second && !first.2.is_empty() && within_budget(elapsed, 1.0);
    Outcome {
        passed: ok,
        detail: format!(
            "cli determinism: exit codes {:?}/{:?}, reports identical {} ({} bytes), {:.3}s",
            first.0,
            first.1,
            first.2 == second.2,
            first.2.len(),
            elapsed.as_secs_f64()
        ),
    }
}

fn main() {
    let params = special_suite();
    let results = [
        realizability_roundtrip(),
        reduction_suite(&params),
        decomposition_suite(&params),
        expansion_orders(),
        example_fixtures(),
        cli_determinism(),
    ];
    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        println!("criterion {} [{}] {}", i + 1, if r.passed { "PASS" } else { "FAIL" }, r.detail);
        if !r.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
