use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use qsr::doubled::{self, j_matrix, DoubledMatrix};
use qsr::linalg::{self, ComplexMatrix};
use qsr::perturbation;
use qsr::special_class;
use qsr::system::{self, transfer_function};
use qsr::{random, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x51ab),
        failure_persistence: None,
        ..Config::default()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn product_of_doubled_is_doubled(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4, k in 1usize..=4) {
        let mut r = rng(seed);
        let a = random::doubled(&mut r, n, m);
        let b = random::doubled(&mut r, m, k);
        let prod = a.expand() * b.expand();
        prop_assert!(doubled::is_doubled(&prod, 1e-12).unwrap().passed);
        let blockwise = (&a * &b).expand();
        prop_assert!(linalg::max_abs_diff(&blockwise, &prod) < 1e-12);
    }

    #[test]
    fn dagger_of_doubled_is_doubled(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
        let d = random::doubled(&mut rng(seed), n, m);
        let adj = d.expand().adjoint();
        prop_assert_eq!(doubled::is_doubled(&adj, 1e-15).unwrap().residual, 0.0);
        prop_assert_eq!(d.dagger().expand(), adj);
    }

    #[test]
    fn contract_inverts_expand(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
        let d = random::doubled(&mut rng(seed), n, m);
        prop_assert_eq!(doubled::contract(&d.expand(), 1e-15).unwrap(), d);
    }

    #[test]
    fn realize_extract_roundtrip(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=2) {
        let p = random::physical_params(&mut rng(seed), n, m);
        let sys = system::realize(&p).unwrap();
        let back = system::extract_canonical_params(&sys, 1e-10).unwrap();
        prop_assert!(linalg::max_abs_diff(&back.params.m.expand(), &p.m.expand()) < 1e-10);
        prop_assert!(linalg::max_abs_diff(&back.params.n.expand(), &p.n.expand()) < 1e-10);
        prop_assert!(linalg::max_abs_diff(&back.params.s, &p.s) < 1e-10);
        let samples = system::default_samples(&sys, 12, 42);
        prop_assert!(system::jj_unitarity_check(&sys, &samples, 1e-8).unwrap().passed);
    }

    #[test]
    fn jj_defect_small_over_wide_band(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=2, log_r in -1.0f64..2.0, angle in 0.0f64..std::f64::consts::TAU) {
        let sys = system::realize(&random::physical_params(&mut rng(seed), n, m)).unwrap();
        let s = Complex64::from_polar(10f64.powf(log_r), angle);
        let poles = linalg::eigenvalues(&sys.f().expand());
        prop_assume!(poles.iter().all(|p| (s - p).norm() > 1e-3 && (s + p.conj()).norm() > 1e-3));
        let defect = system::jj_defect(&sys, s).unwrap();
        prop_assert!(linalg::max_abs(&defect) < 1e-7, "{}", linalg::max_abs(&defect));
    }

    #[test]
    fn transfer_function_is_similarity_invariant(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=2) {
        let mut r = rng(seed);
        let sys = system::realize(&random::physical_params(&mut r, n, m)).unwrap();
        let t = random::doubled(&mut r, n, n);
        prop_assume!(linalg::rcond(&t.expand()) > 1e-2);
        let moved = sys.similarity(&t).unwrap();
        for s in system::default_samples(&sys, 12, 42) {
            let a = transfer_function(&sys, s).unwrap();
            let b = transfer_function(&moved, s).unwrap();
            prop_assert!(linalg::max_abs_diff(&a, &b) < 1e-8);
        }
    }
}

/// `(F₀, G₀, H₀, K₀)` from the expanded blocks, without projection.
fn raw_schur(ps: &perturbation::PerturbedSystem) -> [ComplexMatrix; 4] {
    let fd_inv = ps.fd().expand().try_inverse().unwrap();
    let (fb, fc, gb, hb) = (ps.fb().expand(), ps.fc().expand(), ps.gb().expand(), ps.hb().expand());
    [
        ps.fa().expand() - &fb * &fd_inv * &fc,
        ps.ga().expand() - &fb * &fd_inv * &gb,
        ps.ha().expand() - &hb * &fd_inv * &fc,
        ps.k().expand() - &hb * &fd_inv * &gb,
    ]
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn reduction_is_jj_unitary(seed in any::<u64>(), n1 in 1usize..=2, n2 in 1usize..=2, m in 1usize..=2) {
        let p = random::special_class_params(&mut rng(seed), n1, n2, m);
        let ps = special_class::to_perturbed(&p).unwrap();
        let reduced = perturbation::reduce(&ps).unwrap();
        let samples = system::default_samples(&reduced, 12, 42);
        let r = system::jj_unitarity_check(&reduced, &samples, 1e-8).unwrap();
        prop_assert!(r.passed, "{}", r.residual);

        let direct = special_class::reduce_special(&p).unwrap();
        for (a, b) in [(direct.f(), reduced.f()), (direct.g(), reduced.g()), (direct.h(), reduced.h()), (direct.k(), reduced.k())] {
            prop_assert!(linalg::max_abs_diff(&a.expand(), &b.expand()) < 1e-10);
        }
        let r = system::jj_unitarity_check(&direct, &samples, 1e-8).unwrap();
        prop_assert!(r.passed);
    }

    #[test]
    fn schur_complement_keeps_doubled_structure(seed in any::<u64>(), n1 in 1usize..=3, n2 in 1usize..=3, m in 1usize..=3) {
        let mut r = rng(seed);
        let blocks = perturbation::PerturbedBlocks {
            fa: random::doubled(&mut r, n1, n1),
            fb: random::doubled(&mut r, n1, n2),
            fc: random::doubled(&mut r, n2, n1),
            fd: random::doubled(&mut r, n2, n2),
            ga: random::doubled(&mut r, n1, m),
            gb: random::doubled(&mut r, n2, m),
            ha: random::doubled(&mut r, m, n1),
            hb: random::doubled(&mut r, m, n2),
            k: random::doubled(&mut r, m, m),
        };
        prop_assume!(linalg::rcond(&blocks.fd.expand()) > 1e-3);
        let ps = perturbation::PerturbedSystem::new(blocks).unwrap();
        for raw in raw_schur(&ps) {
            let scale = 1.0 + linalg::max_abs(&raw);
            prop_assert!(doubled::is_doubled(&raw, 1e-12 * scale).unwrap().passed);
        }
        let reduced = perturbation::reduce(&ps).unwrap();
        for block in [reduced.f(), reduced.g(), reduced.h(), reduced.k()] {
            prop_assert!(doubled::is_doubled(&block.expand(), 1e-12).unwrap().passed);
        }
    }

    #[test]
    fn tiny_eps_matches_first_order_prediction(seed in any::<u64>(), n1 in 1usize..=2, n2 in 1usize..=2, m in 1usize..=2) {
        let p = random::special_class_params(&mut rng(seed), n1, n2, m);
        let ps = special_class::to_perturbed(&p).unwrap();
        let full = perturbation::assemble(&ps, 1e-8).unwrap();
        let reduced = perturbation::reduce(&ps).unwrap();
        for s in system::default_samples(&reduced, 12, 42) {
            let gap = transfer_function(&full, s).unwrap() - transfer_function(&reduced, s).unwrap();
            let predicted = perturbation::first_order_term(&ps, s).unwrap() * c(1e-8);
            let miss = linalg::max_abs_diff(&gap, &predicted);
            prop_assert!(miss < 1e-7, "s = {s}: {miss}");
        }
    }

    #[test]
    fn tiny_eps_tracks_reduction_with_separated_fast_block(seed in any::<u64>(), n1 in 1usize..=2, n2 in 1usize..=2, m in 1usize..=2) {
        let mut p = random::special_class_params(&mut rng(seed), n1, n2, m);
        p.md = p.md.scale(10.0);
        let ps = special_class::to_perturbed(&p).unwrap();
        prop_assume!(linalg::singular_values(&ps.fd().expand()).iter().all(|&v| v >= 1.0));
        let full = perturbation::assemble(&ps, 1e-8).unwrap();
        let reduced = perturbation::reduce(&ps).unwrap();
        for s in system::default_samples(&reduced, 12, 42) {
            let gap = linalg::max_abs_diff(&transfer_function(&full, s).unwrap(), &transfer_function(&reduced, s).unwrap());
            prop_assert!(gap < 1e-5, "s = {s}: {gap}");
        }
    }

    #[test]
    fn expansion_residual_has_quadratic_envelope(seed in any::<u64>(), n1 in 1usize..=2, n2 in 1usize..=2, m in 1usize..=2) {
        let p = random::special_class_params(&mut rng(seed), n1, n2, m);
        let ps = special_class::to_perturbed(&p).unwrap();
        let s = Complex64::new(0.0, 1.0);
        prop_assume!(perturbation::first_order_term(&ps, s).is_ok());
        let eps = [1e-2, 5e-3, 1e-3, 5e-4, 1e-4];
        let res: Vec<f64> = eps.iter().map(|&e| perturbation::expansion_residual(&ps, e, s).unwrap()).collect();
        // Constant from the two largest steps, with headroom for the
        // pre-asymptotic regime.
        let c = 2.0 * (res[0] / (eps[0] * eps[0])).max(res[1] / (eps[1] * eps[1]));
        for (e, r) in eps.iter().zip(&res) {
            prop_assert!(*r <= c * e * e + 1e-12, "eps {e}: {r} > {}", c * e * e);
        }
    }

    #[test]
    fn decomposition_identities(seed in any::<u64>(), n1 in 1usize..=2, n2 in 1usize..=2, m in 1usize..=2) {
        let p = random::special_class_params(&mut rng(seed), n1, n2, m);
        let report = special_class::verify_decomposition(&p, 1e-9).unwrap();
        prop_assert!(report.passed, "{report:?}");
        prop_assert!(report.n_tilde_structure < 1e-10 && report.k_tilde_structure < 1e-10);

        let d = special_class::decompose(&p).unwrap();
        let k = d.static_part.matrix().expand();
        let j = j_matrix(m);
        let id: ComplexMatrix = DMatrix::identity(2 * m, 2 * m);
        prop_assert!(linalg::max_abs_diff(&(&j * k.adjoint() * &j * &k), &id) < 1e-9);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn cavity_reduction_is_jj_unitary(
        k1 in 0.0f64..4.0,
        k2 in 0.0f64..4.0,
        gamma in 0.1f64..5.0,
        chi_r in 0.0f64..3.0,
        chi_phase in 0.0f64..std::f64::consts::TAU,
    ) {
        let chi = Complex64::from_polar(chi_r, chi_phase);
        prop_assume!((chi_r - gamma / 2.0).abs() > 1e-2);
        let p = qsr::cavity::CavitySqueezerParams::new(k1, k2, gamma, chi).unwrap();
        let (sys, _) = qsr::cavity::reduced_reference(&p).unwrap();
        let samples = system::default_samples(&sys, 12, 42);
        let r = system::jj_unitarity_check(&sys, &samples, 1e-8).unwrap();
        prop_assert!(r.passed, "{}", r.residual);
        if chi_r == 0.0 {
            prop_assert!(linalg::max_abs_diff(&sys.k().expand(), &(linalg::identity(2) * c(-1.0))) < 1e-12);
        }
    }
}

#[test]
fn structure_constants_are_exact() {
    for m in 1..=8 {
        let sc = doubled::structure_matrices(m).unwrap();
        let id = linalg::identity(2 * m);
        assert_eq!(&sc.j * &sc.j, id);
        assert_eq!(&sc.sigma * &sc.sigma, id);
        assert_eq!(&sc.sigma * &sc.j * &sc.sigma, -&sc.j);
    }
}

#[test]
fn scalar_doubled_products() {
    let a = DoubledMatrix::scaled_identity(2, 3.0);
    let b = DoubledMatrix::scaled_identity(2, -0.5);
    assert_eq!(&a * &b, DoubledMatrix::scaled_identity(2, -1.5));
}
