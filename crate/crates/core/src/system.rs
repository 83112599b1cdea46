//! Linear quantum stochastic systems in doubled-up form.
//!
//! A system with `n` oscillator modes and `m` field channels evolves as
//!
//! ```text
//! d[a; a#] = F [a; a#] dt + G [du; du#]
//! d[y; y#] = H [a; a#] dt + K [du; du#]
//! ```
//!
//! with `F, G, H, K` doubled. A system built from a commutation matrix `Θ`,
//! a Hermitian Hamiltonian matrix `M`, a coupling matrix `N` and a unitary
//! scattering matrix `S` is physically realizable; [`realize`] performs that
//! construction and [`check_physical_realizability`] runs the frequency
//! domain test battery on an arbitrary system.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::doubled::{j_matrix, sigma_matrix, DoubledMatrix, DEFAULT_STRUCTURE_TOL};
use crate::error::{QsrError, Result};
use crate::linalg::{self, ComplexMatrix, I};

pub const DEFAULT_SAMPLE_COUNT: usize = 12;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_CHECK_TOL: f64 = 1e-8;

/// Imaginary-axis frequencies always probed first by [`default_samples`].
pub const AXIS_FREQUENCIES: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 10.0, 100.0];
/// Radius of the disk the remaining pseudo-random samples are drawn from.
pub const SAMPLE_RADIUS: f64 = 10.0;
/// Samples closer than this to a pole of either resolvent are redrawn.
pub const POLE_CLEARANCE: f64 = 1e-6;

/// `sI - F` is treated as singular below this reciprocal condition number.
pub const RESOLVENT_MIN_RCOND: f64 = 1e-14;
/// Absolute floor of the rank threshold used by [`minimality_check`].
pub const RANK_ATOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumLinearSystem {
    f: DoubledMatrix,
    g: DoubledMatrix,
    h: DoubledMatrix,
    k: DoubledMatrix,
}

impl QuantumLinearSystem {
    pub fn new(f: DoubledMatrix, g: DoubledMatrix, h: DoubledMatrix, k: DoubledMatrix) -> Result<Self> {
        let n = f.half_rows();
        let m = k.half_rows();
        let expect = |name: &str, d: &DoubledMatrix, rows: usize, cols: usize| -> Result<()> {
            if d.half_rows() != rows || d.half_cols() != cols {
                return Err(QsrError::dims(
                    format!("system matrix {name}"),
                    format!("{}x{}", 2 * rows, 2 * cols),
                    format!("{}x{}", d.rows(), d.cols()),
                ));
            }
            Ok(())
        };
        expect("F", &f, n, n)?;
        expect("K", &k, m, m)?;
        expect("G", &g, n, m)?;
        expect("H", &h, m, n)?;
        Ok(QuantumLinearSystem { f, g, h, k })
    }

    /// `n` zero-dynamics modes uncoupled from a static feedthrough `K`.
    pub fn static_gain(n_modes: usize, k: DoubledMatrix) -> Result<Self> {
        let m = k.half_rows();
        Self::new(
            DoubledMatrix::zeros(n_modes, n_modes),
            DoubledMatrix::zeros(n_modes, m),
            DoubledMatrix::zeros(m, n_modes),
            k,
        )
    }

    pub fn n_modes(&self) -> usize {
        self.f.half_rows()
    }

    pub fn m_fields(&self) -> usize {
        self.k.half_rows()
    }

    pub fn f(&self) -> &DoubledMatrix {
        &self.f
    }

    pub fn g(&self) -> &DoubledMatrix {
        &self.g
    }

    pub fn h(&self) -> &DoubledMatrix {
        &self.h
    }

    pub fn k(&self) -> &DoubledMatrix {
        &self.k
    }

    /// Applies the state change `x -> T x`: `(TFT⁻¹, TG, HT⁻¹, K)`.
    pub fn similarity(&self, t: &DoubledMatrix) -> Result<Self> {
        let (t_inv, _) = linalg::checked_inverse(&t.expand(), 1e-12, "similarity transform")?;
        let t_inv = DoubledMatrix::from_computed(&t_inv, "similarity inverse")?;
        Self::new(
            &(t * &self.f) * &t_inv,
            t * &self.g,
            &self.h * &t_inv,
            self.k.clone(),
        )
    }
}

/// Data from which a physically realizable system is built.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub theta: ComplexMatrix,
    pub m: DoubledMatrix,
    pub n: DoubledMatrix,
    pub s: ComplexMatrix,
}

impl PhysicalParams {
    /// Parameters with the canonical commutation matrix `Θ = J`.
    pub fn canonical(m: DoubledMatrix, n: DoubledMatrix, s: ComplexMatrix) -> Self {
        let theta = j_matrix(m.half_rows());
        PhysicalParams { theta, m, n, s }
    }

    pub fn n_modes(&self) -> usize {
        self.m.half_rows()
    }

    pub fn m_fields(&self) -> usize {
        self.n.half_rows()
    }

    pub fn is_canonical(&self) -> bool {
        self.theta == j_matrix(self.n_modes())
    }

    /// Checks shapes, Hermitian `M`, unitary `S`, and a Hermitian,
    /// nonsingular `Θ` with `ΣΘ#Σ = −Θ`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.n_modes();
        let m = self.m_fields();
        if !self.m.is_square() {
            return Err(QsrError::dims("Hamiltonian M", "square", format!("{}x{}", self.m.rows(), self.m.cols())));
        }
        if self.n.half_cols() != n {
            return Err(QsrError::dims("coupling N", format!("{}x{}", 2 * m, 2 * n), format!("{}x{}", self.n.rows(), self.n.cols())));
        }
        if self.s.shape() != (m, m) {
            return Err(QsrError::dims("scattering S", format!("{m}x{m}"), format!("{}x{}", self.s.nrows(), self.s.ncols())));
        }
        if self.theta.shape() != (2 * n, 2 * n) {
            return Err(QsrError::dims(
                "commutation Theta",
                format!("{}x{}", 2 * n, 2 * n),
                format!("{}x{}", self.theta.nrows(), self.theta.ncols()),
            ));
        }
        if !linalg::all_finite(&self.s) || !linalg::all_finite(&self.theta) {
            return Err(QsrError::invalid("physical parameters contain non-finite entries"));
        }

        let herm = hermiticity_residual(&self.m.expand());
        if !(herm < tol) {
            return Err(QsrError::structure("M", herm));
        }
        let unit = unitarity_residual(&self.s);
        if !(unit < tol) {
            return Err(QsrError::structure("S", unit));
        }
        let theta_herm = hermiticity_residual(&self.theta);
        let sigma = sigma_matrix(n);
        let anti = linalg::max_abs(&(&sigma * linalg::conj(&self.theta) * &sigma + &self.theta));
        let theta_rc = linalg::rcond(&self.theta);
        let theta_residual = theta_herm.max(anti);
        if !(theta_residual < tol) {
            return Err(QsrError::structure("Theta", theta_residual));
        }
        if !(theta_rc > 1e-12) {
            return Err(QsrError::SingularMatrix {
                context: "commutation matrix Theta".into(),
                rcond: theta_rc,
            });
        }
        Ok(())
    }
}

/// `‖A − A†‖_max`.
pub fn hermiticity_residual(a: &ComplexMatrix) -> f64 {
    linalg::max_abs_diff(a, &a.adjoint())
}

/// `‖S†S − I‖_max`.
pub fn unitarity_residual(s: &ComplexMatrix) -> f64 {
    linalg::max_abs_diff(&(s.adjoint() * s), &linalg::identity(s.nrows()))
}

/// Builds `F = −iΘM − ½ΘN†JN`, `G = −ΘN†JK`, `H = N`, `K = diag(S, S#)`.
pub fn realize(p: &PhysicalParams) -> Result<QuantumLinearSystem> {
    p.validate(DEFAULT_STRUCTURE_TOL)?;
    let j_m = j_matrix(p.m_fields());
    let theta = &p.theta;
    let n = p.n.expand();
    let n_dag_j = n.adjoint() * &j_m;
    let k = DoubledMatrix::block_diagonal(p.s.clone());

    let f = -(theta * p.m.expand()) * I - (theta * &n_dag_j * &n) * Complex64::new(0.5, 0.0);
    let g = -(theta * &n_dag_j * k.expand());

    QuantumLinearSystem::new(
        DoubledMatrix::from_computed(&f, "realized F")?,
        DoubledMatrix::from_computed(&g, "realized G")?,
        p.n.clone(),
        k,
    )
}

/// Canonical (`Θ = J`) parameters recovered from a system, with the
/// residuals of the two identities that must hold for them to regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalParams {
    pub params: PhysicalParams,
    /// `‖M − M†‖_max` of the recovered Hamiltonian matrix.
    pub hermiticity_residual: f64,
    /// `‖G + JN†JK‖_max`.
    pub input_residual: f64,
}

/// Inverts [`realize`] at `Θ = J`: `N = H`, `S` from `K`, and
/// `M = iJ(F + ½JN†JN)`.
pub fn extract_canonical_params(sys: &QuantumLinearSystem, tol: f64) -> Result<CanonicalParams> {
    let scattering = scattering_form_check(sys.k(), tol);
    if !scattering.passed {
        return Err(QsrError::structure("K", scattering.residual()));
    }
    let n_modes = sys.n_modes();
    let j_n = j_matrix(n_modes);
    let j_m = j_matrix(sys.m_fields());
    let n = sys.h().expand();
    let n_dag_j_n = n.adjoint() * &j_m * &n;
    let half = Complex64::new(0.5, 0.0);

    let m_full = (&j_n * (sys.f().expand() + &j_n * &n_dag_j_n * half)) * I;
    let hermiticity_residual = hermiticity_residual(&m_full);
    if !(hermiticity_residual < tol) {
        return Err(QsrError::NotRealizable {
            residual: hermiticity_residual,
        });
    }
    let g_check = sys.g().expand() + &j_n * n.adjoint() * &j_m * sys.k().expand();
    let input_residual = linalg::max_abs(&g_check);

    let m = DoubledMatrix::from_computed(&m_full, "recovered M")?;
    Ok(CanonicalParams {
        params: PhysicalParams {
            theta: j_n,
            m,
            n: sys.h().clone(),
            s: sys.k().upper_left().clone(),
        },
        hermiticity_residual,
        input_residual,
    })
}

/// `Φ(s) = H(sI − F)⁻¹G + K`.
pub fn transfer_function(sys: &QuantumLinearSystem, s: Complex64) -> Result<ComplexMatrix> {
    let f = sys.f().expand();
    let dim = f.nrows();
    let resolvent = linalg::identity(dim) * s - f;
    let (inv, _) = linalg::checked_inverse(&resolvent, RESOLVENT_MIN_RCOND, "resolvent sI - F")
        .map_err(|e| match e {
            QsrError::SingularMatrix { rcond, .. } => QsrError::SingularMatrix {
                context: format!("resolvent sI - F at s = {}{:+}i", s.re, s.im),
                rcond,
            },
            other => other,
        })?;
    Ok(sys.h().expand() * inv * sys.g().expand() + sys.k().expand())
}

/// `Φ(−s*)† J Φ(s) − J` at one point.
pub fn jj_defect(sys: &QuantumLinearSystem, s: Complex64) -> Result<ComplexMatrix> {
    let j = j_matrix(sys.m_fields());
    let phi = transfer_function(sys, s)?;
    let phi_mirror = transfer_function(sys, -s.conj())?;
    Ok(phi_mirror.adjoint() * &j * phi - j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JjReport {
    pub residual: f64,
    pub worst_sample: Complex64,
    pub tol: f64,
    pub passed: bool,
}

/// Max over `samples` of `‖Φ(−s*)†JΦ(s) − J‖_max`.
pub fn jj_unitarity_check(sys: &QuantumLinearSystem, samples: &[Complex64], tol: f64) -> Result<JjReport> {
    if samples.is_empty() {
        return Err(QsrError::invalid("(J,J)-unitarity check needs at least one sample point"));
    }
    let mut residual = 0.0_f64;
    let mut worst_sample = samples[0];
    for &s in samples {
        let r = linalg::max_abs(&jj_defect(sys, s)?);
        if r > residual {
            residual = r;
            worst_sample = s;
        }
    }
    Ok(JjReport {
        residual,
        worst_sample,
        tol,
        passed: residual < tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinimalityReport {
    pub controllability_rank: usize,
    pub observability_rank: usize,
    pub state_dim: usize,
    pub minimal: bool,
}

/// Numerical ranks of `[G, FG, …, F^{2n−1}G]` and its observability dual.
/// Singular values count when above `1e-10 + tol·σ_max`.
pub fn minimality_check(sys: &QuantumLinearSystem, tol: f64) -> MinimalityReport {
    let f = sys.f().expand();
    let g = sys.g().expand();
    let h = sys.h().expand();
    let dim = f.nrows();

    let mut ctrb = g.clone();
    let mut block = g;
    let mut obsv = h.clone();
    let mut row_block = h;
    for _ in 1..dim {
        block = &f * &block;
        ctrb = linalg::hstack(&ctrb, &block);
        row_block = &row_block * &f;
        obsv = linalg::vstack(&obsv, &row_block);
    }
    let controllability_rank = linalg::numerical_rank(&ctrb, RANK_ATOL, tol);
    let observability_rank = linalg::numerical_rank(&obsv, RANK_ATOL, tol);
    MinimalityReport {
        controllability_rank,
        observability_rank,
        state_dim: dim,
        minimal: controllability_rank == dim && observability_rank == dim,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairReport {
    pub eigenvalues: Vec<Complex64>,
    /// `min_{i ≤ j} |λi + λj|`.
    pub min_pair_sum: f64,
    pub pair: (usize, usize),
    pub passed: bool,
}

/// Tests `λi(F) + λj(F) ≠ 0` over all pairs, including `i = j`.
pub fn eigenvalue_pair_check(sys: &QuantumLinearSystem, tol: f64) -> EigenPairReport {
    let eigenvalues = linalg::eigenvalues(&sys.f().expand());
    let mut min_pair_sum = f64::INFINITY;
    let mut pair = (0, 0);
    for i in 0..eigenvalues.len() {
        for j in i..eigenvalues.len() {
            let v = (eigenvalues[i] + eigenvalues[j]).norm();
            if v < min_pair_sum {
                min_pair_sum = v;
                pair = (i, j);
            }
        }
    }
    EigenPairReport {
        passed: min_pair_sum > tol,
        eigenvalues,
        min_pair_sum,
        pair,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringReport {
    /// `‖K₂‖_max`, the upper-right block that must vanish.
    pub off_diagonal_residual: f64,
    /// `max(‖S†S − I‖, ‖SS† − I‖)` for the upper-left block `S`.
    pub unitarity_residual: f64,
    pub passed: bool,
}

impl ScatteringReport {
    pub fn residual(&self) -> f64 {
        self.off_diagonal_residual.max(self.unitarity_residual)
    }
}

/// Tests `K = diag(S, S#)` with `S†S = SS† = I`.
pub fn scattering_form_check(k: &DoubledMatrix, tol: f64) -> ScatteringReport {
    let s = k.upper_left();
    let off_diagonal_residual = linalg::max_abs(k.upper_right());
    let unitarity_residual = if s.is_square() {
        let id = linalg::identity(s.nrows());
        linalg::max_abs_diff(&(s.adjoint() * s), &id).max(linalg::max_abs_diff(&(s * s.adjoint()), &id))
    } else {
        f64::INFINITY
    };
    ScatteringReport {
        off_diagonal_residual,
        unitarity_residual,
        passed: off_diagonal_residual < tol && unitarity_residual < tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizabilityConfig {
    pub samples: Vec<Complex64>,
    pub tol: f64,
}

impl RealizabilityConfig {
    /// Default sampling for `sys` with the given count and seed.
    pub fn for_system(sys: &QuantumLinearSystem, count: usize, seed: u64, tol: f64) -> Self {
        RealizabilityConfig {
            samples: default_samples(sys, count, seed),
            tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizabilityReport {
    pub minimality: MinimalityReport,
    pub eigen_pairs: EigenPairReport,
    /// Worst `(J,J)`-unitarity defect; infinite when a sample hit a pole.
    pub jj_residual_max: f64,
    pub jj_passed: bool,
    pub jj_error: Option<String>,
    pub scattering: ScatteringReport,
    /// Hermiticity residual of the `Θ = J` Hamiltonian, when `K` has
    /// scattering form. Informational: another `Θ` may still realize the system.
    pub canonical_m_hermiticity_residual: Option<f64>,
    pub canonical_input_residual: Option<f64>,
    pub samples: Vec<Complex64>,
    pub tol: f64,
    pub verdict: Verdict,
}

/// Runs minimality, eigenvalue-pair, (J,J)-unitarity and scattering-form
/// checks. `Pass` needs all four; `Inconclusive` means the two frequency
/// domain conditions hold but a hypothesis (minimality or eigenvalue pairs)
/// does not.
pub fn check_physical_realizability(sys: &QuantumLinearSystem, cfg: &RealizabilityConfig) -> RealizabilityReport {
    let tol = cfg.tol;
    let minimality = minimality_check(sys, tol);
    let eigen_pairs = eigenvalue_pair_check(sys, tol);
    let (jj_residual_max, jj_passed, jj_error) = match jj_unitarity_check(sys, &cfg.samples, tol) {
        Ok(r) => (r.residual, r.passed, None),
        Err(e) => (f64::INFINITY, false, Some(e.to_string())),
    };
    let scattering = scattering_form_check(sys.k(), tol);

    let (canonical_m_hermiticity_residual, canonical_input_residual) = if scattering.passed {
        match extract_canonical_params(sys, f64::INFINITY) {
            Ok(c) => (Some(c.hermiticity_residual), Some(c.input_residual)),
            Err(_) => (None, None),
        }
    } else {
        (None, None)
    };

    let conditions = jj_passed && scattering.passed;
    let hypotheses = minimality.minimal && eigen_pairs.passed;
    let verdict = match (conditions, hypotheses) {
        (true, true) => Verdict::Pass,
        (true, false) => Verdict::Inconclusive,
        _ => Verdict::Fail,
    };

    RealizabilityReport {
        minimality,
        eigen_pairs,
        jj_residual_max,
        jj_passed,
        jj_error,
        scattering,
        canonical_m_hermiticity_residual,
        canonical_input_residual,
        samples: cfg.samples.clone(),
        tol,
        verdict,
    }
}

/// Sample points for rational-identity checks: `iω` for the
/// [`AXIS_FREQUENCIES`], then seeded uniform draws from the disk
/// `|s| ≤ 10`. Any point within [`POLE_CLEARANCE`] of an eigenvalue of `F`
/// or of `−F†` is replaced by a fresh draw.
pub fn default_samples(sys: &QuantumLinearSystem, count: usize, seed: u64) -> Vec<Complex64> {
    let eig = linalg::eigenvalues(&sys.f().expand());
    let poles: Vec<Complex64> = eig.iter().flat_map(|&l| [l, -l.conj()]).collect();
    samples_avoiding(&poles, count, seed)
}

/// [`default_samples`] against an explicit pole list.
pub fn samples_avoiding(poles: &[Complex64], count: usize, seed: u64) -> Vec<Complex64> {
    let clear = |s: Complex64| poles.iter().all(|p| (s - p).norm() > POLE_CLEARANCE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| loop {
        let radius = SAMPLE_RADIUS * rng.random::<f64>().sqrt();
        let angle = std::f64::consts::TAU * rng.random::<f64>();
        let s = Complex64::from_polar(radius, angle);
        if clear(s) {
            break s;
        }
    };

    let mut out = Vec::with_capacity(count);
    for &w in AXIS_FREQUENCIES.iter().take(count) {
        let s = Complex64::new(0.0, w);
        out.push(if clear(s) { s } else { draw(&mut rng) });
    }
    while out.len() < count {
        out.push(draw(&mut rng));
    }
    out
}
