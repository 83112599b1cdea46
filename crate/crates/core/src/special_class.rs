//! Systems whose Hamiltonian and coupling are singularly perturbed.
//!
//! With `Θ = J`, the Hamiltonian blocks scale as `Ma`, `Mb/√ε`, `Mc/√ε`,
//! `Md/ε` and the coupling blocks as `Na`, `Nb/√ε`. After rescaling the fast
//! modes by `1/√ε` the family takes the perturbed form with ε-free blocks
//! ([`to_perturbed`]). Its `ε = 0` reduction is generally not physically
//! realizable, but factors as a static Bogoliubov transformation `K̃` at the
//! input followed by the realizable system built from `(M̃, Ñ, I)`
//! ([`decompose`]).

use num_complex::Complex64;

use crate::doubled::{self, j_matrix, CheckReport, DoubledMatrix, DEFAULT_STRUCTURE_TOL};
use crate::error::{QsrError, Result};
use crate::linalg::{self, ComplexMatrix, I};
use crate::perturbation::{self, PerturbedBlocks, PerturbedSystem};
use crate::system::{self, hermiticity_residual, unitarity_residual, PhysicalParams, QuantumLinearSystem};

/// Agreement required between the two independent `M̃` evaluations,
/// relative to `1 + ‖M̃‖_max`.
pub const M_TILDE_AGREEMENT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SpecialClassParams {
    pub ma: DoubledMatrix,
    pub mb: DoubledMatrix,
    pub mc: DoubledMatrix,
    pub md: DoubledMatrix,
    pub na: DoubledMatrix,
    pub nb: DoubledMatrix,
    pub s: ComplexMatrix,
}

impl SpecialClassParams {
    pub fn n_slow(&self) -> usize {
        self.ma.half_rows()
    }

    pub fn n_fast(&self) -> usize {
        self.md.half_rows()
    }

    pub fn m_fields(&self) -> usize {
        self.na.half_rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsValidation {
    /// Shape problem, if any; the residuals below are then not computed.
    pub dimension_error: Option<String>,
    pub ma_hermiticity: f64,
    pub md_hermiticity: f64,
    /// `‖Mc − Mb†‖_max`.
    pub mc_mb_dagger: f64,
    pub s_unitarity: f64,
    pub tol: f64,
    pub passed: bool,
}

impl ParamsValidation {
    /// Name and residual of the worst offending field.
    pub fn worst(&self) -> (&'static str, f64) {
        [
            ("Ma", self.ma_hermiticity),
            ("Md", self.md_hermiticity),
            ("Mc", self.mc_mb_dagger),
            ("S", self.s_unitarity),
        ]
        .into_iter()
        .fold(("Ma", f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
    }
}

fn check_dims(p: &SpecialClassParams) -> std::result::Result<(), String> {
    let (n1, n2, m) = (p.n_slow(), p.n_fast(), p.m_fields());
    let shapes: [(&str, &DoubledMatrix, usize, usize); 6] = [
        ("Ma", &p.ma, n1, n1),
        ("Mb", &p.mb, n1, n2),
        ("Mc", &p.mc, n2, n1),
        ("Md", &p.md, n2, n2),
        ("Na", &p.na, m, n1),
        ("Nb", &p.nb, m, n2),
    ];
    for (name, d, r, c) in shapes {
        if d.half_rows() != r || d.half_cols() != c {
            return Err(format!(
                "{name} is {}x{}, expected {}x{}",
                d.rows(),
                d.cols(),
                2 * r,
                2 * c
            ));
        }
    }
    if p.s.shape() != (m, m) {
        return Err(format!("S is {}x{}, expected {m}x{m}", p.s.nrows(), p.s.ncols()));
    }
    Ok(())
}

/// Residuals of the constraints that make the whole ε-family physically
/// realizable: Hermitian `Ma` and `Md`, `Mc = Mb†`, unitary `S`. Doubled
/// structure of every block holds by construction.
pub fn validate_params(p: &SpecialClassParams, tol: f64) -> ParamsValidation {
    if let Err(msg) = check_dims(p) {
        return ParamsValidation {
            dimension_error: Some(msg),
            ma_hermiticity: f64::INFINITY,
            md_hermiticity: f64::INFINITY,
            mc_mb_dagger: f64::INFINITY,
            s_unitarity: f64::INFINITY,
            tol,
            passed: false,
        };
    }
    let ma_hermiticity = hermiticity_residual(&p.ma.expand());
    let md_hermiticity = hermiticity_residual(&p.md.expand());
    let mc_mb_dagger = linalg::max_abs_diff(&p.mc.expand(), &p.mb.expand().adjoint());
    let s_unitarity = unitarity_residual(&p.s).max(linalg::max_abs_diff(&(&p.s * p.s.adjoint()), &linalg::identity(p.s.nrows())));
    let passed = [ma_hermiticity, md_hermiticity, mc_mb_dagger, s_unitarity]
        .iter()
        .all(|&r| r < tol);
    ParamsValidation {
        dimension_error: None,
        ma_hermiticity,
        md_hermiticity,
        mc_mb_dagger,
        s_unitarity,
        tol,
        passed,
    }
}

fn require_valid(p: &SpecialClassParams) -> Result<()> {
    let v = validate_params(p, DEFAULT_STRUCTURE_TOL);
    if let Some(msg) = v.dimension_error {
        return Err(QsrError::dims("special-class parameters", "consistent block shapes", msg));
    }
    if !v.passed {
        let (field, residual) = v.worst();
        return Err(QsrError::structure(field, residual));
    }
    Ok(())
}

/// Expanded matrices shared by every special-class formula.
struct Pieces {
    j_slow: ComplexMatrix,
    j_fast: ComplexMatrix,
    j_field: ComplexMatrix,
    ma: ComplexMatrix,
    mb: ComplexMatrix,
    mc: ComplexMatrix,
    md: ComplexMatrix,
    na: ComplexMatrix,
    nb: ComplexMatrix,
    k: ComplexMatrix,
}

impl Pieces {
    fn new(p: &SpecialClassParams) -> Self {
        Pieces {
            j_slow: j_matrix(p.n_slow()),
            j_fast: j_matrix(p.n_fast()),
            j_field: j_matrix(p.m_fields()),
            ma: p.ma.expand(),
            mb: p.mb.expand(),
            mc: p.mc.expand(),
            md: p.md.expand(),
            na: p.na.expand(),
            nb: p.nb.expand(),
            k: DoubledMatrix::block_diagonal(p.s.clone()).expand(),
        }
    }

    /// `X†JY` with the field-space `J`.
    fn cross(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
        x.adjoint() * &self.j_field * y
    }

    /// `iM + ½X†JY`.
    fn coupled(&self, m: &ComplexMatrix, x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
        m * I + self.cross(x, y) * Complex64::new(0.5, 0.0)
    }

    /// `D± = ±iMd + ½Nb†JNb`.
    fn fast_kernel(&self, sign: f64) -> ComplexMatrix {
        &self.md * (I * sign) + self.cross(&self.nb, &self.nb) * Complex64::new(0.5, 0.0)
    }
}

fn kernel_inverse(d: &ComplexMatrix) -> Result<ComplexMatrix> {
    perturbation::fast_inverse(d)
}

/// `Fx = −J(iMx + ½N†JN)` blocks, `G = −JN†JK`, `H = N`, `K = diag(S, S#)`.
pub fn to_perturbed(p: &SpecialClassParams) -> Result<PerturbedSystem> {
    require_valid(p)?;
    let q = Pieces::new(p);
    let f = |j: &ComplexMatrix, m: &ComplexMatrix, x: &ComplexMatrix, y: &ComplexMatrix, name: &str| {
        DoubledMatrix::from_computed(&-(j * q.coupled(m, x, y)), name)
    };
    let g = |j: &ComplexMatrix, n: &ComplexMatrix, name: &str| DoubledMatrix::from_computed(&-(j * q.cross(n, &q.k)), name);

    PerturbedSystem::new(PerturbedBlocks {
        fa: f(&q.j_slow, &q.ma, &q.na, &q.na, "Fa")?,
        fb: f(&q.j_slow, &q.mb, &q.na, &q.nb, "Fb")?,
        fc: f(&q.j_fast, &q.mc, &q.nb, &q.na, "Fc")?,
        fd: f(&q.j_fast, &q.md, &q.nb, &q.nb, "Fd")?,
        ga: g(&q.j_slow, &q.na, "Ga")?,
        gb: g(&q.j_fast, &q.nb, "Gb")?,
        ha: p.na.clone(),
        hb: p.nb.clone(),
        k: DoubledMatrix::block_diagonal(p.s.clone()),
    })
}

/// Reduced matrices evaluated directly from the physical blocks, with
/// `D = iMd + ½Nb†JNb`, `P = iMc + ½Nb†JNa`, `Q = iMb + ½Na†JNb`:
/// `F₀ = −J(iMa + ½Na†JNa) + JQD⁻¹P`, `G₀ = −JNa†JK + JQD⁻¹Nb†JK`,
/// `H₀ = Na − NbD⁻¹P`, `K₀ = K − NbD⁻¹Nb†JK`.
struct DirectReduction {
    f0: ComplexMatrix,
    g0: ComplexMatrix,
    h0: ComplexMatrix,
    k0: ComplexMatrix,
}

fn direct_reduction(q: &Pieces) -> Result<DirectReduction> {
    let d_inv = kernel_inverse(&q.fast_kernel(1.0))?;
    let p_mat = q.coupled(&q.mc, &q.nb, &q.na);
    let q_mat = q.coupled(&q.mb, &q.na, &q.nb);
    let nb_jk = q.cross(&q.nb, &q.k);
    let jq_dinv = &q.j_slow * &q_mat * &d_inv;
    let nb_dinv = &q.nb * &d_inv;
    Ok(DirectReduction {
        f0: -(&q.j_slow * q.coupled(&q.ma, &q.na, &q.na)) + &jq_dinv * &p_mat,
        g0: -(&q.j_slow * q.cross(&q.na, &q.k)) + &jq_dinv * &nb_jk,
        h0: &q.na - &nb_dinv * &p_mat,
        k0: &q.k - &nb_dinv * &nb_jk,
    })
}

pub fn reduce_special(p: &SpecialClassParams) -> Result<QuantumLinearSystem> {
    require_valid(p)?;
    let r = direct_reduction(&Pieces::new(p))?;
    QuantumLinearSystem::new(
        DoubledMatrix::from_computed(&r.f0, "F0")?,
        DoubledMatrix::from_computed(&r.g0, "G0")?,
        DoubledMatrix::from_computed(&r.h0, "H0")?,
        DoubledMatrix::from_computed(&r.k0, "K0")?,
    )
}

/// `max(‖JB†JB − I‖, ‖BJB†J − I‖)`.
pub fn bogoliubov_residual(b: &DoubledMatrix) -> f64 {
    let j = j_matrix(b.half_rows());
    let full = b.expand();
    let id = linalg::identity(full.nrows());
    let left = &j * full.adjoint() * &j * &full;
    let right = &full * &j * full.adjoint() * &j;
    linalg::max_abs_diff(&left, &id).max(linalg::max_abs_diff(&right, &id))
}

pub fn is_bogoliubov(b: &DoubledMatrix, tol: f64) -> CheckReport {
    if !b.is_square() {
        return CheckReport::new(f64::INFINITY, tol);
    }
    CheckReport::new(bogoliubov_residual(b), tol)
}

/// A memoryless input transformation `[dy; dy#] = B [du; du#]` with
/// `JB†JB = BJB†J = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovComponent {
    b: DoubledMatrix,
}

impl BogoliubovComponent {
    pub fn new(b: DoubledMatrix, tol: f64) -> Result<Self> {
        let check = is_bogoliubov(&b, tol);
        if !check.passed {
            return Err(QsrError::structure("B", check.residual));
        }
        Ok(BogoliubovComponent { b })
    }

    pub fn m_fields(&self) -> usize {
        self.b.half_rows()
    }

    pub fn matrix(&self) -> &DoubledMatrix {
        &self.b
    }
}

/// `(F, GB, H, KB)`: the static component acts on the input first.
pub fn series_with_static(sys: &QuantumLinearSystem, b: &BogoliubovComponent) -> Result<QuantumLinearSystem> {
    if b.m_fields() != sys.m_fields() {
        return Err(QsrError::dims("series composition field count", sys.m_fields(), b.m_fields()));
    }
    QuantumLinearSystem::new(
        sys.f().clone(),
        sys.g() * b.matrix(),
        sys.h().clone(),
        sys.k() * b.matrix(),
    )
}

/// Unprojected matrices of the decomposition, kept for residual reporting.
struct RawDecomposition {
    m_nine_term: ComplexMatrix,
    m_from_f0: ComplexMatrix,
    n_tilde: ComplexMatrix,
    k_tilde: ComplexMatrix,
    reduced: DirectReduction,
}

fn raw_decomposition(p: &SpecialClassParams) -> Result<RawDecomposition> {
    let q = Pieces::new(p);
    let reduced = direct_reduction(&q)?;
    let d_plus = kernel_inverse(&q.fast_kernel(1.0))?;
    let d_minus = kernel_inverse(&q.fast_kernel(-1.0))?;

    let nb_j_na = q.cross(&q.nb, &q.na);
    let na_j_nb = q.cross(&q.na, &q.nb);
    let c = |re: f64, im: f64| Complex64::new(re, im);

    // Nine-term closed form.
    let m_nine_term = &q.ma
        + &q.mb * &d_plus * &q.mc * c(0.0, -0.5)
        + &q.mb * &d_minus * &q.mc * c(0.0, 0.5)
        + &q.mb * &d_plus * &nb_j_na * c(-0.25, 0.0)
        + &q.mb * &d_minus * &nb_j_na * c(-0.25, 0.0)
        + &na_j_nb * &d_plus * &q.mc * c(-0.25, 0.0)
        + &na_j_nb * &d_minus * &q.mc * c(-0.25, 0.0)
        + &na_j_nb * &d_plus * &nb_j_na * c(0.0, 0.125)
        + &na_j_nb * &d_minus * &nb_j_na * c(0.0, -0.125);

    let n_tilde = reduced.h0.clone();
    let k_tilde = reduced.k0.clone();
    // M̃ = iJ(F₀ + ½JÑ†JÑ)
    let m_from_f0 = (&q.j_slow * (&reduced.f0 + &q.j_slow * q.cross(&n_tilde, &n_tilde) * c(0.5, 0.0))) * I;

    Ok(RawDecomposition {
        m_nine_term,
        m_from_f0,
        n_tilde,
        k_tilde,
        reduced,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// `Θ = J`, `M = M̃`, `N = Ñ`, `S = I`.
    pub pr_params: PhysicalParams,
    /// `B = K̃`.
    pub static_part: BogoliubovComponent,
    /// Max entry gap between `series_with_static(realize(pr_params), K̃)` and
    /// the reduced system.
    pub reconstruction_residual: f64,
    /// `‖M̃_nine-term − iJ(F₀ + ½JÑ†JÑ)‖_max`.
    pub m_tilde_formula_gap: f64,
}

fn reconstruction_gap(a: &QuantumLinearSystem, b: &QuantumLinearSystem) -> f64 {
    [
        (a.f(), b.f()),
        (a.g(), b.g()),
        (a.h(), b.h()),
        (a.k(), b.k()),
    ]
    .iter()
    .map(|(x, y)| linalg::max_abs_diff(&x.expand(), &y.expand()))
    .fold(0.0, f64::max)
}

/// Factors the reduced special-class system into a realizable system fed
/// by a static Bogoliubov component.
pub fn decompose(p: &SpecialClassParams) -> Result<Decomposition> {
    require_valid(p)?;
    let raw = raw_decomposition(p)?;

    let m_tilde_formula_gap = linalg::max_abs_diff(&raw.m_nine_term, &raw.m_from_f0);
    if !(m_tilde_formula_gap <= M_TILDE_AGREEMENT * (1.0 + linalg::max_abs(&raw.m_from_f0))) {
        return Err(QsrError::InternalInconsistency {
            context: "closed-form and reconstructed M~ disagree".into(),
            residual: m_tilde_formula_gap,
        });
    }

    let m_tilde = DoubledMatrix::from_computed(&raw.m_nine_term, "M~")?;
    // Hermitian part; the raw defect is reported by verify_decomposition
    let m_tilde = (&m_tilde + &m_tilde.dagger()).scale(0.5);
    let n_tilde = DoubledMatrix::from_computed(&raw.n_tilde, "N~")?;
    let k_tilde = DoubledMatrix::from_computed(&raw.k_tilde, "K~")?;

    let pr_params = PhysicalParams::canonical(m_tilde, n_tilde, linalg::identity(p.m_fields()));
    let static_part = BogoliubovComponent { b: k_tilde };

    let rebuilt = series_with_static(&system::realize(&pr_params)?, &static_part)?;
    let reduced = reduce_special(p)?;
    let reconstruction_residual = reconstruction_gap(&rebuilt, &reduced);

    Ok(Decomposition {
        pr_params,
        static_part,
        reconstruction_residual,
        m_tilde_formula_gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    /// (a) `‖M̃ − M̃†‖_max` and the Σ-symmetry residual of `M̃`.
    pub m_tilde_hermiticity: f64,
    pub m_tilde_structure: f64,
    /// (b) Σ-symmetry residual of `Ñ`.
    pub n_tilde_structure: f64,
    /// (c) Σ-symmetry residual of `K̃` and its Bogoliubov residual.
    pub k_tilde_structure: f64,
    pub k_tilde_bogoliubov: f64,
    /// (d) realizable part in series with `K̃` against the direct reduction.
    pub reconstruction: f64,
    /// (e) `‖G₀ + JÑ†JK̃‖_max`.
    pub g_identity: f64,
    /// Gap between the two independent `M̃` evaluations.
    pub m_tilde_formula_gap: f64,
    pub tol: f64,
    pub passed: bool,
}

impl DecompositionReport {
    pub fn residuals(&self) -> [(&'static str, f64); 8] {
        [
            ("m_tilde_hermiticity", self.m_tilde_hermiticity),
            ("m_tilde_structure", self.m_tilde_structure),
            ("n_tilde_structure", self.n_tilde_structure),
            ("k_tilde_structure", self.k_tilde_structure),
            ("k_tilde_bogoliubov", self.k_tilde_bogoliubov),
            ("reconstruction", self.reconstruction),
            ("g_identity", self.g_identity),
            ("m_tilde_formula_gap", self.m_tilde_formula_gap),
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

pub fn verify_decomposition(p: &SpecialClassParams, tol: f64) -> Result<DecompositionReport> {
    let decomposition = decompose(p)?;
    let raw = raw_decomposition(p)?;
    let structure = |m: &ComplexMatrix| doubled::is_doubled(m, tol).map(|r| r.residual);

    let j_slow = j_matrix(p.n_slow());
    let j_field = j_matrix(p.m_fields());
    let g_check = &raw.reduced.g0 + &j_slow * raw.n_tilde.adjoint() * &j_field * &raw.k_tilde;

    let mut report = DecompositionReport {
        m_tilde_hermiticity: hermiticity_residual(&raw.m_nine_term),
        m_tilde_structure: structure(&raw.m_nine_term)?,
        n_tilde_structure: structure(&raw.n_tilde)?,
        k_tilde_structure: structure(&raw.k_tilde)?,
        k_tilde_bogoliubov: bogoliubov_residual(decomposition.static_part.matrix()),
        reconstruction: decomposition.reconstruction_residual,
        g_identity: linalg::max_abs(&g_check),
        m_tilde_formula_gap: decomposition.m_tilde_formula_gap,
        tol,
        passed: false,
    };
    report.passed = report.residuals().iter().all(|r| r.1 < tol);
    Ok(report)
}
