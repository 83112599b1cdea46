//! Singular perturbation of a slow/fast partitioned system.
//!
//! The family is
//!
//! ```text
//!   dx₁ = Fa x₁ + Fb x₂ + Ga du
//! ε dx₂ = Fc x₁ + Fd x₂ + Gb du
//!   dy  = Ha x₁ + Hb x₂ + K du
//! ```
//!
//! where `x₁ = [a₁; a₁#]` and `x₂ = [a₂; a₂#]`. Setting `ε = 0` and
//! eliminating `x₂` gives the Schur-complement model of [`reduce`].

use num_complex::Complex64;

use crate::doubled::DoubledMatrix;
use crate::error::{QsrError, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::system::{self, QuantumLinearSystem};

/// `Fd` is refused as singular at or below this reciprocal condition number.
pub const FAST_MIN_RCOND: f64 = 1e-12;
/// Residuals at or below this are treated as exact zeros by
/// [`convergence_probe`].
pub const EXACT_RESIDUAL_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedSystem {
    fa: DoubledMatrix,
    fb: DoubledMatrix,
    fc: DoubledMatrix,
    fd: DoubledMatrix,
    ga: DoubledMatrix,
    gb: DoubledMatrix,
    ha: DoubledMatrix,
    hb: DoubledMatrix,
    k: DoubledMatrix,
}

/// Blocks of a [`PerturbedSystem`], in the order `Fa, Fb, Fc, Fd, Ga, Gb, Ha, Hb, K`.
pub struct PerturbedBlocks {
    pub fa: DoubledMatrix,
    pub fb: DoubledMatrix,
    pub fc: DoubledMatrix,
    pub fd: DoubledMatrix,
    pub ga: DoubledMatrix,
    pub gb: DoubledMatrix,
    pub ha: DoubledMatrix,
    pub hb: DoubledMatrix,
    pub k: DoubledMatrix,
}

impl PerturbedSystem {
    pub fn new(b: PerturbedBlocks) -> Result<Self> {
        let n1 = b.fa.half_rows();
        let n2 = b.fd.half_rows();
        let m = b.k.half_rows();
        let shapes: [(&str, &DoubledMatrix, usize, usize); 9] = [
            ("Fa", &b.fa, n1, n1),
            ("Fb", &b.fb, n1, n2),
            ("Fc", &b.fc, n2, n1),
            ("Fd", &b.fd, n2, n2),
            ("Ga", &b.ga, n1, m),
            ("Gb", &b.gb, n2, m),
            ("Ha", &b.ha, m, n1),
            ("Hb", &b.hb, m, n2),
            ("K", &b.k, m, m),
        ];
        for (name, d, r, c) in shapes {
            if d.half_rows() != r || d.half_cols() != c {
                return Err(QsrError::dims(
                    format!("perturbed block {name}"),
                    format!("{}x{}", 2 * r, 2 * c),
                    format!("{}x{}", d.rows(), d.cols()),
                ));
            }
        }
        Ok(PerturbedSystem {
            fa: b.fa,
            fb: b.fb,
            fc: b.fc,
            fd: b.fd,
            ga: b.ga,
            gb: b.gb,
            ha: b.ha,
            hb: b.hb,
            k: b.k,
        })
    }

    pub fn n_slow(&self) -> usize {
        self.fa.half_rows()
    }

    pub fn n_fast(&self) -> usize {
        self.fd.half_rows()
    }

    pub fn m_fields(&self) -> usize {
        self.k.half_rows()
    }

    pub fn fa(&self) -> &DoubledMatrix {
        &self.fa
    }
    pub fn fb(&self) -> &DoubledMatrix {
        &self.fb
    }
    pub fn fc(&self) -> &DoubledMatrix {
        &self.fc
    }
    pub fn fd(&self) -> &DoubledMatrix {
        &self.fd
    }
    pub fn ga(&self) -> &DoubledMatrix {
        &self.ga
    }
    pub fn gb(&self) -> &DoubledMatrix {
        &self.gb
    }
    pub fn ha(&self) -> &DoubledMatrix {
        &self.ha
    }
    pub fn hb(&self) -> &DoubledMatrix {
        &self.hb
    }
    pub fn k(&self) -> &DoubledMatrix {
        &self.k
    }

    pub fn blocks(&self) -> PerturbedBlocks {
        PerturbedBlocks {
            fa: self.fa.clone(),
            fb: self.fb.clone(),
            fc: self.fc.clone(),
            fd: self.fd.clone(),
            ga: self.ga.clone(),
            gb: self.gb.clone(),
            ha: self.ha.clone(),
            hb: self.hb.clone(),
            k: self.k.clone(),
        }
    }
}

fn require_positive_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(QsrError::invalid(format!("epsilon must be positive and finite, got {eps}")));
    }
    Ok(())
}

/// The full system at a given `ε > 0`, with state `[a₁; a₂; a₁#; a₂#]`
/// (slow modes before fast modes within each sector):
/// `F = [[Fa, Fb], [Fc/ε, Fd/ε]]`, `G = [[Ga], [Gb/ε]]`, `H = [Ha, Hb]`.
pub fn assemble(ps: &PerturbedSystem, eps: f64) -> Result<QuantumLinearSystem> {
    require_positive_eps(eps)?;
    let inv_eps = Complex64::new(1.0 / eps, 0.0);
    let stack4 = |a: &DoubledMatrix, b: &DoubledMatrix, c: &DoubledMatrix, d: &DoubledMatrix| {
        let upper = |pick: fn(&DoubledMatrix) -> &ComplexMatrix| {
            linalg::block2x2(pick(a), pick(b), &(pick(c) * inv_eps), &(pick(d) * inv_eps))
        };
        DoubledMatrix::new(upper(DoubledMatrix::upper_left), upper(DoubledMatrix::upper_right))
    };
    let stack_rows = |a: &DoubledMatrix, b: &DoubledMatrix| {
        let upper = |pick: fn(&DoubledMatrix) -> &ComplexMatrix| linalg::vstack(pick(a), &(pick(b) * inv_eps));
        DoubledMatrix::new(upper(DoubledMatrix::upper_left), upper(DoubledMatrix::upper_right))
    };
    let stack_cols = |a: &DoubledMatrix, b: &DoubledMatrix| {
        let upper = |pick: fn(&DoubledMatrix) -> &ComplexMatrix| linalg::hstack(pick(a), pick(b));
        DoubledMatrix::new(upper(DoubledMatrix::upper_left), upper(DoubledMatrix::upper_right))
    };

    QuantumLinearSystem::new(
        stack4(&ps.fa, &ps.fb, &ps.fc, &ps.fd)?,
        stack_rows(&ps.ga, &ps.gb)?,
        stack_cols(&ps.ha, &ps.hb)?,
        ps.k.clone(),
    )
}

/// Expanded reduced-model matrices together with `Fd⁻¹`.
#[derive(Debug, Clone)]
pub(crate) struct SchurParts {
    pub f0: ComplexMatrix,
    pub g0: ComplexMatrix,
    pub h0: ComplexMatrix,
    pub k0: ComplexMatrix,
    pub fd_inv: ComplexMatrix,
}

pub(crate) fn fast_inverse(fd: &ComplexMatrix) -> Result<ComplexMatrix> {
    match linalg::checked_inverse(fd, FAST_MIN_RCOND, "fast block") {
        Ok((inv, _)) => Ok(inv),
        Err(QsrError::SingularMatrix { rcond, .. }) => Err(QsrError::SingularFastDynamics { rcond }),
        Err(e) => Err(e),
    }
}

pub(crate) fn schur_parts(ps: &PerturbedSystem) -> Result<SchurParts> {
    let fd_inv = fast_inverse(&ps.fd.expand())?;
    let fb_fd_inv = ps.fb.expand() * &fd_inv;
    let hb_fd_inv = ps.hb.expand() * &fd_inv;
    let fc = ps.fc.expand();
    let gb = ps.gb.expand();
    Ok(SchurParts {
        f0: ps.fa.expand() - &fb_fd_inv * &fc,
        g0: ps.ga.expand() - &fb_fd_inv * &gb,
        h0: ps.ha.expand() - &hb_fd_inv * &fc,
        k0: ps.k.expand() - &hb_fd_inv * &gb,
        fd_inv,
    })
}

/// The approximate system obtained at `ε = 0`:
/// `F₀ = Fa − FbFd⁻¹Fc`, `G₀ = Ga − FbFd⁻¹Gb`, `H₀ = Ha − HbFd⁻¹Fc`,
/// `K₀ = K − HbFd⁻¹Gb`.
pub fn reduce(ps: &PerturbedSystem) -> Result<QuantumLinearSystem> {
    let parts = schur_parts(ps)?;
    QuantumLinearSystem::new(
        DoubledMatrix::from_computed(&parts.f0, "reduced F0")?,
        DoubledMatrix::from_computed(&parts.g0, "reduced G0")?,
        DoubledMatrix::from_computed(&parts.h0, "reduced H0")?,
        DoubledMatrix::from_computed(&parts.k0, "reduced K0")?,
    )
}

/// Coefficient of `ε` in the expansion of `Φ_ε(s)` about `ε = 0`:
/// `L(s) = −s(H₀(sI−F₀)⁻¹Fb + Hb) Fd⁻² (Fc(sI−F₀)⁻¹G₀ + Gb)`, from
/// `(εs − Fd)⁻¹ = −Fd⁻¹ − εsFd⁻² + O(ε²)`.
pub fn first_order_term(ps: &PerturbedSystem, s: Complex64) -> Result<ComplexMatrix> {
    let p = schur_parts(ps)?;
    let dim = p.f0.nrows();
    let (res, _) = linalg::checked_inverse(
        &(linalg::identity(dim) * s - &p.f0),
        system::RESOLVENT_MIN_RCOND,
        "reduced resolvent sI - F0",
    )?;
    let left = (&p.h0 * &res * ps.fb.expand() + ps.hb.expand()) * &p.fd_inv;
    let right = &p.fd_inv * (ps.fc.expand() * &res * &p.g0 + ps.gb.expand());
    Ok(left * right * (-s))
}

/// `Φ_ε(s) − Φ₀(s)`.
pub fn zeroth_order_gap(ps: &PerturbedSystem, eps: f64, s: Complex64) -> Result<ComplexMatrix> {
    let full = system::transfer_function(&assemble(ps, eps)?, s)?;
    let reduced = system::transfer_function(&reduce(ps)?, s)?;
    Ok(full - reduced)
}

/// `‖Φ_ε(s) − Φ₀(s) − εL(s)‖_max`.
pub fn expansion_residual(ps: &PerturbedSystem, eps: f64, s: Complex64) -> Result<f64> {
    require_positive_eps(eps)?;
    let gap = zeroth_order_gap(ps, eps, s)?;
    let l = first_order_term(ps, s)?;
    Ok(linalg::max_abs(&(gap - l * Complex64::new(eps, 0.0))))
}

/// Empirical convergence order between two consecutive sweep entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalOrder {
    /// Both residuals vanish to rounding; no order is measurable.
    Exact,
    Value(f64),
}

impl LocalOrder {
    pub fn value(&self) -> Option<f64> {
        match self {
            LocalOrder::Exact => None,
            LocalOrder::Value(v) => Some(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// `‖Φ_ε − Φ₀ − εL‖_max`.
    pub residual: f64,
    /// Order against the previous row; `None` on the first row.
    pub local_order: Option<LocalOrder>,
    /// `‖Φ_ε − Φ₀‖_max`.
    pub raw_residual: f64,
    pub raw_order: Option<LocalOrder>,
}

fn local_order(prev_eps: f64, eps: f64, prev: f64, cur: f64) -> LocalOrder {
    if prev <= EXACT_RESIDUAL_FLOOR || cur <= EXACT_RESIDUAL_FLOOR {
        LocalOrder::Exact
    } else {
        LocalOrder::Value((prev / cur).ln() / (prev_eps / eps).ln())
    }
}

/// Sweeps `ε` over a strictly decreasing list and estimates the local
/// convergence order of the first-order expansion (and of the bare
/// reduction) between consecutive entries.
pub fn convergence_probe(ps: &PerturbedSystem, s: Complex64, eps_list: &[f64]) -> Result<Vec<ConvergenceRow>> {
    if eps_list.len() < 2 {
        return Err(QsrError::invalid("convergence probe needs at least two epsilon values"));
    }
    for e in eps_list {
        require_positive_eps(*e)?;
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(QsrError::invalid("epsilon values must be strictly decreasing"));
    }

    let reduced = system::transfer_function(&reduce(ps)?, s)?;
    let l = first_order_term(ps, s)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let gap = system::transfer_function(&assemble(ps, eps)?, s)? - &reduced;
        let raw_residual = linalg::max_abs(&gap);
        let residual = linalg::max_abs(&(gap - &l * Complex64::new(eps, 0.0)));
        let (local, raw) = match rows.last() {
            Some(prev) => (
                Some(local_order(prev.eps, eps, prev.residual, residual)),
                Some(local_order(prev.eps, eps, prev.raw_residual, raw_residual)),
            ),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            eps,
            residual,
            local_order: local,
            raw_residual,
            raw_order: raw,
        });
    }
    Ok(rows)
}
