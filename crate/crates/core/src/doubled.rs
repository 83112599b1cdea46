//! Doubled-up matrices.
//!
//! Every system matrix acting on a stacked vector `[a; a#]` has the block
//! form `[[R1, R2], [R2#, R1#]]`, where `#` is entrywise conjugation.
//! Equivalently `R = Σ R# Σ` with `Σ = [[0, I], [I, 0]]`. [`DoubledMatrix`]
//! stores only the upper blocks, so the structure holds by construction.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{QsrError, Result};
use crate::linalg::{self, ComplexMatrix, ONE, ZERO};

/// Default absolute tolerance on max-entry structural residuals.
pub const DEFAULT_STRUCTURE_TOL: f64 = 1e-10;

/// Outcome of a residual test against a tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl CheckReport {
    pub fn new(residual: f64, tol: f64) -> Self {
        CheckReport {
            residual,
            tol,
            passed: residual < tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubledMatrix {
    upper_left: ComplexMatrix,
    upper_right: ComplexMatrix,
}

impl DoubledMatrix {
    /// Builds `[[r1, r2], [r2#, r1#]]`. Both blocks must share a non-empty
    /// shape and contain only finite entries.
    pub fn new(upper_left: ComplexMatrix, upper_right: ComplexMatrix) -> Result<Self> {
        if upper_left.shape() != upper_right.shape() {
            return Err(QsrError::dims(
                "doubled blocks",
                format!("{}x{}", upper_left.nrows(), upper_left.ncols()),
                format!("{}x{}", upper_right.nrows(), upper_right.ncols()),
            ));
        }
        if upper_left.nrows() == 0 || upper_left.ncols() == 0 {
            return Err(QsrError::invalid("doubled blocks must be non-empty"));
        }
        if !linalg::all_finite(&upper_left) || !linalg::all_finite(&upper_right) {
            return Err(QsrError::invalid("doubled blocks contain non-finite entries"));
        }
        Ok(DoubledMatrix {
            upper_left,
            upper_right,
        })
    }

    pub fn zeros(half_rows: usize, half_cols: usize) -> Self {
        DoubledMatrix {
            upper_left: ComplexMatrix::zeros(half_rows, half_cols),
            upper_right: ComplexMatrix::zeros(half_rows, half_cols),
        }
    }

    pub fn identity(half: usize) -> Self {
        Self::block_diagonal(linalg::identity(half))
    }

    /// `[[S, 0], [0, S#]]`, the shape of a scattering feedthrough.
    pub fn block_diagonal(upper_left: ComplexMatrix) -> Self {
        let (r, c) = upper_left.shape();
        DoubledMatrix {
            upper_left,
            upper_right: ComplexMatrix::zeros(r, c),
        }
    }

    /// `alpha * I` on both sectors, for real `alpha`.
    pub fn scaled_identity(half: usize, alpha: f64) -> Self {
        Self::identity(half).scale(alpha)
    }

    pub fn half_rows(&self) -> usize {
        self.upper_left.nrows()
    }

    pub fn half_cols(&self) -> usize {
        self.upper_left.ncols()
    }

    pub fn rows(&self) -> usize {
        2 * self.half_rows()
    }

    pub fn cols(&self) -> usize {
        2 * self.half_cols()
    }

    pub fn upper_left(&self) -> &ComplexMatrix {
        &self.upper_left
    }

    pub fn upper_right(&self) -> &ComplexMatrix {
        &self.upper_right
    }

    pub fn into_blocks(self) -> (ComplexMatrix, ComplexMatrix) {
        (self.upper_left, self.upper_right)
    }

    pub fn expand(&self) -> ComplexMatrix {
        linalg::block2x2(
            &self.upper_left,
            &self.upper_right,
            &linalg::conj(&self.upper_right),
            &linalg::conj(&self.upper_left),
        )
    }

    /// Conjugate transpose, which stays doubled:
    /// `[[R1, R2], [R2#, R1#]]† = [[R1†, R2ᵀ], [R2†, R1ᵀ]]`.
    pub fn dagger(&self) -> Self {
        DoubledMatrix {
            upper_left: self.upper_left.adjoint(),
            upper_right: self.upper_right.transpose(),
        }
    }

    /// Multiplication by a real scalar (complex scalars break the structure).
    pub fn scale(&self, alpha: f64) -> Self {
        let a = Complex64::new(alpha, 0.0);
        DoubledMatrix {
            upper_left: &self.upper_left * a,
            upper_right: &self.upper_right * a,
        }
    }

    pub fn is_square(&self) -> bool {
        self.half_rows() == self.half_cols()
    }

    /// Residual-free product in block form.
    pub fn try_mul(&self, rhs: &DoubledMatrix) -> Result<DoubledMatrix> {
        if self.half_cols() != rhs.half_rows() {
            return Err(QsrError::dims(
                "doubled product",
                format!("{} inner half-dimension", self.half_cols()),
                rhs.half_rows(),
            ));
        }
        let (a1, a2) = (&self.upper_left, &self.upper_right);
        let (b1, b2) = (&rhs.upper_left, &rhs.upper_right);
        Ok(DoubledMatrix {
            upper_left: a1 * b1 + a2 * linalg::conj(b2),
            upper_right: a1 * b2 + a2 * linalg::conj(b1),
        })
    }

    fn check_same_shape(&self, rhs: &DoubledMatrix, op: &str) {
        assert_eq!(
            self.upper_left.shape(),
            rhs.upper_left.shape(),
            "doubled {op} shape mismatch"
        );
    }

    /// Nearest doubled matrix to an arbitrary even-sized `r` in the Frobenius
    /// sense, with the structural residual of `r` itself.
    pub(crate) fn project(r: &ComplexMatrix) -> (DoubledMatrix, f64) {
        let residual = structure_residual(r);
        let (n, m) = (r.nrows() / 2, r.ncols() / 2);
        let r11 = r.view((0, 0), (n, m));
        let r12 = r.view((0, m), (n, m));
        let r21 = r.view((n, 0), (n, m));
        let r22 = r.view((n, m), (n, m));
        let half = Complex64::new(0.5, 0.0);
        let upper_left = (r11 + r22.map(|z| z.conj())) * half;
        let upper_right = (r12 + r21.map(|z| z.conj())) * half;
        (
            DoubledMatrix {
                upper_left,
                upper_right,
            },
            residual,
        )
    }

    /// Contracts a computed matrix whose structure follows from algebra, not
    /// from input. A large residual means a wrong formula.
    pub(crate) fn from_computed(r: &ComplexMatrix, context: &str) -> Result<DoubledMatrix> {
        let (d, residual) = Self::project(r);
        let scale = 1.0 + linalg::max_abs(r);
        if residual > 1e-8 * scale {
            return Err(QsrError::InternalInconsistency {
                context: context.to_string(),
                residual,
            });
        }
        Ok(d)
    }
}

impl Neg for &DoubledMatrix {
    type Output = DoubledMatrix;
    fn neg(self) -> DoubledMatrix {
        DoubledMatrix {
            upper_left: -&self.upper_left,
            upper_right: -&self.upper_right,
        }
    }
}

impl Add for &DoubledMatrix {
    type Output = DoubledMatrix;
    fn add(self, rhs: &DoubledMatrix) -> DoubledMatrix {
        self.check_same_shape(rhs, "sum");
        DoubledMatrix {
            upper_left: &self.upper_left + &rhs.upper_left,
            upper_right: &self.upper_right + &rhs.upper_right,
        }
    }
}

impl Sub for &DoubledMatrix {
    type Output = DoubledMatrix;
    fn sub(self, rhs: &DoubledMatrix) -> DoubledMatrix {
        self.check_same_shape(rhs, "difference");
        DoubledMatrix {
            upper_left: &self.upper_left - &rhs.upper_left,
            upper_right: &self.upper_right - &rhs.upper_right,
        }
    }
}

impl Mul for &DoubledMatrix {
    type Output = DoubledMatrix;
    /// Panics on a dimension mismatch; see [`DoubledMatrix::try_mul`].
    fn mul(self, rhs: &DoubledMatrix) -> DoubledMatrix {
        self.try_mul(rhs).expect("doubled product dimension mismatch")
    }
}

/// `J = diag(I, -I)` and `Σ = [[0, I], [I, 0]]` of size `2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    pub size: usize,
    pub j: ComplexMatrix,
    pub sigma: ComplexMatrix,
}

pub fn structure_matrices(m: usize) -> Result<StructureConstants> {
    if m == 0 {
        return Err(QsrError::invalid("structure matrices need m >= 1"));
    }
    Ok(StructureConstants {
        size: m,
        j: j_matrix(m),
        sigma: sigma_matrix(m),
    })
}

pub fn j_matrix(m: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(2 * m, 2 * m, |i, k| match (i == k, i < m) {
        (true, true) => ONE,
        (true, false) => -ONE,
        _ => ZERO,
    })
}

pub fn sigma_matrix(m: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(2 * m, 2 * m, |i, k| if (i + m) % (2 * m) == k { ONE } else { ZERO })
}

/// `‖R − Σ R# Σ‖_max` for an even-sized matrix. Σ only permutes block rows
/// and columns, so this compares the blocks directly.
fn structure_residual(r: &ComplexMatrix) -> f64 {
    let (n, m) = (r.nrows() / 2, r.ncols() / 2);
    let mut worst = 0.0_f64;
    for i in 0..2 * n {
        for k in 0..2 * m {
            let mirrored = r[((i + n) % (2 * n), (k + m) % (2 * m))].conj();
            worst = worst.max((r[(i, k)] - mirrored).norm());
        }
    }
    worst
}

fn require_even(r: &ComplexMatrix) -> Result<()> {
    if r.nrows() % 2 != 0 || r.ncols() % 2 != 0 || r.nrows() == 0 || r.ncols() == 0 {
        return Err(QsrError::dims(
            "doubled matrix",
            "non-empty even row and column counts",
            format!("{}x{}", r.nrows(), r.ncols()),
        ));
    }
    Ok(())
}

/// Tests `R = Σ R# Σ`, reporting the max-entry residual.
pub fn is_doubled(r: &ComplexMatrix, tol: f64) -> Result<CheckReport> {
    require_even(r)?;
    Ok(CheckReport::new(structure_residual(r), tol))
}

/// Inverse of [`DoubledMatrix::expand`]: copies the upper blocks once the
/// structure has been confirmed within `tol`.
pub fn contract(r: &ComplexMatrix, tol: f64) -> Result<DoubledMatrix> {
    contract_named(r, tol, "matrix")
}

pub fn contract_named(r: &ComplexMatrix, tol: f64, field: &str) -> Result<DoubledMatrix> {
    let report = is_doubled(r, tol)?;
    if !report.passed {
        return Err(QsrError::structure(field, report.residual));
    }
    let (n, m) = (r.nrows() / 2, r.ncols() / 2);
    DoubledMatrix::new(
        r.view((0, 0), (n, m)).into_owned(),
        r.view((0, m), (n, m)).into_owned(),
    )
}
