//! Dense complex helpers on top of nalgebra: norms, conditioned inverses,
//! numerical rank and eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QsrError, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest entry modulus; zero for an empty matrix.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |a - b|` entrywise. Shapes must agree.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn all_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn real_diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(values[i], 0.0)
        } else {
            ZERO
        }
    })
}

/// Entrywise complex conjugate (the `#` operation on matrices).
pub fn conj(m: &ComplexMatrix) -> ComplexMatrix {
    m.map(|z| z.conj())
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Reciprocal 2-norm condition number `σ_min / σ_max`; zero for a zero matrix.
pub fn rcond(m: &ComplexMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if max > 0.0 => min / max,
        _ => 0.0,
    }
}

/// Number of singular values above `atol + rtol * σ_max`.
pub fn numerical_rank(m: &ComplexMatrix, atol: f64, rtol: f64) -> usize {
    let sv = singular_values(m);
    let Some(&max) = sv.first() else {
        return 0;
    };
    let threshold = atol + rtol * max;
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Inverse of a square matrix, refused when the reciprocal condition number
/// falls to `min_rcond` or below. Returns the inverse and the estimate.
pub fn checked_inverse(
    m: &ComplexMatrix,
    min_rcond: f64,
    context: &str,
) -> Result<(ComplexMatrix, f64)> {
    if !m.is_square() {
        return Err(QsrError::dims(
            context,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    let rc = rcond(m);
    if !(rc > min_rcond) {
        return Err(QsrError::SingularMatrix {
            context: context.to_string(),
            rcond: rc,
        });
    }
    let inv = m.clone().lu().try_inverse().ok_or_else(|| QsrError::SingularMatrix {
        context: context.to_string(),
        rcond: rc,
    })?;
    Ok((inv, rc))
}

/// Eigenvalues via the complex Schur form. Order follows the diagonal of the
/// triangular factor.
pub fn eigenvalues(m: &ComplexMatrix) -> Vec<Complex64> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        _ => {
            let (_, t) = m.clone().schur().unpack();
            t.diagonal().iter().copied().collect()
        }
    }
}

/// Vertical then horizontal block assembly of a 2x2 block matrix.
pub fn block2x2(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    d: &ComplexMatrix,
) -> ComplexMatrix {
    debug_assert_eq!(a.nrows(), b.nrows());
    debug_assert_eq!(c.nrows(), d.nrows());
    debug_assert_eq!(a.ncols(), c.ncols());
    debug_assert_eq!(b.ncols(), d.ncols());
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    let mut out = ComplexMatrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a);
    out.view_mut((0, c1), (r1, c2)).copy_from(b);
    out.view_mut((r1, 0), (r2, c1)).copy_from(c);
    out.view_mut((r1, c1), (r2, c2)).copy_from(d);
    out
}

pub fn vstack(top: &ComplexMatrix, bottom: &ComplexMatrix) -> ComplexMatrix {
    debug_assert_eq!(top.ncols(), bottom.ncols());
    let mut out = ComplexMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

pub fn hstack(left: &ComplexMatrix, right: &ComplexMatrix) -> ComplexMatrix {
    debug_assert_eq!(left.nrows(), right.nrows());
    let mut out = ComplexMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.view_mut((0, 0), left.shape()).copy_from(left);
    out.view_mut((0, left.ncols()), right.shape()).copy_from(right);
    out
}
