//! Seeded generators of valid parameter sets, for property suites and
//! reproducible CLI fixtures.
//!
//! Entries are drawn uniformly from the square `[-1, 1] + i[-1, 1]`.
//! Hermitian blocks are symmetrized as `A + A†`; coupling matrices are
//! rescaled to spectral norm at most 2.

use num_complex::Complex64;
use rand::Rng;

use crate::doubled::DoubledMatrix;
use crate::linalg::{self, ComplexMatrix};
use crate::special_class::SpecialClassParams;
use crate::system::PhysicalParams;

pub const MAX_COUPLING_NORM: f64 = 2.0;
/// Special-class draws whose fast kernel has a smaller reciprocal condition
/// number are rejected and redrawn.
pub const MIN_KERNEL_RCOND: f64 = 1e-2;

pub fn complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

pub fn matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

pub fn doubled<R: Rng + ?Sized>(rng: &mut R, half_rows: usize, half_cols: usize) -> DoubledMatrix {
    let a = matrix(rng, half_rows, half_cols);
    let b = matrix(rng, half_rows, half_cols);
    DoubledMatrix::new(a, b).expect("finite non-empty blocks")
}

/// Doubled matrix whose expansion is Hermitian: `R1 = A + A†`, `R2 = B + Bᵀ`.
pub fn hermitian_doubled<R: Rng + ?Sized>(rng: &mut R, half: usize) -> DoubledMatrix {
    let a = matrix(rng, half, half);
    let b = matrix(rng, half, half);
    DoubledMatrix::new(&a + a.adjoint(), &b + b.transpose()).expect("finite non-empty blocks")
}

/// Doubled coupling matrix with spectral norm at most [`MAX_COUPLING_NORM`].
pub fn coupling<R: Rng + ?Sized>(rng: &mut R, half_rows: usize, half_cols: usize) -> DoubledMatrix {
    let d = doubled(rng, half_rows, half_cols);
    let norm = linalg::singular_values(&d.expand())[0];
    if norm > MAX_COUPLING_NORM {
        d.scale(MAX_COUPLING_NORM / norm)
    } else {
        d
    }
}

/// Unitary matrix from the QR factor of a random complex matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    loop {
        let a = matrix(rng, n, n);
        if linalg::rcond(&a) < 1e-6 {
            continue;
        }
        return a.qr().q();
    }
}

/// Canonical (`Θ = J`) physical parameters with `n` modes and `m` fields.
pub fn physical_params<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> PhysicalParams {
    let mm = hermitian_doubled(rng, n);
    let nn = coupling(rng, m, n);
    let s = unitary(rng, m);
    PhysicalParams::canonical(mm, nn, s)
}

/// Special-class parameters: Hermitian `Ma`, `Md`, free `Mb`, `Mc = Mb†`,
/// free `Na`, `Nb`, unitary `S`, with a well-conditioned fast kernel
/// `iMd + ½Nb†JNb`.
pub fn special_class_params<R: Rng + ?Sized>(rng: &mut R, n_slow: usize, n_fast: usize, m: usize) -> SpecialClassParams {
    loop {
        let mb = doubled(rng, n_slow, n_fast);
        let p = SpecialClassParams {
            ma: hermitian_doubled(rng, n_slow),
            mc: mb.dagger(),
            mb,
            md: hermitian_doubled(rng, n_fast),
            na: coupling(rng, m, n_slow),
            nb: coupling(rng, m, n_fast),
            s: unitary(rng, m),
        };
        let j = crate::doubled::j_matrix(m);
        let nb = p.nb.expand();
        let kernel = p.md.expand() * linalg::I + nb.adjoint() * j * nb * Complex64::new(0.5, 0.0);
        if linalg::rcond(&kernel) > MIN_KERNEL_RCOND {
            return p;
        }
    }
}
