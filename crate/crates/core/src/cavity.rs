//! Optical cavity with two mirrors coupled to a degenerate parametric
//! amplifier (squeezer), as a worked example of the reduction machinery.
//!
//! State ordering is `(a₁, a₂, a₁#, a₂#)`: `a₁` is the cavity mode and `a₂`
//! the squeezer mode. In the scaled family `γ = γ̃/ε`, `χ = χ̃/ε`, and the
//! squeezer mode is rescaled by `1/√ε` so that all perturbed blocks are
//! independent of `ε`.

use num_complex::Complex64;

use crate::doubled::DoubledMatrix;
use crate::error::{QsrError, Result};
use crate::linalg::{self, ComplexMatrix, ZERO};
use crate::perturbation::{self, PerturbedBlocks, PerturbedSystem};
use crate::special_class::SpecialClassParams;
use crate::system::{self, QuantumLinearSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySqueezerParams {
    pub k1: f64,
    pub k2: f64,
    pub gamma: f64,
    pub chi: Complex64,
}

impl CavitySqueezerParams {
    pub fn new(k1: f64, k2: f64, gamma: f64, chi: Complex64) -> Result<Self> {
        let p = CavitySqueezerParams { k1, k2, gamma, chi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k2.is_finite() && self.k1 >= 0.0 && self.k2 >= 0.0) {
            return Err(QsrError::invalid(format!(
                "mirror couplings must be finite and non-negative, got k1 = {}, k2 = {}",
                self.k1, self.k2
            )));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(QsrError::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.chi.re.is_finite() && self.chi.im.is_finite()) {
            return Err(QsrError::invalid("chi must be finite"));
        }
        Ok(())
    }

    /// Physical parameters of the member `ε` of the scaled family, reading
    /// `self` as `(K₁, K₂, γ̃, χ̃)`.
    pub fn scaled(&self, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(QsrError::invalid(format!("eps must be positive, got {eps}")));
        }
        CavitySqueezerParams::new(self.k1, self.k2, self.gamma / eps, self.chi / eps)
    }

    fn mirror_sum(&self) -> f64 {
        self.k1.sqrt() + self.k2.sqrt()
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn doubled(r1: ComplexMatrix, r2: ComplexMatrix) -> DoubledMatrix {
    DoubledMatrix::new(r1, r2).expect("finite blocks from validated parameters")
}

/// The unreduced two-mode system with `K = I`.
pub fn build_full(p: &CavitySqueezerParams) -> Result<QuantumLinearSystem> {
    p.validate()?;
    let sum = p.mirror_sum();
    let sg = p.gamma.sqrt();
    let f1 = ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            c(-0.5 * sum * sum),
            c(-(p.k1 * p.gamma).sqrt()),
            c(-(p.k2 * p.gamma).sqrt()),
            c(-p.gamma / 2.0),
        ],
    );
    let f2 = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, -p.chi]);
    let g1 = ComplexMatrix::from_row_slice(2, 1, &[c(-sum), c(-sg)]);
    let h1 = ComplexMatrix::from_row_slice(1, 2, &[c(sum), c(sg)]);
    QuantumLinearSystem::new(
        doubled(f1, f2),
        doubled(g1, ComplexMatrix::zeros(2, 1)),
        doubled(h1, ComplexMatrix::zeros(1, 2)),
        DoubledMatrix::identity(1),
    )
}

/// The ε-free blocks of the scaled family, reading `p` as `(K₁, K₂, γ̃, χ̃)`.
pub fn build_perturbed(p: &CavitySqueezerParams) -> Result<PerturbedSystem> {
    p.validate()?;
    let sum = p.mirror_sum();
    let sg = p.gamma.sqrt();
    let scalar = |x: f64| DoubledMatrix::scaled_identity(1, x);
    PerturbedSystem::new(PerturbedBlocks {
        fa: scalar(-0.5 * sum * sum),
        fb: scalar(-(p.k1 * p.gamma).sqrt()),
        fc: scalar(-(p.k2 * p.gamma).sqrt()),
        fd: doubled(
            ComplexMatrix::from_element(1, 1, c(-p.gamma / 2.0)),
            ComplexMatrix::from_element(1, 1, -p.chi),
        ),
        ga: scalar(-sum),
        gb: scalar(-sg),
        ha: scalar(sum),
        hb: scalar(sg),
        k: DoubledMatrix::identity(1),
    })
}

fn entry(d: &DoubledMatrix, r: usize, col: usize) -> DoubledMatrix {
    doubled(
        ComplexMatrix::from_element(1, 1, d.upper_left()[(r, col)]),
        ComplexMatrix::from_element(1, 1, d.upper_right()[(r, col)]),
    )
}

/// Special-class parameters recovered from `build_full` at the tilde values
/// and partitioned into slow (`a₁`) and fast (`a₂`) blocks.
pub fn special_class_params(p: &CavitySqueezerParams) -> Result<SpecialClassParams> {
    let canonical = system::extract_canonical_params(&build_full(p)?, 1e-10)?;
    let (m, n) = (&canonical.params.m, &canonical.params.n);
    Ok(SpecialClassParams {
        ma: entry(m, 0, 0),
        mb: entry(m, 0, 1),
        mc: entry(m, 1, 0),
        md: entry(m, 1, 1),
        na: entry(n, 0, 0),
        nb: entry(n, 0, 1),
        s: canonical.params.s.clone(),
    })
}

/// Max entry gaps between the reduced system and the
/// reference closed-form expressions for this example, which use
/// `A = [[γ̃/2, −χ̃], [−χ̃*, γ̃/2]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiteralComparison {
    pub f0_gap: f64,
    pub g0_gap: f64,
    pub h0_gap: f64,
    pub k0_gap: f64,
    pub literal: [ComplexMatrix; 4],
}

impl LiteralComparison {
    pub fn max_gap(&self) -> f64 {
        [self.f0_gap, self.g0_gap, self.h0_gap, self.k0_gap]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn literal_formulas(p: &CavitySqueezerParams) -> Result<[ComplexMatrix; 4]> {
    let half_gamma = c(p.gamma / 2.0);
    let a = ComplexMatrix::from_row_slice(2, 2, &[half_gamma, -p.chi, -p.chi.conj(), half_gamma]);
    let (a_inv, _) = linalg::checked_inverse(&a, perturbation::FAST_MIN_RCOND, "reference reduction kernel")?;
    let id = linalg::identity(2);
    let sum = p.mirror_sum();
    let g = p.gamma;
    Ok([
        &id * c(-0.5 * sum * sum) + &a_inv * c(g * (p.k1 * p.k2).sqrt()),
        &id * c(-0.5 * sum) + &a_inv * c(g * p.k2.sqrt()),
        &id * c(0.5 * sum) - &a_inv * c(g * p.k1.sqrt()),
        &id - &a_inv * c(g),
    ])
}

/// The general reduction of [`build_perturbed`], with a comparison against
/// the reference closed forms.
pub fn reduced_reference(p: &CavitySqueezerParams) -> Result<(QuantumLinearSystem, LiteralComparison)> {
    let reduced = perturbation::reduce(&build_perturbed(p)?)?;
    let literal = literal_formulas(p)?;
    let gap = |d: &DoubledMatrix, l: &ComplexMatrix| linalg::max_abs_diff(&d.expand(), l);
    let comparison = LiteralComparison {
        f0_gap: gap(reduced.f(), &literal[0]),
        g0_gap: gap(reduced.g(), &literal[1]),
        h0_gap: gap(reduced.h(), &literal[2]),
        k0_gap: gap(reduced.k(), &literal[3]),
        literal,
    };
    Ok((reduced, comparison))
}
