//! Linear quantum stochastic systems over doubled-up annihilation/creation
//! operator vectors.
//!
//! The crate covers three layers:
//!
//! * [`doubled`] and [`system`]: the state-space model, construction from
//!   physical parameters, transfer functions and the realizability tests.
//! * [`perturbation`] and [`special_class`]: singular perturbation
//!   (adiabatic elimination) of fast modes, and the factorization of the
//!   reduced model into a realizable system fed by a static Bogoliubov
//!   transformation.
//! * [`cavity`] and [`cli`]: the cavity/squeezer reference model and the
//!   JSON command-line front end, with the document format in [`wire`].

pub mod cavity;
pub mod cli;
pub mod doubled;
pub mod error;
pub mod linalg;
pub mod perturbation;
pub mod random;
pub mod special_class;
pub mod system;
pub mod wire;

pub use doubled::{contract, is_doubled, structure_matrices, CheckReport, DoubledMatrix, StructureConstants};
pub use error::{QsrError, Result};
pub use linalg::ComplexMatrix;
pub use num_complex::Complex64;
pub use system::{PhysicalParams, QuantumLinearSystem, RealizabilityReport, Verdict};
