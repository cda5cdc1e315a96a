//! Spectral time-splitting integrators for the Gross-Pitaevskii equation and
//! its parabolic (imaginary-time) analogue.
//!
//! The crate provides a periodic Fourier grid, the operators `F1`, `F2` of the
//! splitting together with their iterated commutators, exact and approximate
//! subflows, a catalogue of splitting schemes (Lie, Strang, Yoshida with real
//! and complex coefficients, and a fourth-order force-gradient method), and
//! diagnostics used by the experiment runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod flows;
pub mod integrators;
pub mod model;
pub mod operators;
pub mod spectral;

pub use error::{Error, Result};
pub use flows::FlowStrategy;
pub use integrators::{integrate, make_scheme, splitting_step, IntegrationRun, SchemeName, SplittingScheme};
pub use model::{EquationKind, PotentialSpec, ProblemSpec};
pub use operators::OperatorContext;
pub use spectral::{build_grid, ComplexField, Grid, RealField};

pub use num_complex::Complex64;
