//! Stein-equation machinery.
//!
//! - [`solve1d`]: the one-dimensional equation σ²A′(w) − wA(w) = h(w) − Φ(h)
//!   solved in closed form by tail quadrature, with the derivative bounds the
//!   Wasserstein theory guarantees;
//! - [`solvemv`]: the multivariate second-order equation
//!   tr Σ D²A(w) − w·∇A(w) = h(w) − Φ_Σ(h) solved through the Gaussian
//!   smoothing representation (whitened Gauss–Hermite inside, an angular
//!   substitution outside);
//! - [`operators`]: the characterizing operators of other target laws
//!   (Poisson, exponential, binomial, gamma) and the zero-mean
//!   characterization test.

pub mod operators;
pub mod solve1d;
pub mod solvemv;

pub use operators::{characterization_test, default_char_panel, sample_target, stein_operator_apply, CharFn, CharRow, TargetOperator};
pub use solve1d::{residual_1d, solve_1d, SteinSolution1D};
pub use solvemv::{residual_mv, solve_mv, QuadSpecMv, SteinSolutionMv};
