//! Quantitative central limit theorems for chaotic dynamical systems.
//!
//! The crate simulates measure-preserving maps and semiflows (doubling map,
//! hyperbolic toral automorphisms, constant-roof suspensions), estimates the
//! correlation quantities that the error bounds consume, solves the Stein
//! equations for normal targets numerically, evaluates every explicit bound
//! on the distance between scaled Birkhoff sums and the limiting normal law,
//! and measures those distances empirically so bound and experiment can be
//! confronted.
//!
//! Module map:
//! - [`systems`]: phase spaces, exact-in-distribution sampling, orbit iteration
//! - [`observables`]: vector observables with regularity metadata
//! - [`birkhoff`]: the scaled sums `W`, the gapped sums `W^n`, continuous-time `V`
//! - [`correlations`]: pair/fourth-order correlation estimation and envelope fits
//! - [`stein`]: Stein-equation solutions in one and several dimensions, operator zoo
//! - [`bounds`]: the packaged error bounds and the gap-size optimizer
//! - [`scheme`]: the dyadic conditioning scheme on the doubling map
//! - [`metrics`]: empirical Wasserstein/Kolmogorov/smooth-metric distances

pub mod birkhoff;
pub mod bounds;
pub mod correlations;
pub mod hfuns;
pub mod mc;
pub mod metrics;
pub mod numeric;
pub mod observables;
pub mod rng;
pub mod scheme;
pub mod stein;
pub mod systems;

use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure classes of the public
/// operations: contract violations, bad configuration, numerical failures
/// (carrying the achieved tolerance where applicable), resource limits, and
/// fit failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
