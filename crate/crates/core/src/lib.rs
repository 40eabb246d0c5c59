//! Numerical laboratory for quadratic Wasserstein convergence of point processes.
//!
//! The crate samples several point processes (Poisson, finite and infinite
//! Ginibre, Bessel, zeros of the planar Gaussian analytic function, random
//! normal matrix ensembles), measures their exact 2-Wasserstein distance to
//! the limiting measure, and evaluates the explicit Neumann heat-smoothing
//! upper bound on boxes.
//!
//! Module map:
//! - [`domain`], [`measure`], [`rng`]: shared domain types and the
//!   counter-based random stream contract.
//! - [`spectral`]: Neumann cosine eigenbasis on boxes, Fourier coefficients,
//!   heat evolution, eigenvalue counting and truncation certificates.
//! - [`transport`]: exact and approximate W2 solvers plus the L² upper bound.
//! - [`processes`]: kernels and samplers.
//! - [`smoothing`]: the heat-smoothing bound and its optimisation over time.
//! - [`harness`]: experiment grids, persistence and rate fitting.

pub mod domain;
pub mod error;
pub mod harness;
pub mod measure;
pub mod numerics;
pub mod processes;
pub mod rng;
pub mod smoothing;
pub mod spectral;
pub mod transport;

pub use domain::Domain;
pub use error::{Error, Result};
pub use measure::{PointConfiguration, ReferenceMeasure};
pub use rng::RngStream;
