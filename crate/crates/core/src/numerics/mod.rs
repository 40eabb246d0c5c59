//! Quadrature rules, special functions and compensated summation.

pub mod bessel;
pub mod quadrature;
pub mod special;
pub mod summation;

pub use quadrature::{gauss_legendre, integrate_adaptive, GaussLegendre};
pub use summation::{pairwise_sum, KahanSum};
