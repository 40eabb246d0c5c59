//! Point processes: kernels, exact and approximate samplers, potentials.

mod gaf;
mod kernel;
mod mcmc;
mod nystrom;
mod poisson;
mod potential;
mod projection;

pub use gaf::{gaf_roots_from_coefficients, sample_gaf_zeros, sample_gaf_zeros_with_coefficients, GafSpec};
pub use kernel::{
    kernel_bessel, kernel_infinite_ginibre, kernel_rnm_radial, Background, BesselKernel, InfiniteGinibreKernel,
    KernelEvaluator, KernelKind, RadialRnmKernel,
};
pub use mcmc::{sample_rnm_mcmc, McmcOutcome};
pub use nystrom::{sample_dpp_nystrom, NystromSampler};
pub use poisson::sample_poisson;
pub use potential::{bulk_edge_deviation, equilibrium_measure, PotentialSpec};
pub use projection::{
    sample_finite_ginibre, sample_projection_dpp, FeatureMap, GinibreMixtureProposal, Proposal, UniformProposal,
};
