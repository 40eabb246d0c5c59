use crate::error::{Error, Result};
use crate::measure::ReferenceMeasure;
use crate::spectral::NeumannBasis;
use std::f64::consts::PI;

const L2_ORDER: usize = 128;

/// W2(μ, ν) ≤ 2‖ρ_μ − ρ_ν‖_{L²}/(√a·√λ₁) for densities on a box, where
/// a ≤ ρ_μ and λ₁ is the first nonzero Neumann eigenvalue of the box.
pub fn h_neg1_bound(mu: &ReferenceMeasure, nu: &ReferenceMeasure, basis: &NeumannBasis) -> Result<f64> {
    let a = mu.lower_bound();
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("lower bound a = {a} must be positive")));
    }
    let domain = basis.domain();
    if mu.domain() != &domain || nu.domain() != &domain {
        return Err(Error::InvalidParameter("both measures must live on the basis box".into()));
    }
    let longest = basis.sides().iter().cloned().fold(0.0, f64::max);
    let lambda1 = (PI / longest).powi(2);
    let (pts, w) = domain.quadrature(L2_ORDER);
    let d = domain.dim();
    let norm2: f64 = pts
        .chunks_exact(d)
        .zip(&w)
        .map(|(x, w)| w * (mu.density(x) - nu.density(x)).powi(2))
        .sum();
    Ok(2.0 * norm2.sqrt() / (a.sqrt() * lambda1.sqrt()))
}
