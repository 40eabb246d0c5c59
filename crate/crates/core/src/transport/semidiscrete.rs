use super::network_simplex::w2_discrete;
use super::quantize::{cell_count, quantize};
use super::{Solver, TransportPlanResult};
use crate::error::{Error, Result};
use crate::measure::{PointConfiguration, ReferenceMeasure};

/// Default cap on N·m^d dense cost entries.
pub const DEFAULT_PROBLEM_LIMIT: usize = 50_000_000;

/// Exact W2 between the empirical measure of `emp` and the quantized
/// reference. `quantization_bound` also absorbs marginal rounding and the
/// certified duality gap of the solver.
pub fn w2_semidiscrete(
    emp: &PointConfiguration,
    reference: &ReferenceMeasure,
    resolution: usize,
) -> Result<TransportPlanResult> {
    w2_semidiscrete_with_limit(emp, reference, resolution, DEFAULT_PROBLEM_LIMIT)
}

pub fn w2_semidiscrete_with_limit(
    emp: &PointConfiguration,
    reference: &ReferenceMeasure,
    resolution: usize,
    limit: usize,
) -> Result<TransportPlanResult> {
    if emp.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    if emp.dim() != reference.domain().dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.domain().dim(),
            found: emp.dim(),
        });
    }
    let cells = cell_count(reference.domain(), resolution).unwrap_or(usize::MAX);
    if emp.len().saturating_mul(cells) > limit {
        return Err(Error::TooLarge(format!(
            "{} atoms × {cells} cells exceeds the limit of {limit} cost entries",
            emp.len()
        )));
    }
    let cloud = quantize(reference, resolution)?;
    let d = emp.dim();
    let weights = vec![1.0; emp.len()];
    let sol = w2_discrete(d, emp.coords(), &weights, &cloud.points, &cloud.weights)?;

    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in emp.iter().chain(cloud.points.chunks_exact(d)) {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let diameter = lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
    Ok(TransportPlanResult {
        cost: sol.cost_sq.max(0.0).sqrt(),
        quantization_bound: cloud.bound + sol.w2_slack(diameter),
        plan: Some(sol.plan),
        solver: Solver::NetworkSimplex,
        n: emp.len(),
        m: cloud.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;

    #[test]
    fn centroid_atoms_have_zero_cost() {
        let r = ReferenceMeasure::uniform(Domain::unit_square());
        let q = quantize(&r, 2).unwrap();
        let emp = PointConfiguration::new(2, q.points.clone()).unwrap();
        let res = w2_semidiscrete(&emp, &r, 2).unwrap();
        assert!(res.cost < 1e-7, "{}", res.cost);
        let q8 = quantize(&r, 8).unwrap();
        let emp8 = PointConfiguration::new(2, q8.points.clone()).unwrap();
        assert!(w2_semidiscrete(&emp8, &r, 8).unwrap().cost < 1e-7);
    }

    #[test]
    fn single_atom_at_disk_centre() {
        let r = ReferenceMeasure::uniform(Domain::unit_disk());
        let emp = PointConfiguration::from_points(&[[0.0, 0.0]]).unwrap();
        let res = w2_semidiscrete(&emp, &r, 128).unwrap();
        assert!((res.cost - 0.5f64.sqrt()).abs() <= res.quantization_bound);
        assert!(res.quantization_bound < 0.017);
    }

    #[test]
    fn size_limit_is_enforced() {
        let r = ReferenceMeasure::uniform(Domain::unit_square());
        let emp = PointConfiguration::from_points(&[[0.5, 0.5]; 10]).unwrap();
        assert!(matches!(
            w2_semidiscrete_with_limit(&emp, &r, 100, 1000),
            Err(Error::TooLarge(_))
        ));
        assert!(matches!(
            w2_semidiscrete(&PointConfiguration::empty(2), &r, 4),
            Err(Error::EmptyConfiguration)
        ));
    }
}
