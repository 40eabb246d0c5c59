use super::{sq_dist, PlanEntry, Solver, TransportPlanResult};
use crate::error::{Error, Result};
use crate::measure::PointConfiguration;
use crate::numerics::KahanSum;

/// Minimum-cost perfect matching on a dense n×n cost matrix (row-major) by
/// shortest augmenting paths with dual potentials. Returns the column
/// assigned to each row.
pub fn solve_assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    // 1-based arrays with a virtual column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|f| *f = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Exact W2 between two equal-size uniform atom sets.
pub fn w2_assignment(a: &PointConfiguration, b: &PointConfiguration) -> Result<TransportPlanResult> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let n = a.len();
    if n == 0 {
        return Ok(TransportPlanResult {
            cost: 0.0,
            plan: Some(Vec::new()),
            solver: Solver::Assignment,
            quantization_bound: 0.0,
            n: 0,
            m: 0,
        });
    }
    let mut cost = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            cost.push(sq_dist(a.point(i), b.point(j)));
        }
    }
    let assign = solve_assignment(n, &cost);
    let mut total = KahanSum::new();
    for (i, &j) in assign.iter().enumerate() {
        total.add(cost[i * n + j]);
    }
    let mass = 1.0 / n as f64;
    Ok(TransportPlanResult {
        cost: (total.value() * mass).sqrt(),
        plan: Some(
            assign
                .iter()
                .enumerate()
                .map(|(src, &dst)| PlanEntry { src, dst, mass })
                .collect(),
        ),
        solver: Solver::Assignment,
        quantization_bound: 0.0,
        n,
        m: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::w2_bruteforce;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_config(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PointConfiguration {
        PointConfiguration::new(d, (0..n * d).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn agrees_with_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..60 {
            let n = 2 + trial % 7;
            let d = 1 + trial % 3;
            let a = random_config(&mut rng, n, d);
            let b = random_config(&mut rng, n, d);
            let exact = w2_bruteforce(&a, &b).unwrap();
            let r = w2_assignment(&a, &b).unwrap();
            assert!((r.cost - exact).abs() <= 1e-12 * exact.max(1e-300), "{} vs {exact}", r.cost);
        }
    }

    #[test]
    fn shifted_separated_copy() {
        let b = PointConfiguration::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let v = [0.1, -0.05];
        let a = b.map_affine(1.0, &v);
        let r = w2_assignment(&a, &b).unwrap();
        assert!((r.cost - (0.01f64 + 0.0025).sqrt()).abs() < 1e-14);
        for e in r.plan.unwrap() {
            assert_eq!(e.src, e.dst);
        }
    }

    #[test]
    fn empty_is_zero() {
        let e = PointConfiguration::empty(2);
        let r = w2_assignment(&e, &e).unwrap();
        assert_eq!(r.cost, 0.0);
        assert!(r.plan.unwrap().is_empty());
    }
}
