//! Log-domain entropic transport. Approximate only; never used where a
//! certified inequality is needed.

use super::quantize::WeightedCloud;
use super::sq_dist;
use crate::error::{Error, Result};
use crate::measure::PointConfiguration;

#[derive(Debug, Clone)]
pub struct SinkhornResult {
    /// (Σ P_ij |x_i − y_j|²)^{1/2} for the entropic plan P.
    pub cost: f64,
    /// Square root of the Sinkhorn divergence
    /// OT_ε(a,b) − ½OT_ε(a,a) − ½OT_ε(b,b), clamped at zero.
    pub debiased: f64,
    pub iterations: usize,
    pub marginal_violation: f64,
}

struct Entropic {
    transport: f64,
    dual: f64,
    iterations: usize,
    violation: f64,
}

const OMEGA: f64 = 1.5;

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn solve(dim: usize, x: &[f64], a: &[f64], y: &[f64], b: &[f64], eps: f64, max_iter: usize) -> Result<Entropic> {
    let n = a.len();
    let m = b.len();
    let cost: Vec<f64> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| sq_dist(&x[i * dim..(i + 1) * dim], &y[j * dim..(j + 1) * dim]))
        .collect();
    let la: Vec<f64> = a.iter().map(|v| v.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|v| v.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut buf_n = vec![0.0; n];
    let mut buf_m = vec![0.0; m];
    let mut violation = f64::INFINITY;
    let mut it = 0;
    // ε-scaling: anneal from the cost scale down to the target, warm-starting
    // the potentials at each stage.
    let scale = cost.iter().cloned().fold(0.0, f64::max).max(eps);
    let mut stage_eps = scale;
    loop {
        stage_eps = (stage_eps * 0.5).max(eps);
        let last = stage_eps == eps;
        let tol = if last { 1e-6 } else { 1e-3 };
        let omega = OMEGA;
        while it < max_iter {
            it += 1;
            for i in 0..n {
                for j in 0..m {
                    buf_m[j] = (g[j] - cost[i * m + j]) / stage_eps + lb[j];
                }
                let t = -stage_eps * log_sum_exp(&buf_m);
                f[i] = if last { f[i] + omega * (t - f[i]) } else { t };
            }
            for j in 0..m {
                for i in 0..n {
                    buf_n[i] = (f[i] - cost[i * m + j]) / stage_eps + la[i];
                }
                let t = -stage_eps * log_sum_exp(&buf_n);
                g[j] = if last { g[j] + omega * (t - g[j]) } else { t };
            }
            if it % 5 == 0 || it == max_iter {
                violation = 0.0;
                for i in 0..n {
                    let row: f64 = (0..m)
                        .map(|j| ((f[i] + g[j] - cost[i * m + j]) / stage_eps + la[i] + lb[j]).exp())
                        .sum();
                    violation += (row - a[i]).abs();
                }
                if violation < tol {
                    break;
                }
            }
        }
        if last || it >= max_iter {
            if !last {
                violation = f64::INFINITY;
            }
            break;
        }
    }
    if violation >= 1e-6 {
        return Err(Error::Convergence(format!(
            "sinkhorn stopped after {it} iterations with marginal violation {violation:.3e}"
        )));
    }
    let mut transport = 0.0;
    for i in 0..n {
        for j in 0..m {
            let p = ((f[i] + g[j] - cost[i * m + j]) / eps + la[i] + lb[j]).exp();
            transport += p * cost[i * m + j];
        }
    }
    let dual = f.iter().zip(a).map(|(f, a)| f * a).sum::<f64>() + g.iter().zip(b).map(|(g, b)| g * b).sum::<f64>();
    Ok(Entropic {
        transport,
        dual,
        iterations: it,
        violation,
    })
}

/// Entropic W2 between a uniform empirical measure and a weighted cloud.
pub fn w2_sinkhorn(
    emp: &PointConfiguration,
    cloud: &WeightedCloud,
    epsilon: f64,
    max_iter: usize,
) -> Result<SinkhornResult> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if emp.is_empty() || cloud.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    if emp.dim() != cloud.dim {
        return Err(Error::DimensionMismatch { expected: cloud.dim, found: emp.dim() });
    }
    let d = emp.dim();
    let a = vec![1.0 / emp.len() as f64; emp.len()];
    let bsum: f64 = cloud.weights.iter().sum();
    let b: Vec<f64> = cloud.weights.iter().map(|w| w / bsum).collect();
    let ab = solve(d, emp.coords(), &a, &cloud.points, &b, epsilon, max_iter)?;
    let aa = solve(d, emp.coords(), &a, emp.coords(), &a, epsilon, max_iter)?;
    let bb = solve(d, &cloud.points, &b, &cloud.points, &b, epsilon, max_iter)?;
    let div = ab.dual - 0.5 * aa.dual - 0.5 * bb.dual;
    Ok(SinkhornResult {
        cost: ab.transport.max(0.0).sqrt(),
        debiased: div.max(0.0).sqrt(),
        iterations: ab.iterations,
        marginal_violation: ab.violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::w2_assignment;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud_of(p: &PointConfiguration) -> WeightedCloud {
        WeightedCloud {
            dim: p.dim(),
            points: p.coords().to_vec(),
            weights: vec![1.0; p.len()],
            bound: 0.0,
            raw_mass: 1.0,
        }
    }

    #[test]
    fn identical_clouds_small_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = PointConfiguration::new(2, (0..40).map(|_| rng.random()).collect()).unwrap();
        let r = w2_sinkhorn(&p, &cloud_of(&p), 1e-3, 10_000).unwrap();
        assert!(r.cost <= 0.05 * 2f64.sqrt(), "{}", r.cost);
    }

    #[test]
    fn close_to_exact_for_small_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = PointConfiguration::new(2, (0..12).map(|_| rng.random()).collect()).unwrap();
        let b = PointConfiguration::new(2, (0..12).map(|_| rng.random()).collect()).unwrap();
        let exact = w2_assignment(&a, &b).unwrap().cost;
        let r = w2_sinkhorn(&a, &cloud_of(&b), 1e-4, 200_000).unwrap();
        assert!((r.cost - exact).abs() <= 0.02 * exact, "{} vs {exact}", r.cost);
    }

    #[test]
    fn debiased_gap_shrinks_with_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = PointConfiguration::new(2, (0..20).map(|_| rng.random()).collect()).unwrap();
        let b = PointConfiguration::new(2, (0..20).map(|_| rng.random()).collect()).unwrap();
        let exact = w2_assignment(&a, &b).unwrap().cost;
        let mut prev = f64::INFINITY;
        for eps in [3e-1, 1e-1, 3e-2, 1e-2] {
            let r = w2_sinkhorn(&a, &cloud_of(&b), eps, 200_000).unwrap();
            let gap = (r.debiased - exact).abs();
            assert!(gap < prev, "eps={eps}: {gap} ≥ {prev}");
            prev = gap;
        }
    }

    #[test]
    fn reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = PointConfiguration::new(2, (0..20).map(|_| rng.random()).collect()).unwrap();
        let b = PointConfiguration::new(2, (0..20).map(|_| rng.random()).collect()).unwrap();
        assert!(matches!(w2_sinkhorn(&a, &cloud_of(&b), 1e-5, 1), Err(Error::Convergence(_))));
    }
}
