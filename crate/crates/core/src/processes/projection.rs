use super::kernel::{KernelEvaluator, RadialRnmKernel};
use super::potential::PotentialSpec;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::measure::PointConfiguration;
use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma};
use std::f64::consts::PI;

/// Orthonormal functions f_0..f_{n−1} spanning a projection kernel.
pub trait FeatureMap: Send + Sync {
    fn dim(&self) -> usize;
    fn rank(&self) -> usize;
    /// Writes f_j(x) into `out[j]` for j in the returned window [lo, hi).
    /// Entries outside the window are negligible and left untouched.
    fn features(&self, x: &[f64], out: &mut [Complex64]) -> (usize, usize);
}

/// Proposal distribution for the sequential sampler.
///
/// A proposed x is accepted with probability residual(x)/scale(x), where the
/// residual is the squared norm of the feature vector after projecting out the
/// points already chosen. This is exact as long as scale(x)·q(x) is constant
/// (uniform proposals with a global bound) or scale(x) = ‖f(x)‖² with
/// q ∝ ‖f‖² (mixture proposals), and scale(x) ≥ ‖f(x)‖².
pub trait Proposal: Send + Sync {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]);
    fn scale(&self, x: &[f64], norm2: f64) -> Result<f64>;
}

/// Uniform proposal on a domain with a global bound on ‖f(x)‖².
#[derive(Debug, Clone)]
pub struct UniformProposal {
    domain: Domain,
    bound: f64,
}

impl UniformProposal {
    pub fn new(domain: Domain, bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!("envelope bound {bound}")));
        }
        Ok(Self { domain, bound })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

impl Proposal for UniformProposal {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        let (lo, hi) = self.domain.bounding_box();
        loop {
            for k in 0..out.len() {
                out[k] = lo[k] + (hi[k] - lo[k]) * rng.random::<f64>();
            }
            if self.domain.contains_unchecked(out) {
                return;
            }
        }
    }

    fn scale(&self, x: &[f64], norm2: f64) -> Result<f64> {
        if norm2 > self.bound {
            return Err(Error::EnvelopeViolation(format!(
                "‖f(x)‖² = {norm2:.6e} exceeds envelope {:.6e} at {x:?}",
                self.bound
            )));
        }
        Ok(self.bound)
    }
}

/// Draws from K(x,x)/N for the finite Ginibre kernel: pick j uniformly, then
/// |z|² ~ Gamma(j+1)/N and a uniform angle.
#[derive(Debug, Clone)]
pub struct GinibreMixtureProposal {
    n: usize,
}

impl GinibreMixtureProposal {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl Proposal for GinibreMixtureProposal {
    fn dim(&self) -> usize {
        2
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        let j = rng.random_range(0..self.n);
        let s = Gamma::new(j as f64 + 1.0, 1.0).expect("valid shape").sample(rng) / self.n as f64;
        let t = 2.0 * PI * rng.random::<f64>();
        let r = s.sqrt();
        out[0] = r * t.cos();
        out[1] = r * t.sin();
    }

    fn scale(&self, _x: &[f64], norm2: f64) -> Result<f64> {
        Ok(norm2)
    }
}

const MAX_PROPOSALS_PER_POINT: usize = 20_000_000;

/// Sequential sampling of a projection DPP from its orthonormal features.
pub(crate) fn sample_features(
    features: &dyn FeatureMap,
    proposal: &dyn Proposal,
    rng: &mut dyn RngCore,
) -> Result<PointConfiguration> {
    let n = features.rank();
    let d = features.dim();
    if proposal.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: proposal.dim(),
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut basis: Vec<Complex64> = Vec::with_capacity(n * n);
    let mut v = vec![zero; n];
    let mut coef = vec![zero; n];
    let mut w = vec![zero; n];
    let mut x = vec![0.0; d];
    let mut coords = Vec::with_capacity(n * d);
    for k in 0..n {
        let mut accepted = false;
        for _ in 0..MAX_PROPOSALS_PER_POINT {
            proposal.sample(rng, &mut x);
            let (lo, hi) = features.features(&x, &mut v);
            let norm2: f64 = v[lo..hi].iter().map(|c| c.norm_sqr()).sum();
            let scale = match proposal.scale(&x, norm2) {
                Ok(s) => s,
                Err(e) => {
                    v[lo..hi].fill(zero);
                    return Err(e);
                }
            };
            let threshold = rng.random::<f64>() * scale;
            let mut resid = norm2;
            let mut keep = resid > threshold;
            if keep {
                // The residual only decreases, so stop as soon as it drops below
                // the threshold.
                for i in 0..k {
                    let e = &basis[i * n + lo..i * n + hi];
                    let c: Complex64 = e.iter().zip(&v[lo..hi]).map(|(a, b)| a.conj() * b).sum();
                    coef[i] = c;
                    resid -= c.norm_sqr();
                    if resid <= threshold {
                        keep = false;
                        break;
                    }
                }
            }
            if !keep {
                v[lo..hi].fill(zero);
                continue;
            }
            w.copy_from_slice(&v);
            v[lo..hi].fill(zero);
            for i in 0..k {
                let c = coef[i];
                for (a, b) in w.iter_mut().zip(&basis[i * n..(i + 1) * n]) {
                    *a -= c * b;
                }
            }
            let mut nw: f64 = w.iter().map(|c| c.norm_sqr()).sum();
            if nw < 0.5 * norm2 {
                // Second Gram–Schmidt pass restores orthogonality after cancellation.
                for i in 0..k {
                    let e = &basis[i * n..(i + 1) * n];
                    let c: Complex64 = e.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                    for (a, b) in w.iter_mut().zip(e) {
                        *a -= c * b;
                    }
                }
                nw = w.iter().map(|c| c.norm_sqr()).sum();
            }
            if !(nw > 0.0) {
                continue;
            }
            let inv = 1.0 / nw.sqrt();
            basis.extend(w.iter().map(|c| c * inv));
            coords.extend_from_slice(&x);
            accepted = true;
            break;
        }
        if !accepted {
            return Err(Error::Convergence(format!(
                "no proposal accepted for point {} of {n} after {MAX_PROPOSALS_PER_POINT} draws",
                k + 1
            )));
        }
    }
    PointConfiguration::new(d, coords)
}

/// Exact sampling of a projection DPP whose kernel carries an explicit
/// orthonormal expansion. Always returns rank-many points.
pub fn sample_projection_dpp<R: RngCore>(
    kernel: &dyn KernelEvaluator,
    proposal: &dyn Proposal,
    rng: &mut R,
) -> Result<PointConfiguration> {
    let features = kernel
        .expansion()
        .ok_or_else(|| Error::InvalidParameter("kernel has no finite orthonormal expansion".into()))?;
    sample_features(features, proposal, rng)
}

/// Eigenvalues of an N×N Ginibre matrix scaled to the unit disk, sampled as
/// the projection DPP with kernel Σ_{j<N} f_j(z) conj(f_j(w)).
pub fn sample_finite_ginibre<R: RngCore>(n: usize, rng: &mut R) -> Result<PointConfiguration> {
    let kernel = RadialRnmKernel::new(&PotentialSpec::Ginibre, n)?;
    sample_features(&kernel, &GinibreMixtureProposal::new(n), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::kernel::Background;
    use crate::rng::RngStream;

    /// Rank-one kernel f_0 ≡ 1 on the unit square.
    struct Constant;

    impl FeatureMap for Constant {
        fn dim(&self) -> usize {
            2
        }
        fn rank(&self) -> usize {
            1
        }
        fn features(&self, _x: &[f64], out: &mut [Complex64]) -> (usize, usize) {
            out[0] = Complex64::new(1.0, 0.0);
            (0, 1)
        }
    }

    impl KernelEvaluator for Constant {
        fn dim(&self) -> usize {
            2
        }
        fn background(&self) -> Background {
            Background::Lebesgue
        }
        fn eval(&self, _x: &[f64], _y: &[f64]) -> Complex64 {
            Complex64::new(1.0, 0.0)
        }
        fn expansion(&self) -> Option<&dyn FeatureMap> {
            Some(self)
        }
    }

    #[test]
    fn rank_one_is_uniform() {
        let prop = UniformProposal::new(Domain::unit_square(), 1.0).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let trials = 10_000;
        let mut mean = [0.0; 2];
        for _ in 0..trials {
            let s = sample_projection_dpp(&Constant, &prop, &mut rng).unwrap();
            assert_eq!(s.len(), 1);
            mean[0] += s.point(0)[0] / trials as f64;
            mean[1] += s.point(0)[1] / trials as f64;
        }
        let sd = (1.0f64 / 12.0 / trials as f64).sqrt();
        assert!((mean[0] - 0.5).abs() < 3.0 * sd && (mean[1] - 0.5).abs() < 3.0 * sd);
    }

    #[test]
    fn tight_envelope_is_reported() {
        let prop = UniformProposal::new(Domain::unit_square(), 0.5).unwrap();
        let r = sample_projection_dpp(&Constant, &prop, &mut RngStream::new(1, 0).rng());
        assert!(matches!(r, Err(Error::EnvelopeViolation(_))));
    }

    #[test]
    fn ginibre_emits_rank_many_points() {
        for n in [1usize, 2, 7, 30] {
            let s = sample_finite_ginibre(n, &mut RngStream::new(5, n as u64).rng()).unwrap();
            assert_eq!(s.len(), n);
        }
    }

    #[test]
    fn ginibre_replay_is_identical() {
        let a = sample_finite_ginibre(20, &mut RngStream::new(8, 1).rng()).unwrap();
        let b = sample_finite_ginibre(20, &mut RngStream::new(8, 1).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ginibre_two_points_separation() {
        // For N = 2 the squared separation |z1 − z2|² is Gamma(2, 1); its mean is 2.
        let mut rng = RngStream::new(11, 0).rng();
        let trials = 4000;
        let mut m = 0.0;
        for _ in 0..trials {
            let s = sample_finite_ginibre(2, &mut rng).unwrap();
            let (a, b) = (s.point(0), s.point(1));
            m += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)) / trials as f64;
        }
        // Var of Gamma(2,1) is 2.
        assert!((m - 2.0).abs() < 3.0 * (2.0f64 / trials as f64).sqrt(), "{m}");
    }

    #[test]
    fn ginibre_subdisk_counts() {
        // E #{|z| < 0.5} = Σ_j P(j+1, N/4) for N = 16.
        let n = 16;
        let expect: f64 = (0..n)
            .map(|j| crate::numerics::special::gamma_pq(j as f64 + 1.0, n as f64 * 0.25).0)
            .sum();
        let mut rng = RngStream::new(12, 0).rng();
        let trials = 1000;
        let counts: Vec<f64> = (0..trials)
            .map(|_| {
                let s = sample_finite_ginibre(n, &mut rng).unwrap();
                s.iter().filter(|p| p[0].hypot(p[1]) < 0.5).count() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!((mean - expect).abs() < 3.0 * (var / trials as f64).sqrt(), "{mean} vs {expect}");
        assert!(var <= mean, "sub-Poissonian: {var} > {mean}");
    }
}
