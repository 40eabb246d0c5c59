use super::potential::PotentialSpec;
use crate::error::{Error, Result};
use crate::numerics::bessel::{bessel_j, bessel_j_series};
use crate::numerics::integrate_adaptive;
use crate::numerics::special::{ln_factorial, ln_gamma};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Measure with respect to which a kernel's intensities are densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Background {
    /// Plain dx.
    Lebesgue,
    /// dA = dx/π in the plane.
    LebesgueOverPi,
}

impl Background {
    /// Factor converting a density w.r.t. this background into a Lebesgue density.
    pub fn to_lebesgue(self) -> f64 {
        match self {
            Background::Lebesgue => 1.0,
            Background::LebesgueOverPi => 1.0 / PI,
        }
    }
}

/// Which specialised algorithms apply to a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    InfiniteGinibre { l: f64 },
    Bessel { l: f64, d: usize },
    RadialRnm { n: usize },
    Other,
}

/// A Hermitian correlation kernel.
pub trait KernelEvaluator: Send + Sync {
    fn dim(&self) -> usize;
    fn background(&self) -> Background;
    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64;
    /// K(x, x).
    fn intensity(&self, x: &[f64]) -> f64 {
        self.eval(x, x).re
    }
    fn is_real(&self) -> bool {
        false
    }
    fn kind(&self) -> KernelKind {
        KernelKind::Other
    }
    /// For isotropic translation-invariant real kernels, K as a function of
    /// |x − y|.
    fn radial(&self, _r: f64) -> Option<f64> {
        None
    }
    /// Explicit orthonormal expansion, when the kernel is a finite-rank projection.
    fn expansion(&self) -> Option<&dyn super::FeatureMap> {
        None
    }
}

/// Infinite Ginibre kernel (L/π)·exp(−L(|z|²+|w|²−2zw̄)/2).
#[derive(Debug, Clone, Copy)]
pub struct InfiniteGinibreKernel {
    l: f64,
}

impl InfiniteGinibreKernel {
    pub fn new(l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!("intensity parameter L = {l}")));
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> f64 {
        self.l
    }
}

pub fn kernel_infinite_ginibre(l: f64) -> Result<InfiniteGinibreKernel> {
    InfiniteGinibreKernel::new(l)
}

impl KernelEvaluator for InfiniteGinibreKernel {
    fn dim(&self) -> usize {
        2
    }

    fn background(&self) -> Background {
        Background::Lebesgue
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        let z = Complex64::new(x[0], x[1]);
        let w = Complex64::new(y[0], y[1]);
        let e = -0.5 * self.l * (z.norm_sqr() + w.norm_sqr()) + self.l * z * w.conj();
        e.exp() * (self.l / PI)
    }

    fn intensity(&self, _x: &[f64]) -> f64 {
        self.l / PI
    }

    fn kind(&self) -> KernelKind {
        KernelKind::InfiniteGinibre { l: self.l }
    }
}

/// Projection kernel onto frequencies |ξ| ≤ κ in R^d, scaled so K(x,x) = L.
#[derive(Debug, Clone, Copy)]
pub struct BesselKernel {
    l: f64,
    d: usize,
    kappa: f64,
    diag: f64,
}

impl BesselKernel {
    pub fn new(l: f64, d: usize) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) || d == 0 {
            return Err(Error::InvalidParameter(format!("Bessel kernel L = {l}, d = {d}")));
        }
        let nu = 0.5 * d as f64;
        let kappa = 2.0 * PI.sqrt() * (ln_gamma(nu + 1.0).exp() * l).powf(1.0 / d as f64);
        Ok(Self { l, d, kappa, diag: l })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Kernel value as a function of |x − y|.
    pub fn radial(&self, r: f64) -> f64 {
        let nu = 0.5 * self.d as f64;
        let u = self.kappa * r;
        // K = L·Γ(ν+1)·J_ν(u)/(u/2)^ν; the ratio is an entire function of u.
        let ratio = if u < 1.0 {
            let q = 0.25 * u * u;
            let mut term = (-ln_gamma(nu + 1.0)).exp();
            let mut sum = term;
            for k in 1..40 {
                let kf = k as f64;
                term *= -q / (kf * (kf + nu));
                sum += term;
                if term.abs() < 1e-18 {
                    break;
                }
            }
            sum
        } else {
            bessel_j(nu, u) / (0.5 * u).powf(nu)
        };
        self.diag * ln_gamma(nu + 1.0).exp() * ratio
    }

    /// Same as `radial` but through the plain power series, for cross-checks.
    pub fn radial_series(&self, r: f64) -> f64 {
        let nu = 0.5 * self.d as f64;
        let u = self.kappa * r;
        if u == 0.0 {
            return self.diag;
        }
        self.diag * ln_gamma(nu + 1.0).exp() * bessel_j_series(nu, u) / (0.5 * u).powf(nu)
    }
}

pub fn kernel_bessel(l: f64, d: usize) -> Result<BesselKernel> {
    BesselKernel::new(l, d)
}

impl KernelEvaluator for BesselKernel {
    fn dim(&self) -> usize {
        self.d
    }

    fn background(&self) -> Background {
        Background::Lebesgue
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        let r = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        Complex64::new(self.radial(r), 0.0)
    }

    fn intensity(&self, _x: &[f64]) -> f64 {
        self.l
    }

    fn is_real(&self) -> bool {
        true
    }

    fn kind(&self) -> KernelKind {
        KernelKind::Bessel { l: self.l, d: self.d }
    }

    fn radial(&self, r: f64) -> Option<f64> {
        Some(BesselKernel::radial(self, r))
    }
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Finite-N kernel of a random normal matrix ensemble with radial potential,
/// with respect to dA = dx/π. Orthonormal functions are z^j e^{−NQ/2}/√h_j.
#[derive(Clone)]
pub struct RadialRnmKernel {
    n: usize,
    q: Profile,
    ln_h: Vec<f64>,
}

impl std::fmt::Debug for RadialRnmKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialRnmKernel").field("n", &self.n).finish()
    }
}

/// Terms whose log-modulus lies this far below the largest are dropped.
const LOG_CUTOFF: f64 = 75.0;

impl RadialRnmKernel {
    pub fn new(potential: &PotentialSpec, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        let q = potential
            .radial_profile()
            .ok_or_else(|| Error::InvalidParameter(format!("potential {} is not radial", potential.name())))?;
        potential.growth_check()?;
        let ln_h = if matches!(potential, PotentialSpec::Ginibre) {
            ginibre_ln_h(n)
        } else {
            (0..n).map(|j| ln_moment(&q, n, j)).collect::<Result<Vec<_>>>()?
        };
        Ok(Self { n, q, ln_h })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// ln h_j for j < N.
    pub fn ln_h(&self) -> &[f64] {
        &self.ln_h
    }

    fn log_mod(&self, j: usize, ln_r: f64, nq: f64) -> f64 {
        if j == 0 {
            -0.5 * nq - 0.5 * self.ln_h[0]
        } else {
            j as f64 * ln_r - 0.5 * nq - 0.5 * self.ln_h[j]
        }
    }

    /// Index window outside which |f_j(x)|² is negligible. The log-modulus is
    /// concave in j, so the window is an interval around its maximum.
    fn window(&self, ln_r: f64, nq: f64) -> (usize, usize) {
        if ln_r == f64::NEG_INFINITY {
            return (0, 1);
        }
        let vals = |j| self.log_mod(j, ln_r, nq);
        let mut best = 0;
        let mut best_v = vals(0);
        for j in 1..self.n {
            let v = vals(j);
            if v > best_v {
                best = j;
                best_v = v;
            }
        }
        let cut = best_v - 0.5 * LOG_CUTOFF;
        let mut lo = best;
        while lo > 0 && vals(lo - 1) > cut {
            lo -= 1;
        }
        let mut hi = best + 1;
        while hi < self.n && vals(hi) > cut {
            hi += 1;
        }
        (lo, hi)
    }
}

fn ginibre_ln_h(n: usize) -> Vec<f64> {
    (0..n).map(|j| ln_factorial(j) - (j as f64 + 1.0) * (n as f64).ln()).collect()
}

/// ln ∫_0^∞ r^{2j} e^{−NQ(r)} 2r dr, integrating around the peak of the integrand.
fn ln_moment(q: &Profile, n: usize, j: usize) -> Result<f64> {
    let nf = n as f64;
    let phi = |r: f64| {
        if r <= 0.0 {
            f64::NEG_INFINITY
        } else {
            std::f64::consts::LN_2 + (2.0 * j as f64 + 1.0) * r.ln() - nf * q(r)
        }
    };
    // Bracket the peak on a geometric grid, then refine by golden section.
    let mut r_best = 1e-3;
    let mut v_best = phi(r_best);
    let mut r = 1e-3;
    while r < 1e4 {
        let v = phi(r);
        if v > v_best {
            v_best = v;
            r_best = r;
        }
        r *= 1.05;
    }
    let (mut a, mut b) = (r_best / 1.05, r_best * 1.05);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if phi(c) > phi(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let peak = 0.5 * (a + b);
    let m = phi(peak);
    if !m.is_finite() {
        return Err(Error::Quadrature(format!("moment {j}: integrand not finite at its peak")));
    }
    // Extend outward until the integrand has decayed by e^{-60}.
    let mut hi = peak * 1.1 + 1e-3;
    while phi(hi) - m > -60.0 {
        hi = peak + 2.0 * (hi - peak);
        if hi > 1e8 {
            return Err(Error::Quadrature(format!("moment {j}: integrand does not decay")));
        }
    }
    let mut lo = 0.0;
    let mut step = 0.5 * peak;
    while step > 1e-300 && phi(peak - step) - m < -60.0 {
        lo = peak - step;
        step *= 0.5;
    }
    let f = |r: f64| (phi(r) - m).exp();
    let left = integrate_adaptive(f, lo, peak, 1e-13, 1e-300)?;
    let right = integrate_adaptive(f, peak, hi, 1e-13, 1e-300)?;
    Ok(m + (left + right).ln())
}

pub fn kernel_rnm_radial(potential: &PotentialSpec, n: usize) -> Result<RadialRnmKernel> {
    RadialRnmKernel::new(potential, n)
}

impl KernelEvaluator for RadialRnmKernel {
    fn dim(&self) -> usize {
        2
    }

    fn background(&self) -> Background {
        Background::LebesgueOverPi
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        let z = Complex64::new(x[0], x[1]);
        let w = Complex64::new(y[0], y[1]);
        let p = z * w.conj();
        let nq = self.n as f64 * 0.5 * ((self.q)(z.norm()) + (self.q)(w.norm()));
        if p.norm() == 0.0 {
            return Complex64::new((-nq - self.ln_h[0]).exp(), 0.0);
        }
        let (ln_p, arg) = (p.norm().ln(), p.arg());
        let logs: Vec<f64> = (0..self.n).map(|j| j as f64 * ln_p - nq - self.ln_h[j]).collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = Complex64::new(0.0, 0.0);
        for (j, l) in logs.iter().enumerate() {
            if l - m > -LOG_CUTOFF {
                s += Complex64::from_polar((l - m).exp(), j as f64 * arg);
            }
        }
        s * m.exp()
    }

    fn intensity(&self, x: &[f64]) -> f64 {
        let r = x[0].hypot(x[1]);
        let nq = self.n as f64 * (self.q)(r);
        if r == 0.0 {
            return (-nq - self.ln_h[0]).exp();
        }
        let ln_r2 = 2.0 * r.ln();
        let logs: Vec<f64> = (0..self.n).map(|j| j as f64 * ln_r2 - nq - self.ln_h[j]).collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m.exp() * logs.iter().map(|l| (l - m).exp()).sum::<f64>()
    }

    fn kind(&self) -> KernelKind {
        KernelKind::RadialRnm { n: self.n }
    }

    fn expansion(&self) -> Option<&dyn super::FeatureMap> {
        Some(self)
    }
}

impl super::FeatureMap for RadialRnmKernel {
    fn dim(&self) -> usize {
        2
    }

    fn rank(&self) -> usize {
        self.n
    }

    fn features(&self, x: &[f64], out: &mut [Complex64]) -> (usize, usize) {
        let r = x[0].hypot(x[1]);
        let ln_r = r.ln();
        let theta = x[1].atan2(x[0]);
        let nq = self.n as f64 * (self.q)(r);
        let (lo, hi) = self.window(ln_r, nq);
        for (j, slot) in out.iter_mut().enumerate().take(hi).skip(lo) {
            *slot = Complex64::from_polar(self.log_mod(j, ln_r, nq).exp(), j as f64 * theta);
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GaussLegendre;
    use rand::{Rng, SeedableRng};

    #[test]
    fn ginibre_diagonal_and_modulus() {
        let k = kernel_infinite_ginibre(150.0).unwrap();
        assert!((k.intensity(&[0.3, -0.2]) - 150.0 / PI).abs() < 1e-12);
        assert!((k.eval(&[0.3, -0.2], &[0.3, -0.2]).re - 47.7464829275686).abs() < 1e-9);
        let k2 = kernel_infinite_ginibre(2.0).unwrap();
        let v = k2.eval(&[0.1, 0.2], &[0.1 + 0.6, 0.2 + 0.8]).norm();
        assert!((v - 2.0 / PI * (-1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn hermitian_symmetry() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let g = kernel_infinite_ginibre(20.0).unwrap();
        let r = kernel_rnm_radial(&PotentialSpec::Ginibre, 12).unwrap();
        for _ in 0..100 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let y = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            assert!((g.eval(&x, &y) - g.eval(&y, &x).conj()).norm() < 1e-12);
            let a = r.eval(&x, &y);
            assert!((a - r.eval(&y, &x).conj()).norm() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn bessel_diagonal_and_symmetry() {
        let k = kernel_bessel(50.0, 2).unwrap();
        assert_eq!(k.intensity(&[0.1, 0.1]), 50.0);
        assert!((k.eval(&[0.1, 0.1], &[0.1, 0.1]).re - 50.0).abs() < 1e-12);
        let (x, y) = ([0.2, 0.7], [0.5, 0.1]);
        assert_eq!(k.eval(&x, &y), k.eval(&y, &x));
        // Continuity across the series/recurrence switch.
        let u = 1.0 / k.kappa();
        assert!((k.radial(u * (1.0 - 1e-9)) - k.radial(u * (1.0 + 1e-9))).abs() < 1e-6);
    }

    #[test]
    fn bessel_one_dimensional_sine_kernel() {
        let l = 7.0;
        let k = kernel_bessel(l, 1).unwrap();
        let r = 1.0 / l;
        let direct = (PI * l * r).sin() / (PI * r);
        assert!((k.radial(r) - direct).abs() < 1e-10);
        assert!((k.radial_series(r) - k.radial(r)).abs() < 1e-10);
    }

    #[test]
    fn bessel_three_dimensional_diagonal() {
        let k = kernel_bessel(30.0, 3).unwrap();
        assert!((k.radial(1e-9) - 30.0).abs() < 1e-9);
        assert!((k.radial_series(0.05) - k.radial(0.05)).abs() < 1e-9);
    }

    #[test]
    fn ginibre_moments_match_quadrature() {
        let q: Profile = Arc::new(|r: f64| r * r);
        for n in [1usize, 8, 40] {
            let exact = ginibre_ln_h(n);
            for j in 0..n {
                let num = ln_moment(&q, n, j).unwrap();
                assert!((num - exact[j]).abs() < 1e-10, "N={n} j={j}: {num} vs {}", exact[j]);
            }
        }
    }

    #[test]
    fn rnm_origin_value() {
        let k = kernel_rnm_radial(&PotentialSpec::Ginibre, 8).unwrap();
        assert!((k.intensity(&[0.0, 0.0]) - 8.0).abs() < 1e-12);
        assert!((k.eval(&[0.0, 0.0], &[0.0, 0.0]).re - 8.0).abs() < 1e-12);
    }

    #[test]
    fn expansion_reproduces_kernel() {
        let k = kernel_rnm_radial(&PotentialSpec::Ginibre, 10).unwrap();
        let mut fx = vec![Complex64::new(0.0, 0.0); 10];
        let mut fy = vec![Complex64::new(0.0, 0.0); 10];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x = [rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)];
            let y = [rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)];
            fx.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            fy.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            use super::super::FeatureMap;
            k.features(&x, &mut fx);
            k.features(&y, &mut fy);
            let s: Complex64 = fx.iter().zip(&fy).map(|(a, b)| a * b.conj()).sum();
            assert!((s - k.eval(&x, &y)).norm() < 1e-8);
        }
    }

    #[test]
    fn reproducing_property() {
        let n = 8;
        let k = kernel_rnm_radial(&PotentialSpec::Ginibre, n).unwrap();
        let radial = GaussLegendre::new(80);
        let nang = 96;
        for z in [[0.0, 0.0], [0.5, 0.0]] {
            let mut s = 0.0;
            for (r, wr) in radial.on_interval(0.0, 3.0) {
                for a in 0..nang {
                    let t = 2.0 * PI * a as f64 / nang as f64;
                    let w = [r * t.cos(), r * t.sin()];
                    s += wr * r * (2.0 * PI / nang as f64) / PI * k.eval(&z, &w).norm_sqr();
                }
            }
            assert!((s - k.intensity(&z)).abs() < 1e-6, "{s} vs {}", k.intensity(&z));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(kernel_infinite_ginibre(0.0).is_err());
        assert!(kernel_bessel(1.0, 0).is_err());
        assert!(kernel_rnm_radial(&PotentialSpec::Ginibre, 0).is_err());
        assert!(kernel_rnm_radial(&PotentialSpec::Elliptic { tau: 0.5 }, 4).is_err());
    }
}
