use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::measure::PointConfiguration;
use crate::numerics::special::{ln_factorial, ln_gamma_q};
use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Planar Gaussian analytic function f(z) = Σ a_n √(L^n/n!) z^n truncated at
/// degree M, observed in a planar window.
#[derive(Debug, Clone)]
pub struct GafSpec {
    pub l: f64,
    pub degree: usize,
    pub window: Domain,
}

const TAIL_RATIO: f64 = 1e-12;

impl GafSpec {
    /// Smallest degree M with Σ_{n>M} L^n R^{2n}/n! ≤ 1e−12·Σ_{n≤M} L^n R^{2n}/n!,
    /// where R is the window radius about its centre.
    pub fn new(l: f64, window: Domain) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!("GAF intensity L = {l}")));
        }
        if window.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: window.dim(),
            });
        }
        let x = l * window.circumradius().powi(2);
        // Tail and head are Poisson(x) probabilities: Q(M+1, x) = P(X ≤ M).
        let mut m = x.floor() as usize;
        while ln_gamma_q(m as f64 + 1.0, x) - ln_tail(m, x) < -TAIL_RATIO.ln() {
            m += 1;
        }
        Ok(Self { l, degree: m.max(2), window })
    }

    pub fn with_degree(l: f64, degree: usize, window: Domain) -> Result<Self> {
        let mut s = Self::new(l, window)?;
        if degree < s.degree {
            return Err(Error::InvalidParameter(format!(
                "degree {degree} below the truncation requirement {}",
                s.degree
            )));
        }
        s.degree = degree;
        Ok(s)
    }
}

/// ln P(X > m) for X ~ Poisson(x), i.e. ln P(m+1, x).
fn ln_tail(m: usize, x: f64) -> f64 {
    crate::numerics::special::ln_gamma_p(m as f64 + 1.0, x)
}

fn standard_complex(rng: &mut dyn RngCore) -> Complex64 {
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Zeros of the truncated GAF inside the window. Coefficients are drawn in
/// order a_0, a_1, …, so a larger degree extends the same realisation.
pub fn sample_gaf_zeros<R: RngCore>(spec: &GafSpec, rng: &mut R) -> Result<PointConfiguration> {
    let coeffs: Vec<Complex64> = (0..=spec.degree).map(|_| standard_complex(rng)).collect();
    sample_gaf_zeros_with_coefficients(spec, &coeffs)
}

/// Zeros in the window for explicit standard coefficients a_0..a_M. The
/// process is translation invariant in law, so the series is expanded about
/// the window centre.
pub fn sample_gaf_zeros_with_coefficients(spec: &GafSpec, coeffs: &[Complex64]) -> Result<PointConfiguration> {
    let center = spec.window.center();
    let roots = gaf_roots_from_coefficients(spec.l, coeffs)?;
    let c = Complex64::new(center[0], center[1]);
    let mut out = PointConfiguration::empty(2);
    for z in roots {
        let p = z + c;
        if spec.window.contains_unchecked(&[p.re, p.im]) {
            out.push(&[p.re, p.im]);
        }
    }
    Ok(out)
}

/// All roots of Σ a_n √(L^n/n!) z^n, polished. Roots with |z| ≤ √(M/L) have
/// their residual checked against the local scale √(Σ L^n|z|^{2n}/n!).
pub fn gaf_roots_from_coefficients(l: f64, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = coeffs.len().saturating_sub(1);
    if m == 0 {
        return Ok(Vec::new());
    }
    if coeffs[m] == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParameter("leading coefficient is zero".into()));
    }
    // z = s·w with s = √(M/L) puts the bulk of the roots near the unit circle.
    let s = (m as f64 / l).sqrt();
    let ln_b: Vec<f64> = (0..=m)
        .map(|n| 0.5 * (n as f64 * (m as f64).ln() - ln_factorial(n)))
        .collect();
    let shift = (0..=m)
        .map(|n| ln_b[n] + coeffs[n].norm().max(f64::MIN_POSITIVE).ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let poly: Vec<Complex64> = (0..=m).map(|n| coeffs[n] * (ln_b[n] - shift).exp()).collect();
    let scale: Vec<f64> = (0..=m).map(|n| (ln_b[n] - shift).exp()).collect();
    let mut w = aberth(&poly)?;
    let mut roots = Vec::with_capacity(m);
    for root in w.iter_mut() {
        for _ in 0..2 {
            *root -= newton_ratio(&poly, *root);
        }
        // The window lies inside |w| < 1 by the truncation criterion; roots
        // beyond it are artefacts of truncation and are not checked.
        let r = root.norm();
        if r <= 1.0 {
            let (p, _) = horner(&poly, *root);
            let local = scale
                .iter()
                .enumerate()
                .map(|(n, b)| (b * r.powi(n as i32)).powi(2))
                .sum::<f64>()
                .sqrt();
            if !(p.norm() <= 1e-8 * local) {
                return Err(Error::Convergence(format!(
                    "root {} has residual {:.3e} above 1e-8 × local scale {:.3e}",
                    *root * s,
                    p.norm(),
                    local
                )));
            }
        }
        roots.push(*root * s);
    }
    Ok(roots)
}

/// p(w) and p'(w) by Horner's rule.
fn horner(c: &[Complex64], w: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = p;
    for a in c.iter().rev() {
        dp = dp * w + p;
        p = p * w + a;
    }
    (p, dp)
}

/// Newton correction p(w)/p'(w), evaluated through the reversed polynomial
/// when |w| > 1 so that no power of w overflows.
fn newton_ratio(c: &[Complex64], w: Complex64) -> Complex64 {
    if w.norm() <= 1.0 {
        let (p, dp) = horner(c, w);
        if p == Complex64::new(0.0, 0.0) {
            return p;
        }
        return p / dp;
    }
    let m = (c.len() - 1) as f64;
    let u = w.inv();
    let mut q = Complex64::new(0.0, 0.0);
    let mut dq = q;
    for a in c.iter() {
        dq = dq * u + q;
        q = q * u + a;
    }
    // p(w) = w^M q(1/w) ⇒ p'/p = u·(M − u q'(u)/q(u)).
    if q == Complex64::new(0.0, 0.0) {
        return q;
    }
    let inv = u * (m - u * dq / q);
    inv.inv()
}

/// Initial radii from the upper convex hull of (n, ln|c_n|).
fn initial_guesses(c: &[Complex64]) -> Vec<Complex64> {
    let m = c.len() - 1;
    let pts: Vec<(f64, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(n, a)| (n as f64, a.norm().ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut guesses = Vec::with_capacity(m);
    for seg in hull.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let k = (b.0 - a.0) as usize;
        let radius = ((a.1 - b.1) / (b.0 - a.0)).exp();
        let offset = 2.0 * PI * guesses.len() as f64 / m as f64 + 0.4;
        for i in 0..k {
            let t = 2.0 * PI * i as f64 / k as f64 + offset;
            guesses.push(Complex64::from_polar(radius, t));
        }
    }
    guesses
}

fn aberth(c: &[Complex64]) -> Result<Vec<Complex64>> {
    // Vanishing low-order coefficients are roots at the origin.
    let zeros = c.iter().take_while(|a| a.norm() == 0.0).count();
    if zeros > 0 {
        let mut rest = aberth(&c[zeros..])?;
        rest.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), zeros));
        return Ok(rest);
    }
    let m = c.len() - 1;
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut z = initial_guesses(c);
    let mut done = vec![false; m];
    for _ in 0..1000 {
        let mut all = true;
        for k in 0..m {
            if done[k] {
                continue;
            }
            let ratio = newton_ratio(c, z[k]);
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..m {
                if j != k {
                    sum += (z[k] - z[j]).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !step.is_finite() {
                // Coincident estimates: nudge and retry.
                z[k] *= Complex64::from_polar(1.0 + 1e-6, 1e-3);
                all = false;
                continue;
            }
            z[k] -= step;
            if step.norm() <= 1e-12 * z[k].norm().max(1e-300) {
                done[k] = true;
            } else {
                all = false;
            }
        }
        if all {
            return Ok(z);
        }
    }
    Err(Error::Convergence(format!("Aberth iteration on degree {m} did not converge")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn quadratic_roots() {
        // f(z) = z² − ¼ with L = 2: a_0 = −¼, a_2·√(L²/2) = 1.
        let l = 2.0;
        let coeffs = vec![
            Complex64::new(-0.25, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0 / (l * l / 2.0f64).sqrt(), 0.0),
        ];
        let mut r = gaf_roots_from_coefficients(l, &coeffs).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((r[0] + 0.5).norm() < 1e-10 && (r[1] - 0.5).norm() < 1e-10, "{r:?}");
    }

    #[test]
    fn roots_of_random_polynomial_vanish() {
        let mut rng = RngStream::new(1, 0).rng();
        let spec = GafSpec::new(60.0, Domain::unit_square()).unwrap();
        let coeffs: Vec<Complex64> = (0..=spec.degree).map(|_| standard_complex(&mut rng)).collect();
        let roots = gaf_roots_from_coefficients(spec.l, &coeffs).unwrap();
        assert_eq!(roots.len(), spec.degree);
    }

    #[test]
    fn truncation_criterion() {
        let spec = GafSpec::new(150.0, Domain::unit_square()).unwrap();
        let x: f64 = 150.0 * 0.5;
        let m = spec.degree;
        // Direct Poisson(x) sums in log space.
        let ln_t = |n: usize| n as f64 * x.ln() - ln_factorial(n);
        let head: f64 = (0..=m).map(|n| (ln_t(n) - x).exp()).sum();
        let tail: f64 = (m + 1..m + 400).map(|n| (ln_t(n) - x).exp()).sum();
        assert!(tail <= 1e-12 * head);
        let tail_prev: f64 = (m..m + 400).map(|n| (ln_t(n) - x).exp()).sum();
        assert!(tail_prev > 1e-12 * (head - (ln_t(m) - x).exp()));
    }

    #[test]
    fn doubling_degree_keeps_roots() {
        let spec = GafSpec::new(40.0, Domain::unit_square()).unwrap();
        let mut rng = RngStream::new(2, 0).rng();
        let coeffs: Vec<Complex64> = (0..=2 * spec.degree).map(|_| standard_complex(&mut rng)).collect();
        let a = sample_gaf_zeros_with_coefficients(&spec, &coeffs[..=spec.degree]).unwrap();
        let spec2 = GafSpec::with_degree(40.0, 2 * spec.degree, Domain::unit_square()).unwrap();
        let b = sample_gaf_zeros_with_coefficients(&spec2, &coeffs).unwrap();
        assert_eq!(a.len(), b.len());
        for p in a.iter() {
            let best = b
                .iter()
                .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "{best}");
        }
    }

    #[test]
    fn mean_count_matches_intensity() {
        let spec = GafSpec::new(50.0, Domain::unit_square()).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        let trials = 300;
        let counts: Vec<f64> = (0..trials)
            .map(|_| sample_gaf_zeros(&spec, &mut rng).unwrap().len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!((mean - 50.0 / PI).abs() < 3.0 * (var / trials as f64).sqrt(), "{mean}");
        assert!(var < mean);
    }
}
