//! Heat-smoothing upper bound on W2 between two measures on a box, the
//! choice of smoothing time, and the convergence-rate predictor.

use crate::error::{Error, Result};
use crate::measure::{PointConfiguration, ReferenceMeasure};
use crate::numerics::pairwise_sum;
use crate::spectral::{coefficient_difference_bound, tail_certificate, NeumannBasis, SpectralCoefficients, Truncation};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const MASS_TOL: f64 = 1e-9;
const GRID_POINTS: usize = 64;
const GOLDEN_WIDTH: f64 = 1e-3;
/// Auto truncation stops once the tail term is this small relative to S.
const TAIL_RATIO: f64 = 1e-3;
const MAX_MODES: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingBoundReport {
    pub t: f64,
    /// S(t) = Σ_{k≥1} e^{−λ_k t}|μ̂(k) − ν̂(k)|²/λ_k over the truncated basis.
    pub series: f64,
    /// Certified bound on the part of S(t) beyond the truncation.
    pub tail: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub c: f64,
    pub bound: f64,
    pub lambda_max: f64,
}

impl SmoothingBoundReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn check_pair(mu: &SpectralCoefficients, nu: &SpectralCoefficients) -> Result<()> {
    if !Arc::ptr_eq(mu.basis(), nu.basis()) && mu.basis().eigenvalues() != nu.basis().eigenvalues() {
        return Err(Error::InvalidParameter("coefficients use different bases".into()));
    }
    if (mu.mass() - nu.mass()).abs() > MASS_TOL {
        return Err(Error::MassMismatch {
            left: mu.mass(),
            right: nu.mass(),
        });
    }
    Ok(())
}

/// S(t), summed pairwise in basis order.
pub fn series_value(mu: &SpectralCoefficients, nu: &SpectralCoefficients, t: f64) -> f64 {
    let lams = mu.basis().eigenvalues();
    let terms: Vec<f64> = mu
        .values()
        .iter()
        .zip(nu.values())
        .zip(lams)
        .filter(|(_, &l)| l > 0.0)
        .map(|((a, b), &l)| (-l * t).exp() * (a - b) * (a - b) / l)
        .collect();
    pairwise_sum(&terms)
}

/// W2(μ, ν) ≤ C1(dt)^½ + (2/√c)(S(t) + tail)^½ with C1 = μ(Ω)^½ + (ν(Ω) − c·Vol)^½,
/// valid when ν ≥ c·Vol on the box and the masses agree.
pub fn smoothing_bound(mu: &SpectralCoefficients, nu: &SpectralCoefficients, t: f64, c: f64) -> Result<SmoothingBoundReport> {
    check_pair(mu, nu)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
    }
    let basis = mu.basis();
    let excess = nu.mass() - c * basis.volume();
    if excess < -MASS_TOL * nu.mass().max(1.0) {
        return Err(Error::Hypothesis(format!(
            "ν(Ω) = {} is below c·Vol(Ω) = {}",
            nu.mass(),
            c * basis.volume()
        )));
    }
    let c1 = mu.mass().sqrt() + excess.max(0.0).sqrt();
    let series = series_value(mu, nu, t);
    let sup = coefficient_difference_bound(basis, mu.mass(), nu.mass());
    let tail = sup * sup * tail_certificate(basis, t)?;
    let d = basis.dim() as f64;
    let bound = c1 * (d * t).sqrt() + 2.0 / c.sqrt() * (series + tail).sqrt();
    Ok(SmoothingBoundReport {
        t,
        series,
        tail,
        c1,
        c,
        bound,
        lambda_max: basis.lambda_max(),
    })
}

/// Minimizes the bound over [t_lo, t_hi]: global minimum on a 64-point log
/// grid, then golden section in log t on the neighbouring bracket.
pub fn optimize_t(
    mu: &SpectralCoefficients,
    nu: &SpectralCoefficients,
    c: f64,
    t_range: (f64, f64),
) -> Result<(f64, SmoothingBoundReport)> {
    let (t_lo, t_hi) = t_range;
    if !(t_lo > 0.0 && t_lo < t_hi && t_hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("t range [{t_lo}, {t_hi}]")));
    }
    check_pair(mu, nu)?;
    let (a, b) = (t_lo.ln(), t_hi.ln());
    let at = |s: f64| -> Result<SmoothingBoundReport> {
        let r = smoothing_bound(mu, nu, s.exp().clamp(t_lo, t_hi), c)?;
        Ok(r)
    };
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| a + (b - a) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let mut best: Option<(usize, SmoothingBoundReport)> = None;
    for (i, &s) in grid.iter().enumerate() {
        match at(s) {
            Ok(r) if r.bound.is_finite() => {
                if best.as_ref().is_none_or(|(_, b)| r.bound < b.bound) {
                    best = Some((i, r));
                }
            }
            Ok(_) | Err(Error::TruncationInsufficient { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let (i, mut report) = best.ok_or_else(|| Error::Convergence("bound is not finite anywhere on the t range".into()))?;
    let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(GRID_POINTS - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |s: f64| at(s).map(|r| if r.bound.is_finite() { r.bound } else { f64::INFINITY }).unwrap_or(f64::INFINITY);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    // Relative width in t is e^{hi−lo} − 1 ≈ hi − lo.
    while hi - lo > GOLDEN_WIDTH {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    for s in [x1, x2] {
        if let Ok(r) = at(s) {
            if r.bound < report.bound {
                report = r;
            }
        }
    }
    Ok((report.t, report))
}

/// Rate exponent γ = a/(2b+d) for E W2 ≲ L^{−γ}, with a √log L factor when
/// b + d/2 = 1. Requires b + d/2 ≥ 1.
pub fn rate_prediction(a: f64, b: f64, d: usize) -> Result<(f64, bool)> {
    if d == 0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("a = {a}, b = {b}, d = {d}")));
    }
    let s = b + 0.5 * d as f64;
    if s < 1.0 - 1e-12 {
        return Err(Error::Hypothesis(format!("b + d/2 = {s} < 1")));
    }
    Ok((a / (2.0 * b + d as f64), (s - 1.0).abs() <= 1e-12))
}

/// Bound settings for an empirical measure against a reference on a box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSettings {
    /// Basis truncation; chosen automatically when absent.
    pub lambda_max: Option<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Lower density bound of the reference; its own bound when absent.
    pub c: Option<f64>,
}

impl Default for SmoothingSettings {
    fn default() -> Self {
        Self {
            lambda_max: None,
            t_lo: 1e-4,
            t_hi: 1.0,
            c: None,
        }
    }
}

/// Optimized smoothing bound between (1/N)Σδ and a reference measure whose
/// domain is a box. With no explicit Λ, Λ starts at 16/t_lo and grows by
/// 1.5 until the tail term at t_lo is at most 1e−3 of S(t_lo).
pub fn bound_empirical(
    points: &PointConfiguration,
    reference: &ReferenceMeasure,
    settings: &SmoothingSettings,
) -> Result<(f64, SmoothingBoundReport)> {
    if !reference.domain().is_box() {
        return Err(Error::InvalidParameter("smoothing bound needs a box domain".into()));
    }
    let c = settings.c.unwrap_or_else(|| reference.lower_bound());
    let build = |lam: f64| -> Result<(SpectralCoefficients, SpectralCoefficients)> {
        let basis = Arc::new(NeumannBasis::new(reference.domain(), Truncation::MaxEigenvalue(lam))?);
        if basis.len() > MAX_MODES {
            return Err(Error::TooLarge(format!("{} basis functions", basis.len())));
        }
        let mu = SpectralCoefficients::from_points(points, basis.clone())?;
        let nu = SpectralCoefficients::from_measure(reference, basis)?;
        Ok((mu, nu))
    };
    let (mu, nu) = match settings.lambda_max {
        Some(lam) => build(lam)?,
        None => {
            let mut lam = 16.0 / settings.t_lo;
            loop {
                let (mu, nu) = build(lam)?;
                let s = series_value(&mu, &nu, settings.t_lo);
                let sup = coefficient_difference_bound(mu.basis(), mu.mass(), nu.mass());
                let ok = match tail_certificate(mu.basis(), settings.t_lo) {
                    Ok(cert) => sup * sup * cert <= TAIL_RATIO * s,
                    Err(Error::TruncationInsufficient { .. }) => false,
                    Err(e) => return Err(e),
                };
                if ok {
                    break (mu, nu);
                }
                lam *= 1.5;
            }
        }
    };
    optimize_t(&mu, &nu, c, (settings.t_lo, settings.t_hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use std::f64::consts::PI;

    fn square_basis(lam: f64) -> Arc<NeumannBasis> {
        Arc::new(NeumannBasis::new(&Domain::unit_square(), Truncation::MaxEigenvalue(lam)).unwrap())
    }

    fn uniform(basis: &Arc<NeumannBasis>) -> SpectralCoefficients {
        SpectralCoefficients::from_measure(&ReferenceMeasure::uniform(Domain::unit_square()), basis.clone()).unwrap()
    }

    #[test]
    fn equal_measures_give_heat_term_only() {
        let b = square_basis(400.0 * PI * PI);
        let nu = uniform(&b);
        for t in [1e-3, 0.05, 0.7] {
            let r = smoothing_bound(&nu, &nu, t, 1.0).unwrap();
            assert_eq!(r.series, 0.0);
            assert_eq!(r.c1, 1.0);
            let heat = (2.0 * t).sqrt();
            assert!((r.bound - heat - 2.0 * r.tail.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn single_atom_matches_direct_summation() {
        let lam = 400.0 * PI * PI;
        let b = square_basis(lam);
        let atom = PointConfiguration::new(2, vec![0.3, 0.7]).unwrap();
        let mu = SpectralCoefficients::from_points(&atom, b.clone()).unwrap();
        let nu = uniform(&b);
        let t = 0.05;
        let r = smoothing_bound(&mu, &nu, t, 1.0).unwrap();
        let mut direct = 0.0;
        for k1 in 0..=20usize {
            for k2 in 0..=20usize {
                let l = PI * PI * (k1 * k1 + k2 * k2) as f64;
                if l == 0.0 || l > lam * (1.0 + 1e-14) {
                    continue;
                }
                let f = |k: usize, x: f64| if k == 0 { 1.0 } else { 2f64.sqrt() * (PI * k as f64 * x).cos() };
                let phi = f(k1, 0.3) * f(k2, 0.7);
                direct += (-l * t).exp() * phi * phi / l;
            }
        }
        assert!((r.series - direct).abs() < 1e-12, "{} vs {direct}", r.series);
    }

    #[test]
    fn rejects_bad_hypotheses() {
        let b = square_basis(100.0);
        let nu = uniform(&b);
        let half = SpectralCoefficients::from_values(b.clone(), nu.values().iter().map(|v| 0.5 * v).collect(), 0.5).unwrap();
        assert!(matches!(smoothing_bound(&half, &nu, 0.1, 1.0), Err(Error::MassMismatch { .. })));
        assert!(smoothing_bound(&nu, &nu, 0.1, 0.0).is_err());
        assert!(smoothing_bound(&nu, &nu, 0.0, 1.0).is_err());
        assert!(matches!(smoothing_bound(&nu, &nu, 0.1, 2.0), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn optimizer_picks_t_lo_for_equal_measures() {
        let b = square_basis(4e4);
        let nu = uniform(&b);
        let (t, _) = optimize_t(&nu, &nu, 1.0, (1e-3, 1.0)).unwrap();
        assert!((t - 1e-3).abs() < 1e-3 * 1e-3 * 2.0, "{t}");
    }

    #[test]
    fn optimizer_beats_endpoints() {
        let b = square_basis(4e4);
        let atom = PointConfiguration::new(2, vec![0.3, 0.7]).unwrap();
        let mu = SpectralCoefficients::from_points(&atom, b.clone()).unwrap();
        let nu = uniform(&b);
        let (_, r) = optimize_t(&mu, &nu, 1.0, (1e-3, 1.0)).unwrap();
        for t in [1e-3, 1.0] {
            assert!(r.bound <= smoothing_bound(&mu, &nu, t, 1.0).unwrap().bound);
        }
    }

    #[test]
    fn rate_exponents() {
        assert_eq!(rate_prediction(1.0, 0.0, 2).unwrap(), (0.5, true));
        let (g, log) = rate_prediction(1.0, 0.0, 3).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-15 && !log);
        assert_eq!(rate_prediction(1.0, 1.0, 2).unwrap(), (0.25, false));
        assert!(rate_prediction(1.0, 0.0, 1).is_err());
    }

    #[test]
    fn report_json_keys() {
        let b = square_basis(100.0);
        let nu = uniform(&b);
        let json = smoothing_bound(&nu, &nu, 0.1, 1.0).unwrap().to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["C1", "bound", "c", "lambda_max", "series", "t", "tail"]);
    }

    #[test]
    fn auto_truncation_controls_tail() {
        let mut rng = crate::rng::RngStream::new(5, 0).rng();
        let pts = crate::processes::sample_poisson(64.0, &Domain::unit_square(), &mut rng).unwrap();
        let reference = ReferenceMeasure::uniform(Domain::unit_square());
        let settings = SmoothingSettings {
            t_lo: 1e-3,
            ..Default::default()
        };
        let (t, r) = bound_empirical(&pts, &reference, &settings).unwrap();
        assert!((1e-3..=1.0).contains(&t));
        assert!(r.tail <= 1e-3 * r.series * 1.0001 || r.t > 1e-3);
        assert!(r.bound > 0.0);
    }
}
