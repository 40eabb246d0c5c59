use super::kernel::{KernelEvaluator, RadialRnmKernel};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::measure::ReferenceMeasure;
use crate::numerics::special::ln_gamma_p;
use std::f64::consts::PI;
use std::sync::Arc;

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PlanarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> [f64; 2] + Send + Sync>;

/// External potential Q of a random normal matrix ensemble.
#[derive(Clone)]
pub enum PotentialSpec {
    /// Q(z) = |z|².
    Ginibre,
    /// Q(z) = (|z|² − τ Re z²)/(1 − τ²).
    Elliptic { tau: f64 },
    /// Q(z) = q(|z|), with derivative and Laplacian profiles.
    Radial {
        q: RadialFn,
        dq: RadialFn,
        laplacian: RadialFn,
        droplet: Option<Domain>,
    },
    Custom {
        q: PlanarFn,
        gradient: Option<GradientFn>,
        laplacian: Option<PlanarFn>,
        droplet: Option<Domain>,
    },
}

impl std::fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PotentialSpec::{}", self.name())
    }
}

impl PotentialSpec {
    pub fn elliptic(tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!("elliptic τ = {tau} outside [0, 1)")));
        }
        Ok(PotentialSpec::Elliptic { tau })
    }

    pub fn name(&self) -> String {
        match self {
            PotentialSpec::Ginibre => "ginibre".into(),
            PotentialSpec::Elliptic { tau } => format!("elliptic({tau})"),
            PotentialSpec::Radial { .. } => "radial".into(),
            PotentialSpec::Custom { .. } => "custom".into(),
        }
    }

    pub fn q(&self, x: &[f64]) -> f64 {
        match self {
            PotentialSpec::Ginibre => x[0] * x[0] + x[1] * x[1],
            PotentialSpec::Elliptic { tau } => x[0] * x[0] / (1.0 + tau) + x[1] * x[1] / (1.0 - tau),
            PotentialSpec::Radial { q, .. } => q(x[0].hypot(x[1])),
            PotentialSpec::Custom { q, .. } => q(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Option<[f64; 2]> {
        match self {
            PotentialSpec::Ginibre => Some([2.0 * x[0], 2.0 * x[1]]),
            PotentialSpec::Elliptic { tau } => Some([2.0 * x[0] / (1.0 + tau), 2.0 * x[1] / (1.0 - tau)]),
            PotentialSpec::Radial { dq, .. } => {
                let r = x[0].hypot(x[1]);
                if r == 0.0 {
                    Some([0.0, 0.0])
                } else {
                    let s = dq(r) / r;
                    Some([s * x[0], s * x[1]])
                }
            }
            PotentialSpec::Custom { gradient, .. } => gradient.as_ref().map(|g| g(x)),
        }
    }

    /// ΔQ = ∂²Q/∂x² + ∂²Q/∂y².
    pub fn laplacian(&self, x: &[f64]) -> Option<f64> {
        match self {
            PotentialSpec::Ginibre => Some(4.0),
            PotentialSpec::Elliptic { tau } => Some(4.0 / (1.0 - tau * tau)),
            PotentialSpec::Radial { laplacian, .. } => Some(laplacian(x[0].hypot(x[1]))),
            PotentialSpec::Custom { laplacian, .. } => laplacian.as_ref().map(|l| l(x)),
        }
    }

    pub fn radial_profile(&self) -> Option<RadialFn> {
        match self {
            PotentialSpec::Ginibre => Some(Arc::new(|r: f64| r * r)),
            PotentialSpec::Elliptic { tau } if *tau == 0.0 => Some(Arc::new(|r: f64| r * r)),
            PotentialSpec::Radial { q, .. } => Some(q.clone()),
            _ => None,
        }
    }

    pub fn droplet(&self) -> Option<Domain> {
        match self {
            PotentialSpec::Ginibre => Some(Domain::unit_disk()),
            PotentialSpec::Elliptic { tau } if *tau == 0.0 => Some(Domain::unit_disk()),
            PotentialSpec::Elliptic { tau } => Domain::ellipse([0.0, 0.0], [1.0 + tau, 1.0 - tau]).ok(),
            PotentialSpec::Radial { droplet, .. } | PotentialSpec::Custom { droplet, .. } => droplet.clone(),
        }
    }

    /// Checks Q(z)/log|z|² > 1 at |z| ∈ {10², 10³, 10⁴} along eight rays.
    pub fn growth_check(&self) -> Result<()> {
        if let PotentialSpec::Elliptic { tau } = self {
            if !(0.0..1.0).contains(tau) {
                return Err(Error::InvalidParameter(format!("elliptic τ = {tau} outside [0, 1)")));
            }
        }
        for r in [1e2, 1e3, 1e4] {
            for k in 0..8 {
                let t = PI * k as f64 / 4.0;
                let x = [r * t.cos(), r * t.sin()];
                let ratio = self.q(&x) / (2.0 * f64::ln(r));
                if !(ratio > 1.0) {
                    return Err(Error::Hypothesis(format!(
                        "potential growth Q/log|z|² = {ratio} at |z| = {r}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Equilibrium measure ¼ΔQ·χ_S dA, returned as a Lebesgue density ΔQ/(4π) on S.
pub fn equilibrium_measure(potential: &PotentialSpec) -> Result<ReferenceMeasure> {
    potential.growth_check()?;
    let droplet = potential
        .droplet()
        .ok_or_else(|| Error::InvalidParameter(format!("no droplet known for {}", potential.name())))?;
    match potential {
        PotentialSpec::Ginibre | PotentialSpec::Elliptic { .. } => {
            Ok(ReferenceMeasure::uniform(droplet).with_label(format!("equilibrium({})", potential.name())))
        }
        _ => {
            let pot = potential.clone();
            if pot.laplacian(&droplet.center()).is_none() {
                return Err(Error::InvalidParameter("equilibrium measure needs ΔQ".into()));
            }
            let rho = move |x: &[f64]| pot.laplacian(x).unwrap_or(f64::NAN) / (4.0 * PI);
            let (pts, wts) = droplet.quadrature(96);
            let mut mass = 0.0;
            let mut low = f64::INFINITY;
            for (p, w) in pts.chunks_exact(2).zip(&wts) {
                let v = rho(p);
                mass += w * v;
                low = low.min(v);
            }
            if (mass - 1.0).abs() > 1e-6 {
                return Err(Error::MassMismatch { left: mass, right: 1.0 });
            }
            let density = Arc::new(move |x: &[f64]| rho(x) / mass);
            ReferenceMeasure::with_density(droplet, density, (low / mass).max(0.0), format!("equilibrium({})", potential.name()))
        }
    }
}

/// Profile of |K_N(z,z) − (N/4)ΔQ(z)| along the positive real axis, with K
/// taken with respect to dA.
pub fn bulk_edge_deviation(potential: &PotentialSpec, n: usize, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidParameter("radii must be non-negative".into()));
    }
    let nf = n as f64;
    if matches!(potential, PotentialSpec::Ginibre) {
        // K(z,z) = N·Q(N, N r²), so K − N = −N·P(N, N r²).
        return Ok(radii.iter().map(|&r| (r, (nf.ln() + ln_gamma_p(nf, nf * r * r)).exp())).collect());
    }
    let kernel = RadialRnmKernel::new(potential, n)?;
    radii
        .iter()
        .map(|&r| {
            let x = [r, 0.0];
            let lap = potential
                .laplacian(&x)
                .ok_or_else(|| Error::InvalidParameter("bulk deviation needs ΔQ".into()))?;
            Ok((r, (kernel.intensity(&x) - 0.25 * nf * lap).abs()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_radial(droplet: Option<Domain>) -> PotentialSpec {
        PotentialSpec::Radial {
            q: Arc::new(|r| r * r),
            dq: Arc::new(|r| 2.0 * r),
            laplacian: Arc::new(|_| 4.0),
            droplet,
        }
    }

    #[test]
    fn ginibre_equilibrium_is_uniform_disk() {
        let m = equilibrium_measure(&PotentialSpec::Ginibre).unwrap();
        assert_eq!(m.domain(), &Domain::unit_disk());
        assert!(m.is_uniform());
        assert!((m.density(&[0.1, 0.2]) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn elliptic_equilibrium() {
        let tau = 0.5;
        let m = equilibrium_measure(&PotentialSpec::elliptic(tau).unwrap()).unwrap();
        assert_eq!(m.domain(), &Domain::ellipse([0.0, 0.0], [1.5, 0.5]).unwrap());
        // Density 1/(1−τ²) w.r.t. dA.
        assert!((m.density(&[0.0, 0.0]) * PI - 1.0 / (1.0 - tau * tau)).abs() < 1e-12);
        let (p, w) = m.domain().quadrature(64);
        let mass: f64 = p.chunks_exact(2).zip(&w).map(|(x, w)| w * m.density(x)).sum();
        assert!((mass - 1.0).abs() < 1e-10);
        // ΔQ/(4π) matches the uniform density.
        let lap = PotentialSpec::Elliptic { tau }.laplacian(&[0.3, 0.1]).unwrap();
        assert!((lap / (4.0 * PI) - m.density(&[0.3, 0.1])).abs() < 1e-12);
    }

    #[test]
    fn elliptic_zero_is_ginibre() {
        let a = equilibrium_measure(&PotentialSpec::elliptic(0.0).unwrap()).unwrap();
        let b = equilibrium_measure(&PotentialSpec::Ginibre).unwrap();
        assert_eq!(a.domain(), b.domain());
        let x = [0.37, -0.61];
        assert_eq!(PotentialSpec::Elliptic { tau: 0.0 }.q(&x), PotentialSpec::Ginibre.q(&x));
        assert!(PotentialSpec::elliptic(1.0).is_err());
    }

    #[test]
    fn user_droplet_mass_checked() {
        let ok = equilibrium_measure(&quadratic_radial(Some(Domain::unit_disk()))).unwrap();
        assert!((ok.density(&[0.2, 0.2]) - 1.0 / PI).abs() < 1e-9);
        let bad = quadratic_radial(Some(Domain::disk([0.0, 0.0], 1.1).unwrap()));
        assert!(matches!(equilibrium_measure(&bad), Err(Error::MassMismatch { .. })));
        assert!(equilibrium_measure(&quadratic_radial(None)).is_err());
    }

    #[test]
    fn growth_condition() {
        assert!(PotentialSpec::Ginibre.growth_check().is_ok());
        let weak = PotentialSpec::Radial {
            q: Arc::new(|r: f64| 0.5 * (1.0 + r * r).ln()),
            dq: Arc::new(|r| r / (1.0 + r * r)),
            laplacian: Arc::new(|r| 2.0 / (1.0 + r * r).powi(2)),
            droplet: None,
        };
        assert!(matches!(weak.growth_check(), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let x = [0.3, -0.4];
        for p in [PotentialSpec::Ginibre, PotentialSpec::Elliptic { tau: 0.3 }, quadratic_radial(None)] {
            let g = p.gradient(&x).unwrap();
            let h = 1e-6;
            let gx = (p.q(&[x[0] + h, x[1]]) - p.q(&[x[0] - h, x[1]])) / (2.0 * h);
            let gy = (p.q(&[x[0], x[1] + h]) - p.q(&[x[0], x[1] - h])) / (2.0 * h);
            assert!((g[0] - gx).abs() < 1e-8 && (g[1] - gy).abs() < 1e-8);
        }
    }

    #[test]
    fn ginibre_bulk_edge() {
        let dev = bulk_edge_deviation(&PotentialSpec::Ginibre, 8, &[0.0, 0.5]).unwrap();
        assert_eq!(dev[0].1, 0.0);
        // Direct evaluation of N − K(z,z) at r = 0.5.
        let k = RadialRnmKernel::new(&PotentialSpec::Ginibre, 8).unwrap();
        let direct = 8.0 - k.intensity(&[0.5, 0.0]);
        assert!((dev[1].1 - direct).abs() < 1e-12);
        let k256 = RadialRnmKernel::new(&PotentialSpec::Ginibre, 256).unwrap();
        assert!(k256.intensity(&[2.0, 0.0]) < 1e-6);
    }

    #[test]
    fn radial_bulk_edge_agrees_with_closed_form() {
        let a = bulk_edge_deviation(&quadratic_radial(None), 16, &[0.9, 1.1, 1.5]).unwrap();
        let k = RadialRnmKernel::new(&PotentialSpec::Ginibre, 16).unwrap();
        for (r, d) in a {
            assert!((d - (k.intensity(&[r, 0.0]) - 16.0).abs()).abs() < 1e-9);
        }
    }
}
