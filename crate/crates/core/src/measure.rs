//! Empirical point configurations and absolutely continuous reference measures.

use crate::domain::Domain;
use crate::error::{Error, Result};
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

/// Finite list of points in R^d, stored row-major. The induced empirical
/// probability measure puts mass 1/N on each point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    dim: usize,
    coords: Vec<f64>,
}

impl PointConfiguration {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        Ok(Self { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_points<const D: usize>(points: &[[f64; D]]) -> Result<Self> {
        Self::new(D, points.iter().flatten().copied().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.coords.extend_from_slice(x);
    }

    /// Points inside the closed domain, order preserved.
    pub fn restrict(&self, domain: &Domain) -> Result<Self> {
        if domain.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: self.dim,
            });
        }
        let coords = self
            .iter()
            .filter(|p| domain.contains_unchecked(p))
            .flatten()
            .copied()
            .collect();
        Ok(Self {
            dim: self.dim,
            coords,
        })
    }

    /// Affine image x ↦ scale·x + shift.
    pub fn map_affine(&self, scale: f64, shift: &[f64]) -> Self {
        let coords = self
            .iter()
            .flat_map(|p| p.iter().zip(shift).map(move |(x, s)| scale * x + s))
            .collect();
        Self {
            dim: self.dim,
            coords,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        w.write_record(&header)?;
        for p in self.iter() {
            w.write_record(p.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV with header `x1,…,xd`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let dim = r.headers()?.len();
        let mut coords = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != dim {
                return Err(Error::Parse("ragged point CSV".into()));
            }
            for field in record.iter() {
                coords.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad coordinate '{field}'")))?,
                );
            }
        }
        Self::new(dim.max(1), coords)
    }
}

pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DensityKind {
    Uniform,
    Density(DensityFn),
}

/// Probability measure on a domain with a Lebesgue density ρ and a certified
/// lower bound c ≤ ρ on the domain.
#[derive(Clone)]
pub struct ReferenceMeasure {
    domain: Domain,
    kind: DensityKind,
    lower_bound: f64,
    label: String,
}

/// Quadrature order used to certify density measures.
const CERTIFY_ORDER: usize = 96;
const MASS_TOLERANCE: f64 = 1e-8;

impl ReferenceMeasure {
    /// Normalized volume (1/|Ω|) dx on Ω.
    pub fn uniform(domain: Domain) -> Self {
        let lower_bound = 1.0 / domain.area();
        let label = format!("uniform({domain})");
        Self {
            domain,
            kind: DensityKind::Uniform,
            lower_bound,
            label,
        }
    }

    /// Uniform measure with a user-declared lower bound, which must not
    /// exceed the actual density 1/|Ω|.
    pub fn uniform_with_lower_bound(domain: Domain, lower_bound: f64) -> Result<Self> {
        let mut m = Self::uniform(domain);
        if lower_bound > m.lower_bound * (1.0 + 1e-12) || lower_bound < 0.0 {
            return Err(Error::Hypothesis(format!(
                "declared lower bound {lower_bound} is not below the density {}",
                m.lower_bound
            )));
        }
        m.lower_bound = lower_bound;
        Ok(m)
    }

    /// Density measure; mass and lower bound are verified at quadrature nodes.
    pub fn with_density(
        domain: Domain,
        density: DensityFn,
        lower_bound: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let (points, weights) = domain.quadrature(CERTIFY_ORDER);
        let d = domain.dim();
        let mut mass = 0.0;
        for (p, w) in points.chunks_exact(d).zip(&weights) {
            let rho = density(p);
            if !rho.is_finite() || rho < 0.0 {
                return Err(Error::Hypothesis(format!("density {rho} at {p:?}")));
            }
            if rho < lower_bound {
                return Err(Error::Hypothesis(format!(
                    "declared lower bound {lower_bound} exceeds density {rho} at {p:?}"
                )));
            }
            mass += w * rho;
        }
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::MassMismatch {
                left: mass,
                right: 1.0,
            });
        }
        Ok(Self {
            domain,
            kind: DensityKind::Density(density),
            lower_bound,
            label: label.into(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, DensityKind::Uniform)
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Total mass; 1 by construction.
    pub fn mass(&self) -> f64 {
        1.0
    }

    /// Lebesgue density at x (zero outside the domain).
    pub fn density(&self, x: &[f64]) -> f64 {
        if !self.domain.contains_unchecked(x) {
            return 0.0;
        }
        match &self.kind {
            DensityKind::Uniform => 1.0 / self.domain.area(),
            DensityKind::Density(f) => f(x),
        }
    }
}

impl fmt::Debug for ReferenceMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceMeasure")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("lower_bound", &self.lower_bound)
            .finish()
    }
}
