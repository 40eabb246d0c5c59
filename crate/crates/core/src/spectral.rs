//! Neumann Laplacian eigenbasis on boxes and the Fourier side of measures.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::measure::{DensityKind, PointConfiguration, ReferenceMeasure};
use crate::numerics::special::{exp_integral_e1, upper_gamma};
use crate::numerics::{gauss_legendre, pairwise_sum};
use rayon::prelude::*;
use statrs::function::gamma::gamma;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Keep every index with λ_k ≤ Λ.
    MaxEigenvalue(f64),
    /// Keep every index with k_i ≤ K on each axis.
    MaxIndex(usize),
}

/// Cosine eigenbasis of the Neumann Laplacian on an axis-aligned box,
/// truncated to a finite lattice index set sorted by eigenvalue.
#[derive(Debug, Clone)]
pub struct NeumannBasis {
    lower: Vec<f64>,
    sides: Vec<f64>,
    truncation: Truncation,
    indices: Vec<usize>,
    eigenvalues: Vec<f64>,
    kmax: Vec<usize>,
    lookup: HashMap<Vec<usize>, usize>,
}

fn lambda_of(sides: &[f64], k: &[usize]) -> f64 {
    PI * PI
        * k.iter()
            .zip(sides)
            .map(|(&ki, l)| (ki as f64 / l).powi(2))
            .sum::<f64>()
}

/// Visits every k ∈ Z_{≥0}^d with π²Σ(k_i/ℓ_i)² ≤ x.
fn enumerate_ball(sides: &[f64], x: f64, mut visit: impl FnMut(&[usize], f64)) {
    fn rec(
        sides: &[f64],
        axis: usize,
        budget: f64,
        acc: f64,
        k: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize], f64),
    ) {
        if axis == sides.len() {
            visit(k, acc);
            return;
        }
        let step = (PI / sides[axis]).powi(2);
        let mut ki = 0usize;
        loop {
            let used = step * (ki * ki) as f64;
            if used > budget {
                break;
            }
            k.push(ki);
            rec(sides, axis + 1, budget - used, acc + used, k, visit);
            k.pop();
            ki += 1;
        }
    }
    if x < 0.0 {
        return;
    }
    let mut k = Vec::with_capacity(sides.len());
    // Small relative slack so eigenvalues equal to x are not lost to rounding.
    rec(sides, 0, x * (1.0 + 1e-14), 0.0, &mut k, &mut visit);
}

impl NeumannBasis {
    pub fn new(domain: &Domain, truncation: Truncation) -> Result<Self> {
        let (lower, sides) = match domain {
            Domain::Box { lower, upper } => (
                lower.clone(),
                lower.iter().zip(upper).map(|(a, b)| b - a).collect::<Vec<_>>(),
            ),
            _ => {
                return Err(Error::InvalidParameter(
                    "the Neumann eigenbasis is only available on boxes".into(),
                ))
            }
        };
        let d = sides.len();
        let mut entries: Vec<(f64, Vec<usize>)> = Vec::new();
        match truncation {
            Truncation::MaxEigenvalue(l) => {
                if !(l.is_finite() && l >= 0.0) {
                    return Err(Error::InvalidParameter(format!("truncation Λ = {l}")));
                }
                enumerate_ball(&sides, l, |k, _| entries.push((lambda_of(&sides, k), k.to_vec())));
                entries.retain(|(lam, _)| *lam <= l * (1.0 + 1e-14));
            }
            Truncation::MaxIndex(kk) => {
                let total = (kk + 1).checked_pow(d as u32).unwrap_or(usize::MAX);
                if total > 50_000_000 {
                    return Err(Error::TooLarge(format!("{total} basis functions")));
                }
                let mut k = vec![0usize; d];
                for _ in 0..total {
                    entries.push((lambda_of(&sides, &k), k.clone()));
                    for slot in k.iter_mut() {
                        *slot += 1;
                        if *slot <= kk {
                            break;
                        }
                        *slot = 0;
                    }
                }
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut kmax = vec![0usize; d];
        let mut indices = Vec::with_capacity(entries.len() * d);
        let mut eigenvalues = Vec::with_capacity(entries.len());
        let mut lookup = HashMap::with_capacity(entries.len());
        for (pos, (lam, k)) in entries.into_iter().enumerate() {
            for (m, &ki) in kmax.iter_mut().zip(&k) {
                *m = (*m).max(ki);
            }
            indices.extend_from_slice(&k);
            eigenvalues.push(lam);
            lookup.insert(k, pos);
        }
        Ok(Self {
            lower,
            sides,
            truncation,
            indices,
            eigenvalues,
            kmax,
            lookup,
        })
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn domain(&self) -> Domain {
        let upper = self.lower.iter().zip(&self.sides).map(|(a, l)| a + l).collect();
        Domain::Box {
            lower: self.lower.clone(),
            upper,
        }
    }

    pub fn multi_index(&self, i: usize) -> &[usize] {
        let d = self.dim();
        &self.indices[i * d..(i + 1) * d]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn max_index(&self) -> &[usize] {
        &self.kmax
    }

    pub fn position(&self, k: &[usize]) -> Option<usize> {
        self.lookup.get(k).copied()
    }

    /// Every index outside the basis has eigenvalue at least this value.
    pub fn lambda_max(&self) -> f64 {
        match self.truncation {
            Truncation::MaxEigenvalue(l) => l,
            Truncation::MaxIndex(kk) => self
                .sides
                .iter()
                .map(|l| (PI * (kk + 1) as f64 / l).powi(2))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// (λ_k, φ_k) for an index inside the truncation.
    pub fn eigenpair(&self, k: &[usize]) -> Result<(f64, Eigenfunction)> {
        if k.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: k.len(),
            });
        }
        let pos = self
            .position(k)
            .ok_or_else(|| Error::IndexOutOfTruncation(k.to_vec()))?;
        Ok((
            self.eigenvalues[pos],
            Eigenfunction {
                k: k.to_vec(),
                lower: self.lower.clone(),
                sides: self.sides.clone(),
            },
        ))
    }

    /// Per-axis tables c_{k}cos(kπ(x−a)/ℓ) for k = 0..=kmax_axis.
    fn axis_tables(&self, x: &[f64], out: &mut Vec<Vec<f64>>) {
        out.resize(self.dim(), Vec::new());
        for (axis, table) in out.iter_mut().enumerate() {
            let l = self.sides[axis];
            let theta = PI * (x[axis] - self.lower[axis]) / l;
            let c0 = l.powf(-0.5);
            let c1 = (2.0 / l).sqrt();
            table.clear();
            table.push(c0);
            for k in 1..=self.kmax[axis] {
                table.push(c1 * (k as f64 * theta).cos());
            }
        }
    }

    fn eval_all_into(&self, tables: &[Vec<f64>], out: &mut [f64]) {
        let d = self.dim();
        for (i, slot) in out.iter_mut().enumerate() {
            let k = &self.indices[i * d..(i + 1) * d];
            let mut v = 1.0;
            for (axis, &ki) in k.iter().enumerate() {
                v *= tables[axis][ki];
            }
            *slot = v;
        }
    }

    /// All basis functions evaluated at x, in basis order.
    pub fn evaluate_all(&self, x: &[f64]) -> Vec<f64> {
        let mut tables = Vec::new();
        self.axis_tables(x, &mut tables);
        let mut out = vec![0.0; self.len()];
        self.eval_all_into(&tables, &mut out);
        out
    }
}

/// A single separable cosine eigenfunction.
#[derive(Debug, Clone)]
pub struct Eigenfunction {
    k: Vec<usize>,
    lower: Vec<f64>,
    sides: Vec<f64>,
}

impl Eigenfunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.k
            .iter()
            .zip(&self.lower)
            .zip(&self.sides)
            .zip(x)
            .map(|(((&k, a), l), xi)| {
                if k == 0 {
                    l.powf(-0.5)
                } else {
                    (2.0 / l).sqrt() * (k as f64 * PI * (xi - a) / l).cos()
                }
            })
            .product()
    }

    /// sup |φ_k| over the box.
    pub fn sup_norm(&self) -> f64 {
        self.k
            .iter()
            .zip(&self.sides)
            .map(|(&k, l)| if k == 0 { l.powf(-0.5) } else { (2.0 / l).sqrt() })
            .product()
    }
}

/// Truncated coefficient vector μ̂(k) = ∫φ_k dμ in basis order.
#[derive(Debug, Clone)]
pub struct SpectralCoefficients {
    basis: Arc<NeumannBasis>,
    values: Vec<f64>,
    mass: f64,
}

/// Block size of the fixed-shape reduction tree over points.
const POINT_BLOCK: usize = 64;

impl SpectralCoefficients {
    pub fn from_values(basis: Arc<NeumannBasis>, values: Vec<f64>, mass: f64) -> Result<Self> {
        if values.len() != basis.len() {
            return Err(Error::SizeMismatch {
                left: values.len(),
                right: basis.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(Self {
            basis,
            values,
            mass,
        })
    }

    pub fn basis(&self) -> &Arc<NeumannBasis> {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn get(&self, k: &[usize]) -> Option<f64> {
        self.basis.position(k).map(|i| self.values[i])
    }

    /// Coefficients of the empirical probability measure (1/N)Σδ_{x_n}.
    pub fn from_points(points: &PointConfiguration, basis: Arc<NeumannBasis>) -> Result<Self> {
        if points.dim() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: points.dim(),
            });
        }
        if points.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        let bx = basis.domain();
        if let Some(p) = points.iter().find(|p| !bx.contains_unchecked(p)) {
            return Err(Error::InvalidParameter(format!(
                "point {p:?} lies outside the basis box; restrict first"
            )));
        }
        let n = points.len();
        let m = basis.len();
        let blocks: Vec<Vec<f64>> = points
            .coords()
            .par_chunks(POINT_BLOCK * basis.dim())
            .map(|chunk| {
                let mut acc = vec![0.0; m];
                let mut row = vec![0.0; m];
                let mut tables = Vec::new();
                for p in chunk.chunks_exact(basis.dim()) {
                    basis.axis_tables(p, &mut tables);
                    basis.eval_all_into(&tables, &mut row);
                    for (a, r) in acc.iter_mut().zip(&row) {
                        *a += r;
                    }
                }
                acc
            })
            .collect();
        let mut sums = tree_reduce(blocks);
        let inv = 1.0 / n as f64;
        for s in sums.iter_mut() {
            *s *= inv;
        }
        Self::from_values(basis, sums, 1.0)
    }

    /// Coefficients of a reference measure whose domain is a box inside the
    /// basis box, by tensor Gauss–Legendre quadrature with 4·K_max + 8 nodes
    /// per axis.
    pub fn from_measure(measure: &ReferenceMeasure, basis: Arc<NeumannBasis>) -> Result<Self> {
        let d = basis.dim();
        if measure.domain().dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: measure.domain().dim(),
            });
        }
        let (mlo, mhi) = match measure.domain() {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            _ => {
                return Err(Error::InvalidParameter(
                    "measure must live on a box inside the basis box".into(),
                ))
            }
        };
        let tol = 1e-12;
        for i in 0..d {
            if mlo[i] < basis.lower[i] - tol || mhi[i] > basis.lower[i] + basis.sides[i] + tol {
                return Err(Error::InvalidParameter(
                    "measure box is not contained in the basis box".into(),
                ));
            }
        }
        let whole = (0..d).all(|i| {
            (mlo[i] - basis.lower[i]).abs() <= tol
                && (mhi[i] - basis.lower[i] - basis.sides[i]).abs() <= tol
        });
        if whole && measure.is_uniform() {
            // Exact: only the constant mode survives.
            let mut values = vec![0.0; basis.len()];
            values[0] = basis.volume().powf(-0.5);
            return Self::from_values(basis, values, 1.0);
        }

        let kmax = *basis.kmax.iter().max().unwrap_or(&0);
        let nodes = 4 * kmax + 8;
        let rule = gauss_legendre(nodes);
        // Per-axis nodes, weights and cosine matrices C[k][i] = w_i c_k cos(...).
        let mut axis_nodes = Vec::with_capacity(d);
        let mut axis_mats = Vec::with_capacity(d);
        for i in 0..d {
            let (a, b) = (mlo[i], mhi[i]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let xs: Vec<f64> = rule.0.iter().map(|t| mid + half * t).collect();
            let ws: Vec<f64> = rule.1.iter().map(|w| half * w).collect();
            let l = basis.sides[i];
            let mut mat = Vec::with_capacity((basis.kmax[i] + 1) * nodes);
            for k in 0..=basis.kmax[i] {
                let c = if k == 0 { l.powf(-0.5) } else { (2.0 / l).sqrt() };
                for (x, w) in xs.iter().zip(&ws) {
                    mat.push(w * c * (k as f64 * PI * (x - basis.lower[i]) / l).cos());
                }
            }
            axis_nodes.push(xs);
            axis_mats.push(mat);
        }
        // Density on the tensor grid, row-major with axis 0 slowest.
        let total = nodes.checked_pow(d as u32).unwrap_or(usize::MAX);
        if total > 20_000_000 {
            return Err(Error::TooLarge(format!("{total} quadrature nodes")));
        }
        let density = |x: &[f64]| match measure.kind() {
            DensityKind::Uniform => 1.0 / measure.domain().area(),
            DensityKind::Density(f) => f(x),
        };
        let mut tensor: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut x = vec![0.0; d];
                let mut rem = flat;
                for axis in (0..d).rev() {
                    x[axis] = axis_nodes[axis][rem % nodes];
                    rem /= nodes;
                }
                density(&x)
            })
            .collect();
        // Contract one axis at a time: shape[axis] goes from nodes to kmax+1.
        let mut shape = vec![nodes; d];
        for axis in 0..d {
            let kn = basis.kmax[axis] + 1;
            let outer: usize = shape[..axis].iter().product();
            let inner: usize = shape[axis + 1..].iter().product();
            let mut next = vec![0.0; outer * kn * inner];
            let mat = &axis_mats[axis];
            for o in 0..outer {
                for k in 0..kn {
                    let dst = &mut next[(o * kn + k) * inner..(o * kn + k + 1) * inner];
                    for i in 0..nodes {
                        let w = mat[k * nodes + i];
                        let src = &tensor[(o * nodes + i) * inner..(o * nodes + i + 1) * inner];
                        for (dv, sv) in dst.iter_mut().zip(src) {
                            *dv += w * sv;
                        }
                    }
                }
            }
            tensor = next;
            shape[axis] = kn;
        }
        let mut values = Vec::with_capacity(basis.len());
        for pos in 0..basis.len() {
            let k = basis.multi_index(pos);
            let mut flat = 0;
            for axis in 0..d {
                flat = flat * shape[axis] + k[axis];
            }
            values.push(tensor[flat]);
        }
        let mass = values[0] * basis.volume().sqrt();
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::Quadrature(format!(
                "density mass by tensor quadrature is {mass}, expected 1"
            )));
        }
        Self::from_values(basis, values, 1.0)
    }

    /// Coefficientwise multiplication by e^{−λ_k t}.
    pub fn heat_evolve(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative time {t}")));
        }
        let values = self
            .values
            .iter()
            .zip(&self.basis.eigenvalues)
            .map(|(v, lam)| if *lam == 0.0 { *v } else { v * (-lam * t).exp() })
            .collect();
        Ok(Self {
            basis: self.basis.clone(),
            values,
            mass: self.mass,
        })
    }

    /// CSV with columns k_1..k_d, lambda, coeff.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = self.basis.dim();
        let mut header: Vec<String> = (1..=d).map(|i| format!("k_{i}")).collect();
        header.push("lambda".into());
        header.push("coeff".into());
        w.write_record(&header)?;
        for pos in 0..self.basis.len() {
            let mut row: Vec<String> =
                self.basis.multi_index(pos).iter().map(|k| k.to_string()).collect();
            row.push(format!("{:.17e}", self.basis.eigenvalues[pos]));
            row.push(format!("{:.17e}", self.values[pos]));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fixed-shape binary tree reduction of equally sized vectors.
fn tree_reduce(mut level: Vec<Vec<f64>>) -> Vec<f64> {
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        level = next;
    }
    level.pop().unwrap_or_default()
}

/// Neumann heat kernel P(t,x,y) truncated to a basis.
#[derive(Debug, Clone)]
pub struct HeatKernelEvaluator {
    basis: Arc<NeumannBasis>,
    t: f64,
    decay: Vec<f64>,
}

impl HeatKernelEvaluator {
    pub fn new(basis: Arc<NeumannBasis>, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("heat time must be positive, got {t}")));
        }
        let decay = basis.eigenvalues.iter().map(|l| (-l * t).exp()).collect();
        Ok(Self { basis, t, decay })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let fx = self.basis.evaluate_all(x);
        let fy = self.basis.evaluate_all(y);
        let terms: Vec<f64> = fx
            .iter()
            .zip(&fy)
            .zip(&self.decay)
            .map(|((a, b), e)| e * a * b)
            .collect();
        pairwise_sum(&terms)
    }
}

/// Number of nonzero indices k with λ_k ≤ x on the box.
pub fn weyl_count(domain: &Domain, x: f64) -> Result<u64> {
    let sides = domain
        .box_sides()
        .ok_or_else(|| Error::InvalidParameter("eigenvalue counting needs a box".into()))?;
    let mut count = 0u64;
    enumerate_ball(&sides, x, |k, _| {
        if k.iter().any(|&ki| ki > 0) && lambda_of(&sides, k) <= x {
            count += 1;
        }
    });
    Ok(count)
}

/// Rigorous upper bound on Σ_{k ∉ basis} e^{−λ_k t}/λ_k.
///
/// Indices are grouped by the set S of nonzero coordinates. Each lattice
/// point v_k = (πk_i/ℓ_i) owns the cell reaching back towards the origin by
/// one lattice step; e^{−t|v|²}/|v|² is radially decreasing so the term is
/// at most the cell average, and every such cell lies outside the ball of
/// radius √Λ − π|1/ℓ|_S.
pub fn tail_certificate(basis: &NeumannBasis, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let lam = basis.lambda_max();
    let d = basis.dim();
    let sqrt_lam = lam.sqrt();
    let mut total = 0.0;
    for mask in 1u32..(1u32 << d) {
        let axes: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
        let m = axes.len();
        let inv_norm = axes
            .iter()
            .map(|&i| basis.sides[i].powi(-2))
            .sum::<f64>()
            .sqrt();
        let rho0 = sqrt_lam - PI * inv_norm;
        if rho0 <= 0.0 {
            return Err(Error::TruncationInsufficient {
                certificate: f64::INFINITY,
            });
        }
        let cell_volume: f64 = axes.iter().map(|&i| PI / basis.sides[i]).product();
        let x = t * rho0 * rho0;
        let radial = match m {
            1 => (-x).exp() / rho0,
            2 => 0.5 * exp_integral_e1(x),
            _ => {
                let s = (m as f64 - 2.0) / 2.0;
                0.5 * t.powf(-s) * upper_gamma(s, x)
            }
        };
        let sphere = 2.0 * PI.powf(m as f64 / 2.0) / gamma(m as f64 / 2.0);
        let orthant = 0.5f64.powi(m as i32);
        total += orthant * sphere * radial / cell_volume;
    }
    if !total.is_finite() || total > 1.0 {
        return Err(Error::TruncationInsufficient { certificate: total });
    }
    Ok(total)
}

/// Uniform bound on |μ̂(k) − ν̂(k)| for all k, given the two masses.
pub fn coefficient_difference_bound(basis: &NeumannBasis, mass_mu: f64, mass_nu: f64) -> f64 {
    let sup: f64 = basis
        .sides
        .iter()
        .map(|l| (2.0 / l).sqrt().max(l.powf(-0.5)))
        .product();
    (mass_mu + mass_nu) * sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GaussLegendre;

    fn unit_square_basis(lam: f64) -> Arc<NeumannBasis> {
        Arc::new(NeumannBasis::new(&Domain::unit_square(), Truncation::MaxEigenvalue(lam)).unwrap())
    }

    #[test]
    fn constant_and_first_modes() {
        let b = unit_square_basis(20.0);
        let (l0, f0) = b.eigenpair(&[0, 0]).unwrap();
        assert_eq!(l0, 0.0);
        assert!((f0.eval(&[0.3, 0.8]) - 1.0).abs() < 1e-15);
        let (l1, f1) = b.eigenpair(&[1, 0]).unwrap();
        assert!((l1 - PI * PI).abs() < 1e-12);
        let x = [0.2, 0.9];
        assert!((f1.eval(&x) - 2f64.sqrt() * (PI * 0.2).cos()).abs() < 1e-14);
        assert!(matches!(b.eigenpair(&[5, 5]), Err(Error::IndexOutOfTruncation(_))));
    }

    #[test]
    fn rectangular_box_mode_is_normalised() {
        let dom = Domain::new_box(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        let b = NeumannBasis::new(&dom, Truncation::MaxIndex(3)).unwrap();
        let (lam, f) = b.eigenpair(&[1, 0]).unwrap();
        assert!((lam - PI * PI / 4.0).abs() < 1e-12);
        for x in [0.0, 0.37, 1.2, 2.0] {
            assert!((f.eval(&[x, 0.4]) - (PI * x / 2.0).cos()).abs() < 1e-14);
        }
        let (pts, w) = dom.quadrature(24);
        let norm: f64 = pts.chunks_exact(2).zip(&w).map(|(p, w)| w * f.eval(p).powi(2)).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthonormality_by_quadrature() {
        let dom = Domain::new_box(vec![-0.5, 1.0], vec![1.0, 1.7]).unwrap();
        let b = NeumannBasis::new(&dom, Truncation::MaxIndex(6)).unwrap();
        let (pts, w) = dom.quadrature(40);
        let vals: Vec<Vec<f64>> = pts.chunks_exact(2).map(|p| b.evaluate_all(p)).collect();
        for i in 0..b.len() {
            for j in 0..b.len() {
                let ip: f64 = vals.iter().zip(&w).map(|(v, w)| w * v[i] * v[j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10, "{i} {j} {ip}");
            }
        }
    }

    #[test]
    fn eigenvalues_sorted() {
        let b = unit_square_basis(400.0 * PI * PI);
        assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(b.multi_index(0), &[0, 0]);
    }

    #[test]
    fn atom_coefficients() {
        let b = unit_square_basis(30.0);
        let p = PointConfiguration::from_points(&[[0.5, 0.5]]).unwrap();
        let c = SpectralCoefficients::from_points(&p, b.clone()).unwrap();
        assert!(c.get(&[1, 0]).unwrap().abs() < 1e-15);
        let p = PointConfiguration::from_points(&[[0.0, 0.0]]).unwrap();
        let c = SpectralCoefficients::from_points(&p, b).unwrap();
        assert!((c.get(&[1, 1]).unwrap() - 2.0).abs() < 1e-14);
        assert!((c.get(&[0, 0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_configuration_is_an_error() {
        let b = unit_square_basis(30.0);
        let p = PointConfiguration::empty(2);
        assert!(matches!(
            SpectralCoefficients::from_points(&p, b),
            Err(Error::EmptyConfiguration)
        ));
    }

    #[test]
    fn point_coefficients_do_not_depend_on_thread_count() {
        let b = unit_square_basis(200.0);
        let coords: Vec<f64> = (0..2 * 1000).map(|i| ((i as f64) * 0.618_033_988_7).fract()).collect();
        let p = PointConfiguration::new(2, coords).unwrap();
        let a = SpectralCoefficients::from_points(&p, b.clone()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| SpectralCoefficients::from_points(&p, b).unwrap());
        assert_eq!(a.values(), c.values());
    }

    #[test]
    fn uniform_measure_has_only_the_constant_mode() {
        let b = unit_square_basis(100.0);
        let c = SpectralCoefficients::from_measure(&ReferenceMeasure::uniform(Domain::unit_square()), b).unwrap();
        assert_eq!(c.values()[0], 1.0);
        assert!(c.values()[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn density_coefficients_match_closed_form() {
        let dom = Domain::unit_square();
        let eps = 0.1;
        let rho = Arc::new(move |x: &[f64]| 1.0 + eps * 2f64.sqrt() * (PI * x[0]).cos());
        let m = ReferenceMeasure::with_density(dom, rho, 0.8, "cos").unwrap();
        let b = unit_square_basis(50.0);
        let c = SpectralCoefficients::from_measure(&m, b).unwrap();
        assert!((c.get(&[0, 0]).unwrap() - 1.0).abs() < 1e-13);
        assert!((c.get(&[1, 0]).unwrap() - eps).abs() < 1e-13);
        assert!(c.get(&[0, 1]).unwrap().abs() < 1e-13);
        assert!(c.get(&[2, 1]).unwrap().abs() < 1e-13);
    }

    #[test]
    fn sub_box_uniform_coefficients() {
        let sub = Domain::new_box(vec![0.0, 0.0], vec![0.5, 1.0]).unwrap();
        let b = unit_square_basis(50.0);
        let c = SpectralCoefficients::from_measure(&ReferenceMeasure::uniform(sub), b).unwrap();
        // ∫_0^{1/2} 2·√2 cos(πx) dx = 2√2/π
        assert!((c.get(&[1, 0]).unwrap() - 2.0 * 2f64.sqrt() / PI).abs() < 1e-12);
        assert!(c.get(&[2, 0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn heat_evolve_examples() {
        let b = unit_square_basis(30.0);
        let mut v = vec![0.0; b.len()];
        v[0] = 1.0;
        let pos = b.position(&[1, 0]).unwrap();
        v[pos] = 1.0;
        let c = SpectralCoefficients::from_values(b, v, 1.0).unwrap();
        let e = c.heat_evolve(1.0 / (PI * PI)).unwrap();
        assert!((e.values()[pos] - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(e.values()[0], 1.0);
        assert_eq!(c.heat_evolve(0.0).unwrap().values(), c.values());
        assert!(c.heat_evolve(-1.0).is_err());
    }

    #[test]
    fn weyl_count_examples() {
        let sq = Domain::unit_square();
        assert_eq!(weyl_count(&sq, 5.0).unwrap(), 0);
        assert_eq!(weyl_count(&sq, 10.0).unwrap(), 2);
        let n = weyl_count(&sq, 10_000.0).unwrap() as f64;
        let weyl = 10_000.0 / (4.0 * PI);
        assert!(n > 0.9 * weyl && n < 1.1 * weyl, "{n} vs {weyl}");
    }

    fn brute_count(sides: &[f64], x: f64) -> u64 {
        let kx = (x.sqrt() * sides[0] / PI).ceil() as usize + 1;
        let ky = (x.sqrt() * sides[1] / PI).ceil() as usize + 1;
        let mut n = 0;
        for i in 0..=kx {
            for j in 0..=ky {
                if (i, j) != (0, 0) && lambda_of(sides, &[i, j]) <= x {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn weyl_count_matches_brute_force() {
        let dom = Domain::new_box(vec![0.0, 0.0], vec![1.3, 0.7]).unwrap();
        let sides = [1.3, 0.7];
        for x in [0.0, 3.0, 25.0, 100.0, 999.0, 5000.0, 10_000.0] {
            assert_eq!(weyl_count(&dom, x).unwrap(), brute_count(&sides, x));
        }
    }

    fn direct_tail(sides: &[f64], lam: f64, upto: f64, t: f64) -> f64 {
        let mut s = 0.0;
        enumerate_ball(sides, upto, |k, _| {
            let l = lambda_of(sides, k);
            if l > lam && l <= upto {
                s += (-l * t).exp() / l;
            }
        });
        s
    }

    #[test]
    fn tail_certificate_dominates_direct_sum() {
        let lam = 400.0 * PI * PI;
        let b = unit_square_basis(lam);
        for t in [0.1, 0.01, 0.002, 0.0005] {
            let cert = tail_certificate(&b, t).unwrap();
            let direct = direct_tail(&[1.0, 1.0], lam, 4.0 * lam, t);
            assert!(cert >= direct, "t={t}: {cert} < {direct}");
        }
    }

    #[test]
    fn tail_certificate_dominates_in_three_dimensions() {
        let dom = Domain::new_box(vec![0.0; 3], vec![1.0, 0.8, 1.5]).unwrap();
        let lam = 60.0 * PI * PI;
        let b = NeumannBasis::new(&dom, Truncation::MaxEigenvalue(lam)).unwrap();
        for t in [0.05, 0.01, 0.003] {
            let cert = tail_certificate(&b, t).unwrap();
            let direct = direct_tail(&[1.0, 0.8, 1.5], lam, 9.0 * lam, t);
            assert!(cert >= direct, "t={t}: {cert} < {direct}");
        }
    }

    #[test]
    fn tail_certificate_monotone() {
        let b1 = unit_square_basis(100.0 * PI * PI);
        let b2 = unit_square_basis(200.0 * PI * PI);
        let mut prev = f64::INFINITY;
        for t in [0.001, 0.003, 0.01, 0.03, 0.1, 1.0] {
            let c = tail_certificate(&b1, t).unwrap();
            assert!(c <= prev);
            assert!(tail_certificate(&b2, t).unwrap() <= c);
            prev = c;
        }
        assert!(tail_certificate(&b1, 10.0).unwrap() < 1e-300);
    }

    #[test]
    fn tail_certificate_reports_insufficient_truncation() {
        let b = unit_square_basis(30.0);
        assert!(matches!(
            tail_certificate(&b, 1e-6),
            Err(Error::TruncationInsufficient { .. })
        ));
    }

    #[test]
    fn heat_kernel_integrates_to_one_and_is_symmetric() {
        let b = unit_square_basis(400.0 * PI * PI);
        let h = HeatKernelEvaluator::new(b, 0.01).unwrap();
        let y = [0.3, 0.6];
        let g = GaussLegendre::new(60);
        let mut total = 0.0;
        for (x1, w1) in g.on_interval(0.0, 1.0) {
            for (x2, w2) in g.on_interval(0.0, 1.0) {
                total += w1 * w2 * h.eval(&[x1, x2], &y);
            }
        }
        assert!((total - 1.0).abs() < 1e-10, "{total}");
        let x = [0.11, 0.93];
        assert!((h.eval(&x, &y) - h.eval(&y, &x)).abs() < 1e-12);
    }
}
