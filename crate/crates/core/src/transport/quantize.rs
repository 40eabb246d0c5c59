use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::measure::{DensityKind, ReferenceMeasure};
use crate::numerics::gauss_legendre;

/// Weighted atoms approximating a reference measure, with the W2 distance
/// between the two bounded by `bound`.
#[derive(Debug, Clone)]
pub struct WeightedCloud {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub bound: f64,
    /// Mass captured by the grid before renormalization.
    pub raw_mass: f64,
}

impl WeightedCloud {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

const CELL_NODES: usize = 8;
const SLICE_NODES: usize = 12;

/// Number of grid cells for a given resolution, or None on overflow.
pub(crate) fn cell_count(domain: &Domain, m: usize) -> Option<usize> {
    m.checked_pow(domain.dim() as u32)
}

/// Quantizes a reference measure onto the centroids of an m×…×m grid over
/// the bounding box. Cells are clipped to the domain and integrated exactly
/// up to quadrature rounding.
///
/// W2²(ν|_cell, mass·δ_centroid) ≤ mass·(half diagonal)² because the
/// centroid minimizes the second moment, so the half diagonal bounds W2
/// between ν and the quantized cloud.
pub fn quantize(reference: &ReferenceMeasure, resolution: usize) -> Result<WeightedCloud> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!("resolution {resolution} < 2")));
    }
    let domain = reference.domain();
    let d = domain.dim();
    let total = cell_count(domain, resolution)
        .filter(|&c| c <= 50_000_000)
        .ok_or_else(|| Error::TooLarge(format!("{resolution}^{d} grid cells")))?;
    let (lo, hi) = domain.bounding_box();
    let h: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a) / resolution as f64).collect();
    let bound = 0.5 * h.iter().map(|x| x * x).sum::<f64>().sqrt();

    let cell_rule = gauss_legendre(CELL_NODES);
    let slice_rule = gauss_legendre(SLICE_NODES);
    let mut points = Vec::with_capacity(total * d);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut raw_mass = 0.0;
    let mut cell_lo = vec![0.0; d];
    let mut cell_hi = vec![0.0; d];
    for _ in 0..total {
        for k in 0..d {
            cell_lo[k] = lo[k] + idx[k] as f64 * h[k];
            cell_hi[k] = if idx[k] + 1 == resolution { hi[k] } else { lo[k] + (idx[k] + 1) as f64 * h[k] };
        }
        let (mass, first) = match domain {
            Domain::Box { .. } => box_cell(reference, &cell_lo, &cell_hi, &cell_rule),
            Domain::Disk { center, radius } => {
                ellipse_cell(reference, *center, [*radius, *radius], &cell_lo, &cell_hi, &cell_rule, &slice_rule)
            }
            Domain::Ellipse { center, semi_axes } => {
                ellipse_cell(reference, *center, *semi_axes, &cell_lo, &cell_hi, &cell_rule, &slice_rule)
            }
        };
        if mass > 0.0 {
            raw_mass += mass;
            for k in 0..d {
                // Clamp guards against rounding pushing a centroid out of its cell.
                points.push((first[k] / mass).clamp(cell_lo[k], cell_hi[k]));
            }
            weights.push(mass);
        }
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < resolution {
                break;
            }
            *slot = 0;
        }
    }
    if raw_mass < 1.0 - 1e-6 {
        return Err(Error::Discretization(format!(
            "grid captured mass {raw_mass} of the reference measure"
        )));
    }
    for w in weights.iter_mut() {
        *w /= raw_mass;
    }
    Ok(WeightedCloud {
        dim: d,
        points,
        weights,
        bound,
        raw_mass,
    })
}

fn box_cell(reference: &ReferenceMeasure, lo: &[f64], hi: &[f64], rule: &(Vec<f64>, Vec<f64>)) -> (f64, Vec<f64>) {
    let d = lo.len();
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    match reference.kind() {
        DensityKind::Uniform => {
            let mass = vol / reference.domain().area();
            (mass, lo.iter().zip(hi).map(|(a, b)| mass * 0.5 * (a + b)).collect())
        }
        DensityKind::Density(f) => {
            let q = rule.0.len();
            let total = q.pow(d as u32);
            let mut mass = 0.0;
            let mut first = vec![0.0; d];
            let mut x = vec![0.0; d];
            let mut idx = vec![0usize; d];
            for _ in 0..total {
                let mut w = 1.0;
                for k in 0..d {
                    let half = 0.5 * (hi[k] - lo[k]);
                    x[k] = 0.5 * (lo[k] + hi[k]) + half * rule.0[idx[k]];
                    w *= half * rule.1[idx[k]];
                }
                let v = w * f(&x);
                mass += v;
                for k in 0..d {
                    first[k] += v * x[k];
                }
                for slot in idx.iter_mut() {
                    *slot += 1;
                    if *slot < q {
                        break;
                    }
                    *slot = 0;
                }
            }
            (mass, first)
        }
    }
}

fn ellipse_cell(
    reference: &ReferenceMeasure,
    c: [f64; 2],
    axes: [f64; 2],
    lo: &[f64],
    hi: &[f64],
    cell_rule: &(Vec<f64>, Vec<f64>),
    slice_rule: &(Vec<f64>, Vec<f64>),
) -> (f64, Vec<f64>) {
    let [a, b] = axes;
    let inside = |x: f64, y: f64| ((x - c[0]) / a).powi(2) + ((y - c[1]) / b).powi(2) <= 1.0;
    if inside(lo[0], lo[1]) && inside(lo[0], hi[1]) && inside(hi[0], lo[1]) && inside(hi[0], hi[1]) {
        return box_cell(reference, lo, hi, cell_rule);
    }
    let xa = lo[0].max(c[0] - a);
    let xb = hi[0].min(c[0] + a);
    if xa >= xb {
        return (0.0, vec![0.0, 0.0]);
    }
    // Breakpoints where the ellipse boundary crosses the horizontal cell edges.
    let mut breaks = vec![xa, xb];
    for yj in [lo[1], hi[1]] {
        let v = (yj - c[1]) / b;
        if v.abs() < 1.0 {
            let u = (1.0 - v * v).sqrt();
            for x in [c[0] - a * u, c[0] + a * u] {
                if x > xa && x < xb {
                    breaks.push(x);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let uniform = match reference.kind() {
        DensityKind::Uniform => Some(1.0 / reference.domain().area()),
        DensityKind::Density(_) => None,
    };
    let mut mass = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for w in breaks.windows(2) {
        // x = c + a·sin θ removes the square-root endpoint behaviour.
        let ta = ((w[0] - c[0]) / a).clamp(-1.0, 1.0).asin();
        let tb = ((w[1] - c[0]) / a).clamp(-1.0, 1.0).asin();
        if tb <= ta {
            continue;
        }
        let half = 0.5 * (tb - ta);
        let mid = 0.5 * (ta + tb);
        for (t, wt) in slice_rule.0.iter().zip(&slice_rule.1) {
            let theta = mid + half * t;
            let x = c[0] + a * theta.sin();
            let jac = half * wt * a * theta.cos();
            let hh = b * theta.cos();
            let ylo = lo[1].max(c[1] - hh);
            let yhi = hi[1].min(c[1] + hh);
            if yhi <= ylo {
                continue;
            }
            match (uniform, reference.kind()) {
                (Some(rho), _) => {
                    let len = yhi - ylo;
                    mass += jac * rho * len;
                    mx += jac * rho * len * x;
                    my += jac * rho * 0.5 * (yhi * yhi - ylo * ylo);
                }
                (None, DensityKind::Density(f)) => {
                    let yh = 0.5 * (yhi - ylo);
                    let ym = 0.5 * (yhi + ylo);
                    for (s, ws) in slice_rule.0.iter().zip(&slice_rule.1) {
                        let y = ym + yh * s;
                        let v = jac * yh * ws * f(&[x, y]);
                        mass += v;
                        mx += v * x;
                        my += v * y;
                    }
                }
                (None, DensityKind::Uniform) => unreachable!(),
            }
        }
    }
    (mass, vec![mx, my])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn unit_square_two_by_two() {
        let q = quantize(&ReferenceMeasure::uniform(Domain::unit_square()), 2).unwrap();
        assert_eq!(q.len(), 4);
        let expect = [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]];
        for (p, e) in q.points.chunks_exact(2).zip(expect) {
            assert!((p[0] - e[0]).abs() < 1e-15 && (p[1] - e[1]).abs() < 1e-15);
        }
        assert!(q.weights.iter().all(|w| (w - 0.25).abs() < 1e-15));
        assert!((q.bound - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn disk_mass_and_moments() {
        let q = quantize(&ReferenceMeasure::uniform(Domain::unit_disk()), 64).unwrap();
        assert!((q.raw_mass - 1.0).abs() < 1e-12, "{}", q.raw_mass);
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: Vec<f64> = (0..2)
            .map(|k| q.points.chunks_exact(2).zip(&q.weights).map(|(p, w)| w * p[k]).sum())
            .collect();
        assert!(mean[0].abs() < 1e-12 && mean[1].abs() < 1e-12);
    }

    #[test]
    fn clipped_cell_matches_segment_area() {
        // Cell [0.5,1]×[0,0.5] of the unit disk around the origin; compare
        // against adaptive quadrature of the clipped height.
        let dom = Domain::unit_disk();
        let r = ReferenceMeasure::uniform(dom);
        let rule = gauss_legendre(CELL_NODES);
        let srule = gauss_legendre(SLICE_NODES);
        let (mass, _) = ellipse_cell(&r, [0.0, 0.0], [1.0, 1.0], &[0.5, 0.0], &[1.0, 0.5], &rule, &srule);
        let area = crate::numerics::integrate_adaptive(
            |x: f64| (1.0 - x * x).max(0.0).sqrt().min(0.5),
            0.5,
            1.0,
            1e-13,
            1e-15,
        )
        .unwrap();
        assert!((mass - area / std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn bound_halves_with_resolution() {
        let r = ReferenceMeasure::uniform(Domain::ellipse([0.0, 0.0], [1.5, 0.5]).unwrap());
        let a = quantize(&r, 16).unwrap().bound;
        let b = quantize(&r, 32).unwrap().bound;
        assert!((a / b - 2.0).abs() < 0.2);
    }

    #[test]
    fn density_box_cells() {
        let rho = Arc::new(|x: &[f64]| 2.0 * x[0]);
        let r = ReferenceMeasure::with_density(Domain::unit_square(), rho, 0.0, "lin").unwrap();
        let q = quantize(&r, 2).unwrap();
        // Left column: mass ¼·2·¼·… = ∫_0^½ 2x dx · ½ = 1/8.
        assert!((q.weights[0] - 0.125).abs() < 1e-14);
        assert!((q.points[0] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_resolution_one() {
        assert!(quantize(&ReferenceMeasure::uniform(Domain::unit_square()), 1).is_err());
    }
}
