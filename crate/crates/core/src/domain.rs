//! Bounded convex domains: axis-aligned boxes, disks and axis-aligned ellipses.

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Product of intervals `[a_i, b_i]`, any dimension.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Disk { center: [f64; 2], radius: f64 },
    /// Ellipse with semi-axes aligned to the coordinate axes.
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
}

impl Domain {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidParameter(
                "box needs matching non-empty bounds".into(),
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(a, b)| !(a.is_finite() && b.is_finite() && b > a))
        {
            return Err(Error::InvalidParameter(
                "box extents must be finite and strictly positive".into(),
            ));
        }
        Ok(Domain::Box { lower, upper })
    }

    pub fn unit_cube(d: usize) -> Self {
        Domain::Box {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn unit_square() -> Self {
        Self::unit_cube(2)
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter("disk radius must be positive".into()));
        }
        Ok(Domain::Disk { center, radius })
    }

    pub fn unit_disk() -> Self {
        Domain::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }

    pub fn ellipse(center: [f64; 2], semi_axes: [f64; 2]) -> Result<Self> {
        if semi_axes.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(
                "ellipse semi-axes must be positive".into(),
            ));
        }
        Ok(Domain::Ellipse { center, semi_axes })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            _ => 2,
        }
    }

    /// Lebesgue area (volume for d ≠ 2).
    pub fn area(&self) -> f64 {
        match self {
            Domain::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| b - a).product(),
            Domain::Disk { radius, .. } => PI * radius * radius,
            Domain::Ellipse { semi_axes, .. } => PI * semi_axes[0] * semi_axes[1],
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.contains_unchecked(x))
    }

    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        match self {
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (a, b))| *v >= *a && *v <= *b),
            Domain::Disk { center, radius } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                dx * dx + dy * dy <= radius * radius
            }
            Domain::Ellipse { center, semi_axes } => {
                let u = (x[0] - center[0]) / semi_axes[0];
                let v = (x[1] - center[1]) / semi_axes[1];
                u * u + v * v <= 1.0
            }
        }
    }

    /// Axis-aligned bounding box as (lower, upper).
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            Domain::Disk { center, radius } => (
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            ),
            Domain::Ellipse { center, semi_axes } => (
                vec![center[0] - semi_axes[0], center[1] - semi_axes[1]],
                vec![center[0] + semi_axes[0], center[1] + semi_axes[1]],
            ),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect(),
            Domain::Disk { center, .. } | Domain::Ellipse { center, .. } => center.to_vec(),
        }
    }

    /// Largest distance from the center to a point of the domain.
    pub fn circumradius(&self) -> f64 {
        match self {
            Domain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(a, b)| 0.25 * (b - a) * (b - a))
                .sum::<f64>()
                .sqrt(),
            Domain::Disk { radius, .. } => *radius,
            Domain::Ellipse { semi_axes, .. } => semi_axes[0].max(semi_axes[1]),
        }
    }

    /// The same domain translated by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Domain {
        match self {
            Domain::Box { lower, upper } => Domain::Box {
                lower: lower.iter().zip(shift).map(|(a, s)| a + s).collect(),
                upper: upper.iter().zip(shift).map(|(a, s)| a + s).collect(),
            },
            Domain::Disk { center, radius } => Domain::Disk {
                center: [center[0] + shift[0], center[1] + shift[1]],
                radius: *radius,
            },
            Domain::Ellipse { center, semi_axes } => Domain::Ellipse {
                center: [center[0] + shift[0], center[1] + shift[1]],
                semi_axes: *semi_axes,
            },
        }
    }

    pub fn is_box(&self) -> bool {
        matches!(self, Domain::Box { .. })
    }

    /// Side lengths of a box domain.
    pub fn box_sides(&self) -> Option<Vec<f64>> {
        match self {
            Domain::Box { lower, upper } => Some(lower.iter().zip(upper).map(|(a, b)| b - a).collect()),
            _ => None,
        }
    }
}

/// Textual forms: `unit-square`, `unit-cube:<d>`, `unit-disk`,
/// `box:a1,b1,a2,b2,...`, `disk:cx,cy,r`, `ellipse:cx,cy,A,B`.
impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let numbers = |body: &str| -> Result<Vec<f64>> {
            body.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number '{t}' in domain '{s}'")))
                })
                .collect()
        };
        match s {
            "unit-square" => return Ok(Domain::unit_square()),
            "unit-disk" => return Ok(Domain::unit_disk()),
            _ => {}
        }
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("unknown domain '{s}'")))?;
        match kind {
            "unit-cube" => {
                let d: usize = body
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad dimension in '{s}'")))?;
                if d == 0 {
                    return Err(Error::Parse("dimension must be positive".into()));
                }
                Ok(Domain::unit_cube(d))
            }
            "box" => {
                let v = numbers(body)?;
                if v.len() % 2 != 0 || v.is_empty() {
                    return Err(Error::Parse(format!("box needs pairs of bounds: '{s}'")));
                }
                let lower = v.iter().step_by(2).copied().collect();
                let upper = v.iter().skip(1).step_by(2).copied().collect();
                Domain::new_box(lower, upper)
            }
            "disk" => match numbers(body)?.as_slice() {
                [cx, cy, r] => Domain::disk([*cx, *cy], *r),
                _ => Err(Error::Parse(format!("disk needs cx,cy,r: '{s}'"))),
            },
            "ellipse" => match numbers(body)?.as_slice() {
                [cx, cy, a, b] => Domain::ellipse([*cx, *cy], [*a, *b]),
                _ => Err(Error::Parse(format!("ellipse needs cx,cy,A,B: '{s}'"))),
            },
            _ => Err(Error::Parse(format!("unknown domain '{s}'"))),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Box { lower, upper } => {
                let parts: Vec<String> = lower
                    .iter()
                    .zip(upper)
                    .map(|(a, b)| format!("{a},{b}"))
                    .collect();
                write!(f, "box:{}", parts.join(","))
            }
            Domain::Disk { center, radius } => write!(f, "disk:{},{},{}", center[0], center[1], radius),
            Domain::Ellipse { center, semi_axes } => write!(
                f,
                "ellipse:{},{},{},{}",
                center[0], center[1], semi_axes[0], semi_axes[1]
            ),
        }
    }
}

impl Domain {
    /// Product quadrature rule over the domain: `order` Gauss–Legendre nodes
    /// per box axis, or `order` radial Gauss nodes times `2*order` periodic
    /// trapezoid angles on disks and ellipses. Returns (points, weights) with
    /// points stored flat.
    pub fn quadrature(&self, order: usize) -> (Vec<f64>, Vec<f64>) {
        use crate::numerics::GaussLegendre;
        let rule = GaussLegendre::new(order);
        match self {
            Domain::Box { lower, upper } => {
                let d = lower.len();
                let axes: Vec<Vec<(f64, f64)>> = lower
                    .iter()
                    .zip(upper)
                    .map(|(a, b)| rule.on_interval(*a, *b).collect())
                    .collect();
                let total = order.pow(d as u32);
                let mut points = Vec::with_capacity(total * d);
                let mut weights = Vec::with_capacity(total);
                let mut idx = vec![0usize; d];
                for _ in 0..total {
                    let mut w = 1.0;
                    for (axis, &i) in idx.iter().enumerate() {
                        points.push(axes[axis][i].0);
                        w *= axes[axis][i].1;
                    }
                    weights.push(w);
                    for slot in idx.iter_mut() {
                        *slot += 1;
                        if *slot < order {
                            break;
                        }
                        *slot = 0;
                    }
                }
                (points, weights)
            }
            Domain::Disk { center, radius } => {
                polar_rule(&rule, order, *center, [*radius, *radius])
            }
            Domain::Ellipse { center, semi_axes } => polar_rule(&rule, order, *center, *semi_axes),
        }
    }
}

fn polar_rule(
    rule: &crate::numerics::GaussLegendre,
    order: usize,
    center: [f64; 2],
    axes: [f64; 2],
) -> (Vec<f64>, Vec<f64>) {
    let m = 2 * order;
    let dtheta = 2.0 * PI / m as f64;
    let mut points = Vec::with_capacity(2 * order * m);
    let mut weights = Vec::with_capacity(order * m);
    for (r, wr) in rule.on_interval(0.0, 1.0) {
        for k in 0..m {
            let theta = (k as f64 + 0.5) * dtheta;
            points.push(center[0] + axes[0] * r * theta.cos());
            points.push(center[1] + axes[1] * r * theta.sin());
            weights.push(axes[0] * axes[1] * r * wr * dtheta);
        }
    }
    (points, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn areas() {
        assert_eq!(Domain::unit_square().area(), 1.0);
        assert!((Domain::unit_disk().area() - PI).abs() < 1e-15);
        let tau = 0.5;
        let e = Domain::ellipse([0.0, 0.0], [1.0 + tau, 1.0 - tau]).unwrap();
        assert!((e.area() - 0.75 * PI).abs() < 1e-15);
        let b = Domain::new_box(vec![0.0, -1.0, 2.0], vec![2.0, 0.5, 2.25]).unwrap();
        assert_eq!(b.area(), 2.0 * 1.5 * 0.25);
    }

    #[test]
    fn containment() {
        assert!(Domain::unit_square().contains(&[0.5, 0.5]).unwrap());
        assert!(Domain::unit_disk().contains(&[1.0, 0.0]).unwrap());
        assert!(!Domain::unit_disk().contains(&[0.8, 0.7]).unwrap());
        assert!(matches!(
            Domain::unit_square().contains(&[0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_degenerate_extents() {
        assert!(Domain::new_box(vec![0.0], vec![0.0]).is_err());
        assert!(Domain::disk([0.0, 0.0], -1.0).is_err());
        assert!(Domain::ellipse([0.0, 0.0], [1.0, 0.0]).is_err());
    }

    #[test]
    fn parses_textual_forms() {
        assert_eq!("unit-square".parse::<Domain>().unwrap(), Domain::unit_square());
        assert_eq!(
            "box:0,2,0,1".parse::<Domain>().unwrap(),
            Domain::new_box(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap()
        );
        let d: Domain = "ellipse:0,0,1.5,0.5".parse().unwrap();
        assert_eq!(d.to_string().parse::<Domain>().unwrap(), d);
        assert!("triangle:0".parse::<Domain>().is_err());
    }
}
