use super::kernel::{KernelEvaluator, KernelKind};
use super::projection::{sample_features, FeatureMap, UniformProposal};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::measure::PointConfiguration;
use crate::numerics::special::{gamma_pq, ln_factorial, ln_gamma, ln_gamma_p};
use crate::numerics::GaussLegendre;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use std::f64::consts::PI;
use std::sync::Arc;

const EIG_TOL: f64 = 1e-6;
const STABILITY_TOL: f64 = 1e-3;
const TRACE_TOL: f64 = 0.02;
/// Eigenvalues below this are never selected in practice and are dropped.
const NEGLIGIBLE: f64 = 1e-14;
const MAX_NODES: usize = 20_000;

/// Spectral sampler for a DPP restricted to a window. The eigendecomposition
/// is computed once and shared by all draws.
pub struct NystromSampler {
    kernel: Arc<dyn KernelEvaluator>,
    window: Domain,
    route: Route,
    eigenvalues: Vec<f64>,
    grid: usize,
}

enum Route {
    /// Infinite Ginibre: Gram matrix of the monomial basis over the centred
    /// window. Eigenvector m gives ψ_m = Σ_j U_jm f_j / √λ_m.
    Gram { l: f64, center: Vec<f64>, jmax: usize, vecs: Vec<f64> },
    /// Dense Nyström discretization W^½KW^½ on a quadrature grid. On boxes
    /// the eigenfunctions are interpolated from the tensor grid; elsewhere
    /// they are extended by ψ(x) = λ⁻¹ Σ_p w_p K(x, x_p) ψ(x_p).
    Dense {
        nodes: Vec<f64>,
        sqrt_w: Vec<f64>,
        vecs: Vec<f64>,
        tensor: Option<TensorGrid>,
    },
}

impl std::fmt::Debug for NystromSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NystromSampler")
            .field("window", &self.window)
            .field("grid", &self.grid)
            .field("rank", &self.eigenvalues.len())
            .finish()
    }
}

impl NystromSampler {
    /// `grid` is the initial resolution: nodes per axis for the dense route,
    /// angular nodes per sector for the Gram route. It is raised until the
    /// spectrum is stable within 1e−3.
    pub fn new(kernel: Arc<dyn KernelEvaluator>, window: &Domain, grid: usize) -> Result<Self> {
        if grid < 32 {
            return Err(Error::InvalidParameter(format!("Nyström grid {grid} < 32")));
        }
        if kernel.dim() != window.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                found: window.dim(),
            });
        }
        let (route, eigenvalues, grid) = match kernel.kind() {
            KernelKind::InfiniteGinibre { l } => gram_route(l, window, grid)?,
            _ if kernel.is_real() => dense_route(kernel.as_ref(), window, grid)?,
            _ => {
                return Err(Error::InvalidParameter(
                    "dense Nyström route supports real kernels only".into(),
                ))
            }
        };
        let trace: f64 = eigenvalues.iter().sum();
        let (pts, wts) = window.quadrature(48);
        let scale = kernel.background().to_lebesgue();
        let target: f64 = pts
            .chunks_exact(window.dim())
            .zip(&wts)
            .map(|(x, w)| w * kernel.intensity(x) / scale)
            .sum();
        if (trace - target).abs() > TRACE_TOL * target {
            return Err(Error::Discretization(format!(
                "retained eigenvalues sum to {trace:.6}, kernel trace over the window is {target:.6}"
            )));
        }
        Ok(Self {
            kernel,
            window: window.clone(),
            route,
            eigenvalues,
            grid,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Expected number of points: the sum of the retained eigenvalues.
    pub fn expected_count(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn window(&self) -> &Domain {
        &self.window
    }

    pub fn sample<R: RngCore>(&self, rng: &mut R) -> Result<PointConfiguration> {
        let selected: Vec<usize> = (0..self.eigenvalues.len())
            .filter(|&m| rng.random::<f64>() < self.eigenvalues[m])
            .collect();
        let d = self.window.dim();
        if selected.is_empty() {
            return Ok(PointConfiguration::empty(d));
        }
        let s = selected.len();
        let r = self.eigenvalues.len();
        match &self.route {
            Route::Gram { l, center, jmax, vecs } => {
                let mut coef = vec![0.0; jmax * s];
                for j in 0..*jmax {
                    for (i, &m) in selected.iter().enumerate() {
                        coef[j * s + i] = vecs[j * r + m] / self.eigenvalues[m].sqrt();
                    }
                }
                let features = GramFeatures { l: *l, jmax: *jmax, coef, s };
                let local = self.window.translated(&center.iter().map(|c| -c).collect::<Vec<_>>());
                let cfg = run_with_envelope(&features, &local, spacing(*l), rng)?;
                Ok(cfg.map_affine(1.0, center))
            }
            Route::Dense { nodes, sqrt_w, vecs, tensor } => {
                let n = sqrt_w.len();
                let h = match self.kernel.kind() {
                    KernelKind::Bessel { l, d } => 1.0 / l.powf(1.0 / d as f64),
                    _ => 1.0 / (self.expected_count() / self.window.area()).powf(1.0 / d as f64),
                };
                let mut coef = vec![0.0; n * s];
                if let Some(grid) = tensor {
                    for p in 0..n {
                        for (i, &m) in selected.iter().enumerate() {
                            coef[p * s + i] = vecs[p * r + m] / sqrt_w[p];
                        }
                    }
                    let features = InterpolatedFeatures { grid, coef, s };
                    return run_with_envelope(&features, &self.window, h, rng);
                }
                for p in 0..n {
                    for (i, &m) in selected.iter().enumerate() {
                        coef[p * s + i] = sqrt_w[p] * vecs[p * r + m] / self.eigenvalues[m];
                    }
                }
                let features = DenseFeatures {
                    kernel: self.kernel.as_ref(),
                    nodes,
                    coef,
                    s,
                };
                run_with_envelope(&features, &self.window, h, rng)
            }
        }
    }
}

/// Convenience wrapper: discretize, decompose and draw once.
pub fn sample_dpp_nystrom<R: RngCore>(
    kernel: Arc<dyn KernelEvaluator>,
    window: &Domain,
    grid: usize,
    rng: &mut R,
) -> Result<PointConfiguration> {
    NystromSampler::new(kernel, window, grid)?.sample(rng)
}

fn spacing(l: f64) -> f64 {
    1.0 / l.sqrt()
}

/// Envelope = twice the largest ‖ψ(x)‖² over a lattice with spacing at most
/// half the kernel's length scale; violations abort the draw.
fn run_with_envelope<R: RngCore>(
    features: &dyn FeatureMap,
    window: &Domain,
    length: f64,
    rng: &mut R,
) -> Result<PointConfiguration> {
    let d = window.dim();
    let (lo, hi) = window.bounding_box();
    let per_axis: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (((b - a) / (0.5 * length)).ceil() as usize + 1).max(24))
        .collect();
    let total: usize = per_axis.iter().product();
    let mut v = vec![Complex64::new(0.0, 0.0); features.rank()];
    let mut x = vec![0.0; d];
    let mut idx = vec![0usize; d];
    let mut sup: f64 = 0.0;
    for _ in 0..total {
        for k in 0..d {
            x[k] = lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (per_axis[k] - 1) as f64;
        }
        if window.contains_unchecked(&x) {
            let (a, b) = features.features(&x, &mut v);
            sup = sup.max(v[a..b].iter().map(|c| c.norm_sqr()).sum());
            v[a..b].fill(Complex64::new(0.0, 0.0));
        }
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < per_axis[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    let proposal = UniformProposal::new(window.clone(), 2.0 * sup)?;
    sample_features(features, &proposal, rng)
}

struct GramFeatures {
    l: f64,
    jmax: usize,
    coef: Vec<f64>,
    s: usize,
}

impl FeatureMap for GramFeatures {
    fn dim(&self) -> usize {
        2
    }

    fn rank(&self) -> usize {
        self.s
    }

    fn features(&self, x: &[f64], out: &mut [Complex64]) -> (usize, usize) {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let theta = x[1].atan2(x[0]);
        let base = (self.l / PI).ln() - self.l * r2;
        let lr2 = (self.l * r2).ln();
        let logm = |j: usize| {
            if j == 0 {
                base
            } else {
                base + j as f64 * lr2 - ln_factorial(j)
            }
        };
        let peak = ((self.l * r2).floor() as usize).min(self.jmax - 1);
        let top = logm(peak);
        let mut lo = peak;
        while lo > 0 && logm(lo - 1) > top - 75.0 {
            lo -= 1;
        }
        let mut hi = peak + 1;
        while hi < self.jmax && logm(hi) > top - 75.0 {
            hi += 1;
        }
        let s = self.s;
        let mut acc = vec![Complex64::new(0.0, 0.0); s];
        for j in lo..hi {
            let f = Complex64::from_polar((0.5 * logm(j)).exp(), j as f64 * theta);
            for (a, c) in acc.iter_mut().zip(&self.coef[j * s..(j + 1) * s]) {
                *a += f * c;
            }
        }
        out[..s].copy_from_slice(&acc);
        (0, s)
    }
}

struct DenseFeatures<'a> {
    kernel: &'a dyn KernelEvaluator,
    nodes: &'a [f64],
    coef: Vec<f64>,
    s: usize,
}

impl FeatureMap for DenseFeatures<'_> {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn rank(&self) -> usize {
        self.s
    }

    fn features(&self, x: &[f64], out: &mut [Complex64]) -> (usize, usize) {
        let d = self.dim();
        let s = self.s;
        let mut acc = vec![0.0; s];
        for (p, y) in self.nodes.chunks_exact(d).enumerate() {
            let k = self.kernel.eval(x, y).re;
            for (a, c) in acc.iter_mut().zip(&self.coef[p * s..(p + 1) * s]) {
                *a += k * c;
            }
        }
        for (o, a) in out.iter_mut().zip(&acc) {
            *o = Complex64::new(*a, 0.0);
        }
        (0, s)
    }
}

/// Tensor Gauss–Legendre grid with barycentric interpolation weights; the
/// first axis varies fastest, matching `Domain::quadrature`.
struct TensorGrid {
    axes: Vec<Vec<f64>>,
    bary: Vec<Vec<f64>>,
}

impl TensorGrid {
    fn new(lower: &[f64], upper: &[f64], g: usize) -> Self {
        let rule = GaussLegendre::new(g);
        let axes: Vec<Vec<f64>> = lower
            .iter()
            .zip(upper)
            .map(|(a, b)| rule.on_interval(*a, *b).map(|(x, _)| x).collect())
            .collect();
        let bary = axes
            .iter()
            .map(|xs| {
                let raw: Vec<f64> = (0..xs.len())
                    .map(|p| {
                        let prod: f64 = (0..xs.len()).filter(|&q| q != p).map(|q| xs[p] - xs[q]).product();
                        1.0 / prod
                    })
                    .collect();
                let m = raw.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                raw.iter().map(|b| b / m).collect()
            })
            .collect();
        Self { axes, bary }
    }

    /// Lagrange basis values at t along one axis.
    fn lagrange(&self, axis: usize, t: f64, out: &mut [f64]) {
        let xs = &self.axes[axis];
        let bs = &self.bary[axis];
        if let Some(p) = xs.iter().position(|&x| x == t) {
            out.fill(0.0);
            out[p] = 1.0;
            return;
        }
        let mut total = 0.0;
        for p in 0..xs.len() {
            out[p] = bs[p] / (t - xs[p]);
            total += out[p];
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }
}

struct InterpolatedFeatures<'a> {
    grid: &'a TensorGrid,
    coef: Vec<f64>,
    s: usize,
}

impl FeatureMap for InterpolatedFeatures<'_> {
    fn dim(&self) -> usize {
        self.grid.axes.len()
    }

    fn rank(&self) -> usize {
        self.s
    }

    fn features(&self, x: &[f64], out: &mut [Complex64]) -> (usize, usize) {
        let d = self.dim();
        let s = self.s;
        let g: Vec<usize> = self.grid.axes.iter().map(|a| a.len()).collect();
        let basis: Vec<Vec<f64>> = (0..d)
            .map(|k| {
                let mut b = vec![0.0; g[k]];
                self.grid.lagrange(k, x[k], &mut b);
                b
            })
            .collect();
        // Contract the fastest axis first, then the remaining ones.
        let rest: usize = g[1..].iter().product();
        let mut partial = vec![0.0; rest * s];
        for q in 0..rest {
            let acc = &mut partial[q * s..(q + 1) * s];
            for (p, &b) in basis[0].iter().enumerate() {
                let row = &self.coef[(q * g[0] + p) * s..(q * g[0] + p + 1) * s];
                for (a, c) in acc.iter_mut().zip(row) {
                    *a += b * c;
                }
            }
        }
        let mut acc = vec![0.0; s];
        let mut idx = vec![0usize; d - 1];
        for q in 0..rest {
            let w: f64 = idx.iter().enumerate().map(|(k, &i)| basis[k + 1][i]).product();
            for (a, c) in acc.iter_mut().zip(&partial[q * s..(q + 1) * s]) {
                *a += w * c;
            }
            for (k, slot) in idx.iter_mut().enumerate() {
                *slot += 1;
                if *slot < g[k + 1] {
                    break;
                }
                *slot = 0;
            }
        }
        for (o, a) in out.iter_mut().zip(&acc) {
            *o = Complex64::new(*a, 0.0);
        }
        (0, s)
    }
}

/// Four-point Lagrange interpolation of a radial profile on a uniform grid of
/// 2^16 cells; accurate to round-off for kernels varying on scales ≫ the cell.
struct RadialTable {
    step: f64,
    values: Vec<f64>,
}

impl RadialTable {
    const CELLS: usize = 1 << 16;

    fn new(kernel: &dyn KernelEvaluator, rmax: f64) -> Self {
        let step = rmax / Self::CELLS as f64;
        let values = (0..Self::CELLS + 4)
            .map(|i| kernel.radial((i as f64 - 1.0).abs() * step).unwrap_or(0.0))
            .collect();
        Self { step, values }
    }

    fn eval(&self, r: f64) -> f64 {
        let t = r / self.step + 1.0;
        let i = (t.floor() as usize).clamp(1, Self::CELLS + 1);
        let u = t - i as f64;
        let f = &self.values[i - 1..i + 3];
        let (um, u1, u2) = (u + 1.0, u - 1.0, u - 2.0);
        -f[0] * u * u1 * u2 / 6.0 + f[1] * um * u1 * u2 / 2.0 - f[2] * um * u * u2 / 2.0 + f[3] * um * u * u1 / 6.0
    }
}

fn check_spectrum(eig: &[f64]) -> Result<()> {
    if let Some(bad) = eig.iter().find(|&&e| !(-EIG_TOL..=1.0 + EIG_TOL).contains(&e)) {
        return Err(Error::Discretization(format!("operator eigenvalue {bad:.9} outside [0, 1]")));
    }
    Ok(())
}

/// Keeps eigenpairs above the negligible level, clipped to [0, 1]; vectors
/// are stored row-major with one column per kept pair.
fn retain(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> (Vec<f64>, Vec<f64>) {
    let rows = eig.eigenvectors.nrows();
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&m| eig.eigenvalues[m] > NEGLIGIBLE)
        .collect();
    let values = keep.iter().map(|&m| eig.eigenvalues[m].min(1.0)).collect();
    let mut vecs = vec![0.0; rows * keep.len()];
    for p in 0..rows {
        for (i, &m) in keep.iter().enumerate() {
            vecs[p * keep.len() + i] = eig.eigenvectors[(p, m)];
        }
    }
    (values, vecs)
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn spectra_agree(a: &[f64], b: &[f64]) -> bool {
    let (a, b) = (sorted_desc(a), sorted_desc(b));
    let n = a.len().max(b.len());
    (0..n).all(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs() <= STABILITY_TOL)
}

// ---------------------------------------------------------------------------
// Gram route

fn gram_route(l: f64, window: &Domain, grid: usize) -> Result<(Route, Vec<f64>, usize)> {
    let center = window.center();
    let radius = window.circumradius();
    let x = l * radius * radius;
    // Truncate where ∫_window |f_j|² ≤ P(j+1, L R²) is negligible.
    let mut jmax = 1usize;
    while !(jmax as f64 > x + 1.0 && ln_gamma_p(jmax as f64 + 1.0, x) < -36.0) {
        jmax += 1;
    }
    let shape = match window {
        Domain::Box { lower, upper } if lower.len() == 2 => {
            GramShape::Rect([0.5 * (upper[0] - lower[0]), 0.5 * (upper[1] - lower[1])])
        }
        Domain::Disk { radius, .. } => GramShape::Disk(*radius),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "infinite Ginibre Gram route needs a planar box or disk window, got {window}"
            )))
        }
    };
    let mut q = grid;
    let mut g = gram_matrix(l, &shape, jmax, q);
    loop {
        let q2 = 2 * q;
        let g2 = gram_matrix(l, &shape, jmax, q2);
        let diff = (&g2 - &g).amax();
        g = g2;
        q = q2;
        // Weyl's inequality: eigenvalues move by at most the spectral norm.
        if diff * jmax as f64 <= STABILITY_TOL || matches!(shape, GramShape::Disk(_)) {
            break;
        }
        if q > 1 << 14 {
            return Err(Error::Discretization("Gram matrix did not stabilize".into()));
        }
    }
    let eig = SymmetricEigen::new(g);
    check_spectrum(eig.eigenvalues.as_slice())?;
    let (values, vecs) = retain(&eig);
    Ok((Route::Gram { l, center, jmax, vecs }, values, q))
}

enum GramShape {
    Rect([f64; 2]),
    Disk(f64),
}

/// G_jk = ∫_window conj(f_j) f_k dx for f_j(z) = √(L/π)(√L z)^j e^{−L|z|²/2}/√j!,
/// in polar coordinates: the radial integral is a regularized incomplete
/// gamma function, the angular one uses Gauss–Legendre on each smooth sector.
fn gram_matrix(l: f64, shape: &GramShape, jmax: usize, q: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(jmax, jmax);
    let [a, b] = match shape {
        GramShape::Disk(r) => {
            for j in 0..jmax {
                g[(j, j)] = gamma_pq(j as f64 + 1.0, l * r * r).0;
            }
            return g;
        }
        GramShape::Rect(h) => *h,
    };
    let phi = b.atan2(a);
    let rule = GaussLegendre::new(q);
    let mut theta = Vec::new();
    let mut weight = Vec::new();
    let mut rho2 = Vec::new();
    for (s, (t0, t1)) in [(-phi, phi), (phi, PI - phi), (PI - phi, PI + phi), (PI + phi, 2.0 * PI - phi)]
        .into_iter()
        .enumerate()
    {
        for (t, w) in rule.on_interval(t0, t1) {
            let r = if s % 2 == 0 { a / t.cos().abs() } else { b / t.sin().abs() };
            theta.push(t);
            weight.push(w / (2.0 * PI));
            rho2.push(r * r);
        }
    }
    let nodes = theta.len();
    let nmax = 2 * jmax - 1;
    let mut ptab = vec![0.0; nmax * nodes];
    for n in 0..nmax {
        let shape = 0.5 * n as f64 + 1.0;
        for t in 0..nodes {
            ptab[n * nodes + t] = weight[t] * gamma_pq(shape, l * rho2[t]).0;
        }
    }
    let mut ctab = vec![0.0; jmax * nodes];
    for h in 0..jmax {
        for t in 0..nodes {
            ctab[h * nodes + t] = (2.0 * h as f64 * theta[t]).cos();
        }
    }
    let lnf: Vec<f64> = (0..jmax).map(ln_factorial).collect();
    for j in 0..jmax {
        // Central symmetry of the rectangle kills odd j − k.
        for k in (j..jmax).step_by(2) {
            let n = j + k;
            let lc = ln_gamma(0.5 * n as f64 + 1.0) - 0.5 * (lnf[j] + lnf[k]);
            if lc < -45.0 {
                break;
            }
            let h = (k - j) / 2;
            let p = &ptab[n * nodes..(n + 1) * nodes];
            let c = &ctab[h * nodes..(h + 1) * nodes];
            let s: f64 = p.iter().zip(c).map(|(x, y)| x * y).sum();
            let v = lc.exp() * s;
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    g
}

// ---------------------------------------------------------------------------
// Dense route

fn dense_route(kernel: &dyn KernelEvaluator, window: &Domain, grid: usize) -> Result<(Route, Vec<f64>, usize)> {
    // At least eight nodes per expected point.
    let (pts, wts) = window.quadrature(16);
    let d = window.dim();
    let scale = kernel.background().to_lebesgue();
    let trace: f64 = pts.chunks_exact(d).zip(&wts).map(|(x, w)| w * kernel.intensity(x) / scale).sum();
    let start = grid.max((8.0 * trace).powf(1.0 / d as f64).ceil() as usize);
    let mut g = start;
    if (start as f64).powi(d as i32) > MAX_NODES as f64 {
        return Err(Error::TooLarge(format!("{start}^{d} Nyström nodes")));
    }
    let mut prev = dense_decompose(kernel, window, g)?;
    loop {
        let g2 = g + g / 4;
        let next = dense_decompose(kernel, window, g2)?;
        let stable = spectra_agree(&prev.1, &next.1);
        prev = next;
        g = g2;
        if stable {
            break;
        }
        if g > 4 * start {
            return Err(Error::Discretization("Nyström spectrum did not stabilize".into()));
        }
    }
    Ok((prev.0, prev.1, g))
}

fn dense_decompose(kernel: &dyn KernelEvaluator, window: &Domain, grid: usize) -> Result<(Route, Vec<f64>)> {
    let d = window.dim();
    let (nodes, weights) = window.quadrature(grid);
    let n = weights.len();
    if n > MAX_NODES {
        return Err(Error::TooLarge(format!("{n} Nyström nodes")));
    }
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let table = kernel.radial(0.0).map(|_| RadialTable::new(kernel, 2.0 * window.circumradius()));
    let mut a = DMatrix::<f64>::zeros(n, n);
    for q in 0..n {
        let y = &nodes[q * d..(q + 1) * d];
        for p in 0..=q {
            let x = &nodes[p * d..(p + 1) * d];
            let k = match &table {
                Some(t) => t.eval(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()),
                None => kernel.eval(x, y).re,
            };
            a[(p, q)] = sqrt_w[p] * k * sqrt_w[q];
        }
    }
    a.fill_lower_triangle_with_upper_triangle();
    let trace = a.trace();
    // Randomized subspace iteration: the restricted projection has only about
    // trace-many eigenvalues away from zero.
    let mut rank = ((1.5 * trace).ceil() as usize + 64).min(n);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    loop {
        let omega = DMatrix::<f64>::from_fn(n, rank, |_, _| rng.random::<f64>() - 0.5);
        let mut basis = (&a * omega).qr().q();
        basis = (&a * &basis).qr().q();
        let small = basis.transpose() * (&a * &basis);
        let eig = SymmetricEigen::new(0.5 * (&small + small.transpose()));
        let smallest = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if smallest < 1e-8 || rank == n {
            check_spectrum(eig.eigenvalues.as_slice())?;
            let lifted = SymmetricEigen {
                eigenvectors: &basis * &eig.eigenvectors,
                eigenvalues: eig.eigenvalues.clone(),
            };
            let (values, vecs) = retain(&lifted);
            let tensor = match window {
                Domain::Box { lower, upper } => Some(TensorGrid::new(lower, upper, grid)),
                _ => None,
            };
            return Ok((
                Route::Dense {
                    nodes,
                    sqrt_w,
                    vecs,
                    tensor,
                },
                values,
            ));
        }
        rank = (2 * rank).min(n);
    }
}
