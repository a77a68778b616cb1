//! Piecewise-linear network states on a grid of `[0, 1]` shared by all
//! edges, with exact norms and exact integrals against exponential kernels.

use std::fmt::Debug;
use std::io::{BufRead, Write};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::{Error, Result};

/// Strictly increasing nodes `0 = x₀ < … < x_N = 1` with `N ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Arc<[f64]>,
}

impl Grid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 segments, got {} nodes",
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidGrid("end points must be exactly 0 and 1".into()));
        }
        if let Some(k) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!("nodes not strictly increasing at index {k}")));
        }
        Ok(Self { nodes: nodes.into() })
    }

    /// Uniform grid with `segments` segments.
    pub fn uniform(segments: usize) -> Result<Self> {
        if segments < 2 {
            return Err(Error::InvalidGrid("need at least 2 segments".into()));
        }
        let mut nodes: Vec<f64> = (0..=segments).map(|k| k as f64 / segments as f64).collect();
        nodes[segments] = 1.0;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index `k` of the segment `[x_k, x_{k+1}]` containing `x`.
    pub fn locate(&self, x: f64) -> usize {
        let p = self.nodes.partition_point(|&n| n <= x);
        p.saturating_sub(1).min(self.segments() - 1)
    }

    /// Splits every segment into `factor` equal parts.
    pub fn refine(&self, factor: usize) -> Grid {
        let factor = factor.max(1);
        let mut nodes = Vec::with_capacity(self.segments() * factor + 1);
        for w in self.nodes.windows(2) {
            for p in 0..factor {
                nodes.push(w[0] + (w[1] - w[0]) * p as f64 / factor as f64);
            }
        }
        nodes.push(1.0);
        Grid { nodes: nodes.into() }
    }

    /// Union of the nodes with extra points in `(0, 1)`.
    pub fn with_points(&self, extra: &[f64]) -> Grid {
        let mut nodes: Vec<f64> = self.nodes.iter().copied().chain(extra.iter().copied()).collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        Grid { nodes: nodes.into() }
    }
}

/// Scalars a state can carry: real for evolution, complex for resolvents.
pub trait Value:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn to_complex(self) -> Complex64;
    /// `∫₀¹ |a + (b − a)t| dt`, exactly.
    fn segment_abs_mean(a: Self, b: Self) -> f64;
}

impl Value for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn segment_abs_mean(a: f64, b: f64) -> f64 {
        if (a >= 0.0) == (b >= 0.0) || a == 0.0 || b == 0.0 {
            0.5 * (a.abs() + b.abs())
        } else {
            0.5 * (a * a + b * b) / (a.abs() + b.abs())
        }
    }
}

impl Value for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn segment_abs_mean(a: Complex64, b: Complex64) -> f64 {
        let q = b - a;
        let (qn, pn) = (q.norm(), a.norm());
        if qn == 0.0 {
            return pn;
        }
        if qn < 0.1 * pn {
            // The segment stays far from the origin; the integrand is
            // analytic and Gauss-Legendre is exact to rounding.
            return GAUSS8
                .iter()
                .map(|&(t, w)| w * (a + q * (0.5 * (t + 1.0))).norm())
                .sum::<f64>()
                * 0.5;
        }
        // |a + q t| = |q| sqrt((t + s0)² + e²)
        let s0 = (a.conj() * q).re / (qn * qn);
        let e = ((a.conj() * q).im / qn).abs() / qn;
        let antider = |s: f64| -> f64 {
            let r = (s * s + e * e).sqrt();
            let tail = if e > 0.0 { e * e * (s / e).asinh() } else { 0.0 };
            0.5 * (s * r + tail)
        };
        qn * (antider(1.0 + s0) - antider(s0))
    }
}

const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// One piecewise-linear function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlFunction<T = f64> {
    pub grid: Grid,
    pub values: Vec<T>,
}

impl<T: Value> PlFunction<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values on a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.modulus().is_finite()) {
            return Err(Error::InvalidArgument("non-finite value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> T) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    pub fn eval(&self, x: f64) -> Result<T> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
        Ok(interpolate(&self.grid, &self.values, x))
    }

    pub fn sup(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn l1(&self) -> f64 {
        l1_norm(&self.grid, &self.values)
    }
}

fn interpolate<T: Value>(grid: &Grid, values: &[T], x: f64) -> T {
    let k = grid.locate(x);
    let (x0, x1) = (grid.nodes()[k], grid.nodes()[k + 1]);
    let t = (x - x0) / (x1 - x0);
    if t <= 0.0 {
        values[k]
    } else if t >= 1.0 {
        values[k + 1]
    } else {
        values[k] * (1.0 - t) + values[k + 1] * t
    }
}

fn sup_norm<T: Value>(values: &[T]) -> f64 {
    values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
}

fn l1_norm<T: Value>(grid: &Grid, values: &[T]) -> f64 {
    grid.nodes()
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| (x[1] - x[0]) * T::segment_abs_mean(v[0], v[1]))
        .sum()
}

/// Sup, L1 and (optionally) speed-weighted L1 norms of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub sup: f64,
    pub l1: f64,
    /// `Σⱼ cⱼ⁻¹ ∫|uⱼ|`, present when speeds were supplied.
    pub weighted: Option<f64>,
}

/// `m` piecewise-linear functions sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState<T = f64> {
    grid: Grid,
    values: Vec<Vec<T>>,
}

impl<T: Value> NetworkState<T> {
    pub fn new(grid: Grid, values: Vec<Vec<T>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch("a state needs at least one edge".into()));
        }
        for (j, v) in values.iter().enumerate() {
            if v.len() != grid.len() {
                return Err(Error::DimensionMismatch(format!(
                    "edge {j} has {} values on a grid of {} nodes",
                    v.len(),
                    grid.len()
                )));
            }
            if v.iter().any(|x| !x.modulus().is_finite()) {
                return Err(Error::InvalidArgument(format!("edge {j} has non-finite values")));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid, m: usize) -> Self {
        Self::constant(grid, m, T::zero())
    }

    pub fn constant(grid: Grid, m: usize, value: T) -> Self {
        let values = vec![vec![value; grid.len()]; m];
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, m: usize, f: impl Fn(usize, f64) -> T) -> Self {
        let values = (0..m)
            .map(|j| grid.nodes().iter().map(|&x| f(j, x)).collect())
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn edge_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self, edge: usize) -> &[T] {
        &self.values[edge]
    }

    pub fn values_mut(&mut self, edge: usize) -> &mut [T] {
        &mut self.values[edge]
    }

    pub fn all_values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn component(&self, edge: usize) -> PlFunction<T> {
        PlFunction {
            grid: self.grid.clone(),
            values: self.values[edge].clone(),
        }
    }

    pub fn eval(&self, edge: usize, x: f64) -> Result<T> {
        if edge >= self.edge_count() {
            return Err(Error::InvalidArgument(format!("edge {edge} out of range")));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
        Ok(interpolate(&self.grid, &self.values[edge], x))
    }

    pub fn norms(&self, speeds: Option<&[f64]>) -> Norms {
        let per_edge: Vec<f64> = self.values.iter().map(|v| l1_norm(&self.grid, v)).collect();
        Norms {
            sup: self.values.iter().map(|v| sup_norm(v)).fold(0.0, f64::max),
            l1: per_edge.iter().sum(),
            weighted: speeds.map(|c| per_edge.iter().zip(c).map(|(n, c)| n / c).sum()),
        }
    }

    pub fn sup(&self) -> f64 {
        self.norms(None).sup
    }

    pub fn l1(&self) -> f64 {
        self.norms(None).l1
    }

    /// Largest nodal difference `max |u − v|`; grids must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.edge_count(), other.edge_count());
        self.values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (*x - *y).modulus()))
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.iter().map(|&x| f(x)).collect()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| x * s)
    }

    /// `self + a·other` on a shared grid.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        assert_eq!(self.edge_count(), other.edge_count());
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| u.iter().zip(v).map(|(&x, &y)| x + a * y).collect())
                .collect(),
        }
    }

    /// Samples onto another grid by linear interpolation. Exact when the
    /// new grid contains every old node or refines it.
    pub fn resample(&self, grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: self
                .values
                .iter()
                .map(|v| grid.nodes().iter().map(|&x| interpolate(&self.grid, v, x)).collect())
                .collect(),
        }
    }

    pub fn refine(&self, factor: usize) -> Self {
        self.resample(&self.grid.refine(factor))
    }

    pub fn to_complex(&self) -> NetworkState<Complex64> {
        NetworkState {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .map(|v| v.iter().map(|x| x.to_complex()).collect())
                .collect(),
        }
    }
}

impl NetworkState<f64> {
    /// Smallest nodal value; exact minimum of the piecewise-linear state.
    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Total mass `Σⱼ ∫uⱼ`.
    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .map(|v| {
                self.grid
                    .nodes()
                    .windows(2)
                    .zip(v.windows(2))
                    .map(|(x, u)| 0.5 * (x[1] - x[0]) * (u[0] + u[1]))
                    .sum::<f64>()
            })
            .sum()
    }
}

impl NetworkState<Complex64> {
    pub fn re(&self) -> NetworkState<f64> {
        NetworkState {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.iter().map(|z| z.re).collect()).collect(),
        }
    }

    pub fn im(&self) -> NetworkState<f64> {
        NetworkState {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.iter().map(|z| z.im).collect()).collect(),
        }
    }
}

/// Componentwise modulus `|u|`, with the zero crossings of every component
/// inserted as nodes so that the result is exactly `|u|`.
pub fn abs_state(s: &NetworkState<f64>) -> NetworkState<f64> {
    let nodes = s.grid.nodes();
    let mut crossings = Vec::new();
    for v in &s.values {
        for k in 0..nodes.len() - 1 {
            let (a, b) = (v[k], v[k + 1]);
            if (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0) {
                let t = a / (a - b);
                let x = nodes[k] + t * (nodes[k + 1] - nodes[k]);
                if x > nodes[k] && x < nodes[k + 1] {
                    crossings.push(x);
                }
            }
        }
    }
    let refined = if crossings.is_empty() {
        s.clone()
    } else {
        s.resample(&s.grid.with_points(&crossings))
    };
    refined.map(f64::abs)
}

/// `∫₀^{x_k} e^{−μ(x_k−s)} f(s) ds` and `∫_{x_k}^1 e^{−μ(s−x_k)} f(s) ds` at
/// every node, exact for piecewise-linear `f`. Valid for any complex `μ`.
#[derive(Debug, Clone)]
pub struct ExpConvolutions {
    pub forward: Vec<Complex64>,
    pub backward: Vec<Complex64>,
}

pub fn exp_convolutions<T: Value>(mu: Complex64, grid: &Grid, f: &[T]) -> ExpConvolutions {
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut forward = vec![Complex64::new(0.0, 0.0); n];
    let mut backward = vec![Complex64::new(0.0, 0.0); n];
    let coeffs: Vec<(Complex64, Complex64, Complex64, f64)> = nodes
        .windows(2)
        .map(|w| {
            let h = w[1] - w[0];
            let z = mu * h;
            (
                (-z).exp(),
                phi1(z),
                phi2(z),
                h,
            )
        })
        .collect();
    for k in 0..n - 1 {
        let (decay, p1, p2, h) = coeffs[k];
        let (a, b) = (f[k].to_complex(), f[k + 1].to_complex());
        forward[k + 1] = decay * forward[k] + (b * p1 - (b - a) * p2) * h;
    }
    for k in (0..n - 1).rev() {
        let (decay, p1, p2, h) = coeffs[k];
        let (a, b) = (f[k].to_complex(), f[k + 1].to_complex());
        backward[k] = decay * backward[k + 1] + (a * p1 + (b - a) * p2) * h;
    }
    ExpConvolutions { forward, backward }
}

/// `(1 − e^{−z})/z`.
fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..24 {
            term *= -z / (n as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (1.0 - (-z).exp()) / z
    }
}

/// `(1 − e^{−z}(1 + z))/z²`.
fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Σ (−z)ⁿ (n+1)/(n+2)!
        let mut power = Complex64::new(1.0, 0.0);
        let mut fact = 2.0;
        let mut sum = Complex64::new(0.5, 0.0);
        for n in 1..24 {
            power *= -z;
            fact *= n as f64 + 2.0;
            sum += power * ((n as f64 + 1.0) / fact);
        }
        sum
    } else {
        (1.0 - (-z).exp() * (1.0 + z)) / (z * z)
    }
}

/// `U(x) = (1/(2μσ)) ∫₀¹ e^{−μ|x−s|} f(s) ds` at the nodes together with
/// its end-point traces and derivatives.
#[derive(Debug, Clone)]
pub struct KernelIntegral {
    pub values: Vec<Complex64>,
    /// `U′` at the nodes.
    pub derivative: Vec<Complex64>,
    pub at0: Complex64,
    pub at1: Complex64,
    /// `U′(0) = μU(0)`.
    pub d_at0: Complex64,
    /// `U′(1) = −μU(1)`.
    pub d_at1: Complex64,
}

pub fn kernel_integral_u<T: Value>(mu: Complex64, sigma: f64, f: &PlFunction<T>) -> Result<KernelIntegral> {
    kernel_integral_on(mu, sigma, &f.grid, &f.values)
}

pub(crate) fn kernel_integral_on<T: Value>(
    mu: Complex64,
    sigma: f64,
    grid: &Grid,
    f: &[T],
) -> Result<KernelIntegral> {
    if !(mu.re > 0.0) {
        return Err(Error::InvalidMu(mu));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma = {sigma} must be positive")));
    }
    let conv = exp_convolutions(mu, grid, f);
    let pre = 1.0 / (2.0 * mu * sigma);
    let values: Vec<Complex64> = conv
        .forward
        .iter()
        .zip(&conv.backward)
        .map(|(a, b)| (a + b) * pre)
        .collect();
    let derivative = conv
        .forward
        .iter()
        .zip(&conv.backward)
        .map(|(a, b)| (b - a) / (2.0 * sigma))
        .collect();
    let (at0, at1) = (values[0], *values.last().unwrap());
    Ok(KernelIntegral {
        derivative,
        at0,
        at1,
        d_at0: mu * at0,
        d_at1: -mu * at1,
        values,
    })
}

/// Writes a real state as `edge,x,value` rows in shortest round-trip form.
pub fn write_state_csv<W: Write>(state: &NetworkState<f64>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "edge,x,value")?;
    for (j, v) in state.values.iter().enumerate() {
        for (x, u) in state.grid.nodes().iter().zip(v) {
            writeln!(out, "{j},{x},{u}")?;
        }
    }
    Ok(())
}

/// Reads the format of [`write_state_csv`]. Rows of one edge must be
/// contiguous and every edge must use the same nodes.
pub fn read_state_csv<R: BufRead>(input: R) -> Result<NetworkState<f64>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty input".into()))?
        .map_err(|e| Error::Parse(e.to_string()))?;
    if header.trim() != "edge,x,value" {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse(format!("line {}: malformed row {line:?}", lineno + 2));
        let mut parts = line.split(',');
        let edge: usize = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let x: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let u: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        if edge == xs.len() {
            xs.push(Vec::new());
            values.push(Vec::new());
        } else if edge + 1 != xs.len() {
            return Err(Error::Parse(format!("line {}: edges out of order", lineno + 2)));
        }
        xs[edge].push(x);
        values[edge].push(u);
    }
    let first = xs.first().ok_or_else(|| Error::Parse("no rows".into()))?;
    if xs.iter().any(|x| x != first) {
        return Err(Error::Parse("edges use different grids".into()));
    }
    NetworkState::new(Grid::new(first.clone())?, values)
}
