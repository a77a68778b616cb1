//! Resolvent of the network diffusion operator with a general boundary
//! coupling.
//!
//! On edge `j` the solution of `λu − σⱼ∂ₓₓu = f` is
//! `u(x) = C₁e^{−μx} + C₂e^{μx} + U(x)` with `μ² = λ/σⱼ`, `Re μ > 0` and
//! `U` the kernel integral of [`crate::gridfn::kernel_integral_u`]. The
//! constants come from a `2m × 2m` boundary system. Internally `C₂` is
//! carried as `D₂ = C₂e^{μ}` so that only exponentials with nonpositive real
//! exponents are ever formed:
//!
//! ```text
//! u(x) = C₁e^{−μx} + D₂e^{−μ(1−x)} + U(x)
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::gridfn::{kernel_integral_on, Grid, KernelIntegral, NetworkState, PlFunction, Value};
use crate::linalg::{self, CMatrix, CVector};
use crate::netmodel::DiffusionCoupling;
use crate::{Error, Result, NEAR_SPECTRUM_CONDITION};

/// Principal root of `λ/σ`; rejects `λ` on the cut `(−∞, 0]`.
pub fn mu_from_lambda(lambda: Complex64, sigma: f64) -> Result<Complex64> {
    if lambda.im == 0.0 && lambda.re <= 0.0 || !lambda.re.is_finite() || !lambda.im.is_finite() {
        return Err(Error::BranchCut(lambda));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma = {sigma} must be positive")));
    }
    let mu = (lambda / sigma).sqrt();
    if mu.re > 0.0 {
        Ok(mu)
    } else {
        Err(Error::BranchCut(lambda))
    }
}

/// A resolvent solve `u = R(λ)f` with its boundary constants.
#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub lambda: Complex64,
    pub u: NetworkState<Complex64>,
    /// `∂ₓu` at the nodes.
    pub du: NetworkState<Complex64>,
    pub c1: Vec<Complex64>,
    /// `C₂`; may underflow to zero when `Re μ` is large.
    pub c2: Vec<Complex64>,
    /// Scaled constant `D₂ = C₂e^{μ}`.
    pub d2: Vec<Complex64>,
    pub mu: Vec<Complex64>,
    /// Condition estimate of the (row-equilibrated) boundary system; for the
    /// fixed-point route, `1/(1 − q)` with `q` the observed contraction.
    pub condition_estimate: f64,
    /// Largest violation of the two boundary equations.
    pub boundary_residual: f64,
    /// Fixed-point iterations used (zero for the direct solve).
    pub iterations: usize,
}

impl ResolventSolution {
    /// `u(0)` per edge.
    pub fn trace0(&self) -> Vec<Complex64> {
        self.u.all_values().iter().map(|v| v[0]).collect()
    }

    /// `u(1)` per edge.
    pub fn trace1(&self) -> Vec<Complex64> {
        self.u.all_values().iter().map(|v| *v.last().unwrap()).collect()
    }

    /// Largest `|λu − σΔₕu − f|` over interior nodes, with `Δₕ` the three
    /// point second difference.
    pub fn interior_residual<T: Value>(&self, sigma: &[f64], f: &NetworkState<T>) -> f64 {
        let x = self.u.grid().nodes();
        let mut worst: f64 = 0.0;
        for (j, s) in sigma.iter().enumerate() {
            let u = self.u.values(j);
            let fv = f.values(j);
            for k in 1..x.len() - 1 {
                let (h0, h1) = (x[k] - x[k - 1], x[k + 1] - x[k]);
                let d2 = ((u[k + 1] - u[k]) / h1 - (u[k] - u[k - 1]) / h0) * (2.0 / (h0 + h1));
                let r = self.lambda * u[k] - d2 * *s - fv[k].to_complex();
                worst = worst.max(r.norm());
            }
        }
        worst
    }
}

/// Coefficient matrix of the boundary system in the unknowns `(C₁, D₂)`.
pub(crate) fn boundary_matrix(mu: &[Complex64], dc: &DiffusionCoupling) -> CMatrix {
    let m = mu.len();
    let e: Vec<Complex64> = mu.iter().map(|z| (-z).exp()).collect();
    let k = |b: &DMatrix<f64>, i: usize, j: usize| Complex64::new(b[(i, j)], 0.0);
    let mut a = CMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let diag = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            a[(i, j)] = -mu[i] * diag - k(&dc.k00, i, j) - k(&dc.k01, i, j) * e[j];
            a[(i, m + j)] = mu[i] * e[i] * diag - k(&dc.k00, i, j) * e[j] - k(&dc.k01, i, j);
            a[(m + i, j)] = -mu[i] * e[i] * diag - k(&dc.k10, i, j) - k(&dc.k11, i, j) * e[j];
            a[(m + i, m + j)] = mu[i] * diag - k(&dc.k10, i, j) * e[j] - k(&dc.k11, i, j);
        }
    }
    a
}

fn boundary_rhs(mu: &[Complex64], dc: &DiffusionCoupling, kernels: &[KernelIntegral]) -> CVector {
    let m = mu.len();
    let mut b = CVector::zeros(2 * m);
    for i in 0..m {
        let mut top = -mu[i] * kernels[i].at0;
        let mut bottom = mu[i] * kernels[i].at1;
        for j in 0..m {
            top += kernels[j].at0 * dc.k00[(i, j)] + kernels[j].at1 * dc.k01[(i, j)];
            bottom += kernels[j].at0 * dc.k10[(i, j)] + kernels[j].at1 * dc.k11[(i, j)];
        }
        b[i] = top;
        b[m + i] = bottom;
    }
    b
}

fn check_inputs<T: Value>(dc: &DiffusionCoupling, f: &NetworkState<T>) -> Result<()> {
    if f.edge_count() != dc.edge_count() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} edges, coupling has {}",
            f.edge_count(),
            dc.edge_count()
        )));
    }
    Ok(())
}

fn kernels<T: Value>(
    lambda: Complex64,
    dc: &DiffusionCoupling,
    f: &NetworkState<T>,
) -> Result<(Vec<Complex64>, Vec<KernelIntegral>)> {
    let mu = dc
        .sigma
        .iter()
        .map(|&s| mu_from_lambda(lambda, s))
        .collect::<Result<Vec<_>>>()?;
    let kernels = mu
        .iter()
        .zip(&dc.sigma)
        .enumerate()
        .map(|(j, (&z, &s))| kernel_integral_on(z, s, f.grid(), f.values(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok((mu, kernels))
}

/// Builds nodal values, derivatives and traces from the constants.
#[allow(clippy::too_many_arguments)]
fn assemble(
    lambda: Complex64,
    dc: &DiffusionCoupling,
    grid: &Grid,
    mu: Vec<Complex64>,
    kernels: &[KernelIntegral],
    c1: Vec<Complex64>,
    d2: Vec<Complex64>,
    condition_estimate: f64,
    iterations: usize,
) -> ResolventSolution {
    let m = mu.len();
    let nodes = grid.nodes();
    let mut u = Vec::with_capacity(m);
    let mut du = Vec::with_capacity(m);
    for j in 0..m {
        let (z, a, d) = (mu[j], c1[j], d2[j]);
        let mut uj = Vec::with_capacity(nodes.len());
        let mut duj = Vec::with_capacity(nodes.len());
        for (k, &x) in nodes.iter().enumerate() {
            let left = a * (-z * x).exp();
            let right = d * (-z * (1.0 - x)).exp();
            uj.push(left + right + kernels[j].values[k]);
            duj.push(z * (right - left) + kernels[j].derivative[k]);
        }
        u.push(uj);
        du.push(duj);
    }
    let u = NetworkState::new(grid.clone(), u).expect("finite resolvent values");
    let du = NetworkState::new(grid.clone(), du).expect("finite resolvent derivatives");
    let boundary_residual = robin_residual(dc, &u, &du);
    let c2 = mu.iter().zip(&d2).map(|(z, d)| d * (-z).exp()).collect();
    ResolventSolution {
        lambda,
        u,
        du,
        c1,
        c2,
        d2,
        mu,
        condition_estimate,
        boundary_residual,
        iterations,
    }
}

/// Largest violation of `∂ₓu(0) = K⁰⁰u(0) + K⁰¹u(1)`,
/// `∂ₓu(1) = K¹⁰u(0) + K¹¹u(1)` given nodal values and derivatives.
pub fn robin_residual<T: Value>(dc: &DiffusionCoupling, u: &NetworkState<T>, du: &NetworkState<T>) -> f64 {
    let m = dc.edge_count();
    let last = u.grid().len() - 1;
    let u0: Vec<Complex64> = (0..m).map(|j| u.values(j)[0].to_complex()).collect();
    let u1: Vec<Complex64> = (0..m).map(|j| u.values(j)[last].to_complex()).collect();
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let mut r0 = du.values(i)[0].to_complex();
        let mut r1 = du.values(i)[last].to_complex();
        for j in 0..m {
            r0 -= u0[j] * dc.k00[(i, j)] + u1[j] * dc.k01[(i, j)];
            r1 -= u0[j] * dc.k10[(i, j)] + u1[j] * dc.k11[(i, j)];
        }
        worst = worst.max(r0.norm()).max(r1.norm());
    }
    worst
}

/// `u = R(λ, A_Φ)f` by the direct boundary solve.
pub fn solve_resolvent<T: Value>(
    lambda: Complex64,
    dc: &DiffusionCoupling,
    f: &NetworkState<T>,
) -> Result<ResolventSolution> {
    check_inputs(dc, f)?;
    let (mu, kernels) = kernels(lambda, dc, f)?;
    let m = mu.len();
    let a = boundary_matrix(&mu, dc);
    let b = boundary_rhs(&mu, dc, &kernels);
    let (a_scaled, scales) = linalg::equilibrate_rows(&a);
    let b_scaled = CVector::from_iterator(2 * m, b.iter().zip(&scales).map(|(z, s)| z * *s));
    let sol = linalg::solve(&a_scaled, &b_scaled);
    if !(sol.condition <= NEAR_SPECTRUM_CONDITION) {
        return Err(Error::NearSpectrum {
            lambda,
            condition: sol.condition,
        });
    }
    let c1 = sol.x.rows(0, m).iter().copied().collect();
    let d2 = sol.x.rows(m, m).iter().copied().collect();
    let out = assemble(lambda, dc, f.grid(), mu, &kernels, c1, d2, sol.condition, 0);
    let fsup = f.sup();
    if !(out.boundary_residual <= 1e-9 * (1.0 + fsup)) {
        return Err(Error::NearSpectrum {
            lambda,
            condition: sol.condition,
        });
    }
    Ok(out)
}

/// Coupling `Φ*` with blocks `(K⁰⁰ᵀ, −K¹⁰ᵀ; −K⁰¹ᵀ, K¹¹ᵀ)`.
pub type AdjointCoupling = DiffusionCoupling;

pub fn adjoint_coupling(dc: &DiffusionCoupling) -> AdjointCoupling {
    DiffusionCoupling {
        k00: dc.k00.transpose(),
        k01: -dc.k10.transpose(),
        k10: -dc.k01.transpose(),
        k11: dc.k11.transpose(),
        sigma: dc.sigma.clone(),
    }
}

/// Per-edge constants `(C₁, D₂)` of the kernel element
/// `w = C₁e^{−μx} + D₂e^{−μ(1−x)}` with `∂ₓw(0) = y0`, `∂ₓw(1) = y1`.
fn kernel_element(mu: Complex64, y0: Complex64, y1: Complex64) -> (Complex64, Complex64) {
    let e = (-mu).exp();
    let det = 1.0 - e * e;
    let (p, q) = (-y0 / mu, y1 / mu);
    ((p + e * q) / det, (q + e * p) / det)
}

/// `u = R(λ, A_Φ)f` by the fixed-point form `u = R(λ, A_N)f + L_λΦu`,
/// where `A_N` is the Neumann operator and `L_λ` inverts the derivative
/// traces on `ker(λ − A)`. Only the `2m` boundary values are iterated.
pub fn solve_resolvent_greiner<T: Value>(
    lambda: Complex64,
    dc: &DiffusionCoupling,
    f: &NetworkState<T>,
    max_iter: usize,
    tol: f64,
) -> Result<ResolventSolution> {
    check_inputs(dc, f)?;
    let (mu, kernels) = kernels(lambda, dc, f)?;
    let m = mu.len();
    let e: Vec<Complex64> = mu.iter().map(|z| (-z).exp()).collect();
    // Neumann solve, edge by edge.
    let (mut c1n, mut d2n) = (Vec::with_capacity(m), Vec::with_capacity(m));
    for j in 0..m {
        let (u0, u1) = (kernels[j].at0, kernels[j].at1);
        let det = 1.0 - e[j] * e[j];
        c1n.push((u0 + e[j] * u1) / det);
        d2n.push((u1 + e[j] * u0) / det);
    }
    let neumann0: Vec<Complex64> = (0..m).map(|j| c1n[j] + e[j] * d2n[j] + kernels[j].at0).collect();
    let neumann1: Vec<Complex64> = (0..m).map(|j| e[j] * c1n[j] + d2n[j] + kernels[j].at1).collect();

    let correction = |b0: &[Complex64], b1: &[Complex64]| -> Vec<(Complex64, Complex64)> {
        (0..m)
            .map(|i| {
                let mut y0 = Complex64::new(0.0, 0.0);
                let mut y1 = Complex64::new(0.0, 0.0);
                for j in 0..m {
                    y0 += b0[j] * dc.k00[(i, j)] + b1[j] * dc.k01[(i, j)];
                    y1 += b0[j] * dc.k10[(i, j)] + b1[j] * dc.k11[(i, j)];
                }
                kernel_element(mu[i], y0, y1)
            })
            .collect()
    };

    let (mut b0, mut b1) = (neumann0.clone(), neumann1.clone());
    let mut last_step = f64::INFINITY;
    let mut ratio: f64 = 0.0;
    let mut growth_streak = 0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let corr = correction(&b0, &b1);
        let nb0: Vec<Complex64> = (0..m).map(|j| neumann0[j] + corr[j].0 + e[j] * corr[j].1).collect();
        let nb1: Vec<Complex64> = (0..m).map(|j| neumann1[j] + e[j] * corr[j].0 + corr[j].1).collect();
        let step = nb0
            .iter()
            .zip(&b0)
            .chain(nb1.iter().zip(&b1))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale = nb0.iter().chain(&nb1).map(|z| z.norm()).fold(0.0, f64::max);
        b0 = nb0;
        b1 = nb1;
        if !step.is_finite() || !scale.is_finite() {
            return Err(Error::NoContraction { lambda, ratio: f64::INFINITY });
        }
        if last_step.is_finite() && last_step > 0.0 {
            ratio = step / last_step;
            if ratio >= 1.0 {
                growth_streak += 1;
                if growth_streak >= 3 {
                    return Err(Error::NoContraction { lambda, ratio });
                }
            } else {
                growth_streak = 0;
            }
        }
        if step <= tol * (1.0 + scale) {
            converged = true;
            break;
        }
        last_step = step;
    }
    if !converged {
        return Err(Error::NoContraction { lambda, ratio });
    }
    let corr = correction(&b0, &b1);
    let c1 = (0..m).map(|j| c1n[j] + corr[j].0).collect();
    let d2 = (0..m).map(|j| d2n[j] + corr[j].1).collect();
    let condition = if ratio < 1.0 { 1.0 / (1.0 - ratio) } else { f64::INFINITY };
    Ok(assemble(lambda, dc, f.grid(), mu, &kernels, c1, d2, condition, iterations))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarBoundary {
    Dirichlet,
    Neumann,
}

/// Single-edge resolvent from the closed-form Dirichlet or Neumann
/// constants, written with `e^{−μ}` factored out of numerator and
/// denominator. Independent of the general boundary solve.
pub fn scalar_oracle<T: Value>(
    lambda: Complex64,
    sigma: f64,
    f: &PlFunction<T>,
    bc: ScalarBoundary,
) -> Result<PlFunction<Complex64>> {
    let mu = mu_from_lambda(lambda, sigma)?;
    let k = kernel_integral_on(mu, sigma, &f.grid, &f.values)?;
    let e = (-mu).exp();
    let den = 1.0 - e * e;
    // u(x) = C₁e^{−μx} + C₂'e^{−μ(1−x)} + U(x), C₂' = C₂e^{μ}
    let (c1, c2s) = match bc {
        ScalarBoundary::Dirichlet => ((k.at1 * e - k.at0) / den, (k.at0 * e - k.at1) / den),
        ScalarBoundary::Neumann => ((k.at0 + k.at1 * e) / den, (k.at1 + k.at0 * e) / den),
    };
    let values = f
        .grid
        .nodes()
        .iter()
        .zip(&k.values)
        .map(|(&x, uk)| c1 * (-mu * x).exp() + c2s * (-mu * (1.0 - x)).exp() + uk)
        .collect();
    PlFunction::new(f.grid.clone(), values)
}

/// Matrix of `R(λ)` acting on nodal hat functions: column `(j, k)` holds the
/// nodal values of `R(λ)` applied to the hat at node `k` of edge `j`.
/// Rows and columns are ordered edge-major.
pub fn discretize_resolvent(lambda: Complex64, dc: &DiffusionCoupling, grid: &Grid) -> Result<CMatrix> {
    let m = dc.edge_count();
    let n = grid.len();
    let mut out = CMatrix::zeros(m * n, m * n);
    for j in 0..m {
        for k in 0..n {
            let mut hat = NetworkState::zeros(grid.clone(), m);
            hat.values_mut(j)[k] = 1.0;
            let sol = solve_resolvent(lambda, dc, &hat)?;
            let col = j * n + k;
            for e in 0..m {
                for (p, v) in sol.u.values(e).iter().enumerate() {
                    out[(e * n + p, col)] = *v;
                }
            }
        }
    }
    Ok(out)
}

/// Trapezoid weights of the grid, repeated for each of `m` edges.
pub fn lumped_weights(grid: &Grid, m: usize) -> Vec<f64> {
    let x = grid.nodes();
    let n = x.len();
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let h = x[k + 1] - x[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    w.iter().cycle().take(m * n).copied().collect()
}

/// Operator norm on L1 of a discretized resolvent: the largest weighted
/// column sum `Σᵢ wᵢ|rᵢₖ| / wₖ`.
pub fn l1_operator_norm(r: &CMatrix, weights: &[f64]) -> f64 {
    (0..r.ncols())
        .map(|k| {
            (0..r.nrows()).map(|i| weights[i] * r[(i, k)].norm()).sum::<f64>() / weights[k]
        })
        .fold(0.0, f64::max)
}

/// Operator norm on C of a discretized resolvent: the largest absolute
/// row sum.
pub fn sup_operator_norm(r: &CMatrix) -> f64 {
    r.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
