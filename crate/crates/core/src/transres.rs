//! Resolvent of the network transport operator `−c∂ₓ` with boundary
//! condition `u(0) = Ku(1)`.
//!
//! Integrating `λu + cⱼu′ = f` along edge `j` gives
//! `uⱼ(x) = e^{−(λ/cⱼ)x}vⱼ + cⱼ⁻¹∫₀ˣ e^{−(λ/cⱼ)(x−s)}fⱼ(s)ds` with
//! `v = u(0)`, and the boundary condition turns into the `m × m` system
//! `(I − KE_λ(1))v = KC⁻¹g`, `gⱼ = ∫₀¹e^{−(λ/cⱼ)(1−s)}fⱼ(s)ds`.

use num_complex::Complex64;

use crate::gridfn::{exp_convolutions, NetworkState, Value};
use crate::linalg::{self, CMatrix, CVector};
use crate::netmodel::TransportCoupling;
use crate::{Error, Result, NEAR_SPECTRUM_CONDITION};

/// `E_λ(s) = diag(e^{−(λ/cⱼ)s})`.
pub fn e_lambda(lambda: Complex64, s: f64, c: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        c.len(),
        c.iter().map(|cj| (-lambda * s / *cj).exp()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportMethod {
    #[default]
    Direct,
    Neumann,
}

#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub lambda: Complex64,
    pub u: NetworkState<Complex64>,
    /// `v = u(0)`.
    pub v: Vec<Complex64>,
    /// `u(1) = E_λ(1)v + C⁻¹g`.
    pub u1: Vec<Complex64>,
    /// `‖(I − KE)⁻¹‖₁(1 + ‖KE‖₁)` for the direct method, `1/(1 − ‖KE‖₁)`
    /// for the series.
    pub condition_estimate: f64,
    /// `max |u(0) − Ku(1)|`.
    pub boundary_residual: f64,
    /// Series terms summed (zero for the direct method).
    pub iterations: usize,
}

impl TransportSolution {
    /// Largest `|λu + c∂ₓu − f|` over interior nodes with `∂ₓ` the centred
    /// difference.
    pub fn interior_residual<T: Value>(&self, c: &[f64], f: &NetworkState<T>) -> f64 {
        let x = self.u.grid().nodes();
        let mut worst: f64 = 0.0;
        for (j, cj) in c.iter().enumerate() {
            let u = self.u.values(j);
            let fv = f.values(j);
            for k in 1..x.len() - 1 {
                let du = (u[k + 1] - u[k - 1]) / (x[k + 1] - x[k - 1]);
                let r = self.lambda * u[k] + du * *cj - fv[k].to_complex();
                worst = worst.max(r.norm());
            }
        }
        worst
    }
}

/// `u = R(λ, A_K)f`.
pub fn solve_resolvent_transport<T: Value>(
    lambda: Complex64,
    tc: &TransportCoupling,
    f: &NetworkState<T>,
    method: TransportMethod,
) -> Result<TransportSolution> {
    let m = tc.edge_count();
    if f.edge_count() != m {
        return Err(Error::DimensionMismatch(format!(
            "state has {} edges, coupling has {m}",
            f.edge_count()
        )));
    }
    if !lambda.re.is_finite() || !lambda.im.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} is not finite")));
    }
    let grid = f.grid();
    let convs: Vec<_> = (0..m)
        .map(|j| exp_convolutions(lambda / tc.c[j], grid, f.values(j)))
        .collect();
    let last = grid.len() - 1;
    let g_over_c = CVector::from_iterator(m, (0..m).map(|j| convs[j].forward[last] / tc.c[j]));
    let k = linalg::to_complex(&tc.k);
    let ke = &k * e_lambda(lambda, 1.0, &tc.c);
    let rhs = &k * &g_over_c;
    let ke_norm = linalg::norm1(&ke);

    let (v, condition_estimate, iterations) = match method {
        TransportMethod::Direct => {
            let a = CMatrix::identity(m, m) - &ke;
            let sol = linalg::solve(&a, &rhs);
            let condition = sol.inverse_norm * (1.0 + ke_norm);
            if !(condition <= NEAR_SPECTRUM_CONDITION) {
                return Err(Error::NearSpectrum { lambda, condition });
            }
            (sol.x, condition, 0)
        }
        TransportMethod::Neumann => {
            if !(ke_norm < 1.0) {
                return Err(Error::SeriesDiverges { lambda, norm: ke_norm });
            }
            let mut term = rhs.clone();
            let mut sum = rhs;
            let mut n = 1;
            while n < 100_000 {
                term = &ke * term;
                sum += &term;
                n += 1;
                let t = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let s = sum.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if t <= f64::EPSILON * 0.25 * s || t == 0.0 {
                    break;
                }
            }
            (sum, 1.0 / (1.0 - ke_norm), n)
        }
    };

    let nodes = grid.nodes();
    let values: Vec<Vec<Complex64>> = (0..m)
        .map(|j| {
            let mu = lambda / tc.c[j];
            nodes
                .iter()
                .zip(&convs[j].forward)
                .map(|(&x, g)| (-mu * x).exp() * v[j] + g / tc.c[j])
                .collect()
        })
        .collect();
    let u1: Vec<Complex64> = values.iter().map(|u| u[last]).collect();
    let v: Vec<Complex64> = v.iter().copied().collect();
    let mut boundary_residual: f64 = 0.0;
    for i in 0..m {
        let mut r = values[i][0];
        for j in 0..m {
            r -= u1[j] * tc.k[(i, j)];
        }
        boundary_residual = boundary_residual.max(r.norm());
    }
    let u = NetworkState::new(grid.clone(), values).map_err(|_| Error::NearSpectrum {
        lambda,
        condition: f64::INFINITY,
    })?;
    Ok(TransportSolution {
        lambda,
        u,
        v,
        u1,
        condition_estimate,
        boundary_residual,
        iterations,
    })
}

/// `|Σⱼvⱼ − Σⱼκⱼe^{−λ/cⱼ}vⱼ − Σⱼ(κⱼ/cⱼ)gⱼ|` for the direct solve, where
/// `κ` are the column sums of `K`. Zero in exact arithmetic.
pub fn column_sum_identity_check(lambda: f64, tc: &TransportCoupling, f: &NetworkState<f64>) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
    }
    let sol = solve_resolvent_transport(Complex64::new(lambda, 0.0), tc, f, TransportMethod::Direct)?;
    let last = f.grid().len() - 1;
    let kappa = crate::netmodel::kappa_column_sums(tc);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..tc.edge_count() {
        let g = exp_convolutions(Complex64::new(lambda / tc.c[j], 0.0), f.grid(), f.values(j)).forward[last].re;
        let a = kappa[j] * (-lambda / tc.c[j]).exp() * sol.v[j].re;
        let b = kappa[j] / tc.c[j] * g;
        lhs += sol.v[j].re;
        rhs += a + b;
        scale = scale.max(sol.v[j].re.abs()).max(a.abs()).max(b.abs());
    }
    Ok((lhs - rhs).abs() / scale.max(1.0))
}
