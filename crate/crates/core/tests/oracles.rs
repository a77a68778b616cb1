//! Library results against closed forms and quadrature written here,
//! independently of the library's own formulas.

mod common;

use common::*;
use nalgebra::DMatrix;
use netsemi::diffres::{scalar_oracle, solve_resolvent, ScalarBoundary};
use netsemi::gridfn::{kernel_integral_u, Grid, NetworkState, PlFunction};
use netsemi::netmodel::DiffusionCoupling;
use netsemi::transres::{solve_resolvent_transport, TransportMethod};
use netsemi::Complex64;
use rand::Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Five-point Gauss–Legendre on `[a, b]`.
fn gauss5(a: f64, b: f64, g: impl Fn(f64) -> Complex64) -> Complex64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    X.iter().zip(W).map(|(x, w)| g(mid + half * x) * (w * half)).sum()
}

/// `(1/(2μσ))∫₀¹ e^{−μ|x−s|} f(s) ds` by composite Gauss on pieces that
/// split at the grid nodes and at `x`.
fn kernel_by_quadrature(mu: Complex64, sigma: f64, f: &PlFunction<f64>, x: f64, pieces: usize) -> Complex64 {
    let nodes = f.grid.nodes();
    let mut breaks: Vec<f64> = nodes.to_vec();
    breaks.push(x);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = c(0.0, 0.0);
    for w in breaks.windows(2) {
        let h = (w[1] - w[0]) / pieces as f64;
        for p in 0..pieces {
            let (a, b) = (w[0] + p as f64 * h, w[0] + (p + 1) as f64 * h);
            total += gauss5(a, b, |s| (-mu * (x - s).abs()).exp() * f.eval(s).unwrap());
        }
    }
    total / (2.0 * mu * sigma)
}

#[test]
fn kernel_integral_matches_quadrature() {
    let mut rng = rng(101);
    for _ in 0..20 {
        let grid = Grid::uniform(rng.gen_range(3..12)).unwrap();
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = PlFunction::new(grid.clone(), values).unwrap();
        let mu = c(rng.gen_range(0.05..30.0), rng.gen_range(-30.0..30.0));
        let sigma = rng.gen_range(0.5..2.0);
        let k = kernel_integral_u(mu, sigma, &f).unwrap();
        for (x, u) in grid.nodes().iter().zip(&k.values) {
            let q = kernel_by_quadrature(mu, sigma, &f, *x, 8);
            assert!((u - q).norm() <= 1e-11 * (1.0 + q.norm()), "mu = {mu}, x = {x}: {u} vs {q}");
        }
    }
}

/// `U` for `f(s) = a + bs`, integrated by hand.
fn kernel_of_linear(mu: Complex64, sigma: f64, a: f64, b: f64, x: f64) -> Complex64 {
    let fx = a + b * x;
    let l = 1.0 - x;
    let (ex, el) = ((-mu * x).exp(), (-mu * l).exp());
    let left = fx * (1.0 - ex) / mu - b * (1.0 - ex * (1.0 + mu * x)) / (mu * mu);
    let right = fx * (1.0 - el) / mu + b * (1.0 - el * (1.0 + mu * l)) / (mu * mu);
    (left + right) / (2.0 * mu * sigma)
}

#[test]
fn kernel_integral_is_exact_on_linear_data() {
    let mut rng = rng(102);
    for _ in 0..50 {
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let grid = Grid::uniform(rng.gen_range(2..9)).unwrap();
        let f = PlFunction::from_fn(grid.clone(), |x| a + b * x);
        let mu = c(rng.gen_range(0.1..10.0), rng.gen_range(-10.0..10.0));
        let sigma = rng.gen_range(0.5..2.0);
        let k = kernel_integral_u(mu, sigma, &f).unwrap();
        for (x, u) in grid.nodes().iter().zip(&k.values) {
            let exact = kernel_of_linear(mu, sigma, a, b, *x);
            assert!((u - exact).norm() <= 1e-13 * exact.norm().max(1e-3), "{u} vs {exact}");
        }
    }
}

/// Single edge, `f = a + bx`, Robin coupling: `u = f/λ + Ae^{μx} + Be^{−μx}`
/// with the two boundary equations solved by Cramer's rule.
fn robin_linear(lambda: Complex64, sigma: f64, k: [f64; 4], a: f64, b: f64, x: f64) -> Complex64 {
    let mu = (lambda / sigma).sqrt();
    let (ep, em) = (mu.exp(), (-mu).exp());
    let p0 = a / lambda;
    let p1 = (a + b) / lambda;
    let dp = b / lambda;
    // u(0) = p0 + A + B, u(1) = p1 + Aeᵘ + Be⁻ᵘ, u′(0) = dp + μ(A − B),
    // u′(1) = dp + μ(Aeᵘ − Be⁻ᵘ)
    let [k00, k01, k10, k11] = k;
    let row = |d0: Complex64, d1: Complex64, kk0: f64, kk1: f64| {
        // u′ − kk0·u(0) − kk1·u(1) = 0 as d0·A + d1·B = rhs
        (d0, d1, -(dp - kk0 * p0 - kk1 * p1))
    };
    let (a11, a12, r1) = row(mu - k00 - k01 * ep, -mu - k00 - k01 * em, k00, k01);
    let (a21, a22, r2) = row(mu * ep - k10 - k11 * ep, -mu * em - k10 - k11 * em, k10, k11);
    let det = a11 * a22 - a12 * a21;
    let big_a = (r1 * a22 - a12 * r2) / det;
    let big_b = (a11 * r2 - r1 * a21) / det;
    (a + b * x) / lambda + big_a * (mu * x).exp() + big_b * (-mu * x).exp()
}

#[test]
fn diffusion_resolvent_matches_robin_closed_form() {
    let mut rng = rng(103);
    for _ in 0..30 {
        let k = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        let sigma = rng.gen_range(0.5..2.0);
        let m1 = |v: f64| DMatrix::from_element(1, 1, v);
        let dc = DiffusionCoupling::new(m1(k[0]), m1(k[1]), m1(k[2]), m1(k[3]), vec![sigma]).unwrap();
        let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let grid = Grid::uniform(8).unwrap();
        let f = NetworkState::from_fn(grid.clone(), 1, |_, x| a + b * x);
        let lambda = sector_point(&mut rng, 1.2, 0.5, 2.0);
        let sol = solve_resolvent(lambda, &dc, &f).unwrap();
        for (x, u) in grid.nodes().iter().zip(sol.u.values(0)) {
            let exact = robin_linear(lambda, sigma, k, a, b, *x);
            assert!((u - exact).norm() <= 1e-11 * (1.0 + exact.norm()), "λ = {lambda}: {u} vs {exact}");
        }
    }
}

#[test]
fn large_robin_coefficients_approach_dirichlet() {
    let grid = Grid::uniform(16).unwrap();
    let f = PlFunction::from_fn(grid.clone(), |x| 1.0 + x * x);
    let state = NetworkState::new(grid.clone(), vec![f.values.clone()]).unwrap();
    let lambda = c(3.0, 1.0);
    let dirichlet = scalar_oracle(lambda, 1.0, &f, ScalarBoundary::Dirichlet).unwrap();
    let mut last = f64::INFINITY;
    for kappa in [1e2, 1e4, 1e6] {
        let m1 = |v: f64| DMatrix::from_element(1, 1, v);
        // u′(0) = κu(0), u′(1) = −κu(1)
        let dc = DiffusionCoupling::new(m1(kappa), m1(0.0), m1(0.0), m1(-kappa), vec![1.0]).unwrap();
        let sol = solve_resolvent(lambda, &dc, &state).unwrap();
        let err = sol
            .u
            .values(0)
            .iter()
            .zip(&dirichlet.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < last * 0.1 || err < 1e-12, "κ = {kappa}: {err} vs {last}");
        last = err;
    }
    assert!(last < 1e-5);
}

#[test]
fn transport_resolvent_matches_closed_form() {
    let mut rng = rng(104);
    for _ in 0..30 {
        let k = rng.gen_range(-2.0..2.0);
        let speed = rng.gen_range(0.5..2.0);
        let lambda = c(rng.gen_range(0.5..5.0), rng.gen_range(-5.0..5.0));
        let tc = transport(DMatrix::from_element(1, 1, k), vec![speed]);
        let grid = Grid::uniform(10).unwrap();
        let f = NetworkState::constant(grid.clone(), 1, 1.0);
        let sol = solve_resolvent_transport(lambda, &tc, &f, TransportMethod::Direct).unwrap();
        // λu + cu′ = 1, u(0) = ku(1)
        let e = (-lambda / speed).exp();
        let amp = (k - 1.0) / (lambda * (1.0 - k * e));
        for (x, u) in grid.nodes().iter().zip(sol.u.values(0)) {
            let exact = 1.0 / lambda + amp * (-lambda * *x / speed).exp();
            assert!((u - exact).norm() <= 1e-12 * (1.0 + exact.norm()), "{u} vs {exact}");
        }
    }
}

#[test]
fn norms_match_dense_riemann_sums() {
    let mut rng = rng(105);
    let grid = Grid::uniform(7).unwrap();
    let s = rough_state(&mut rng, &grid, 3, -1.0, 1.0);
    let samples = 200_000;
    let (mut l1, mut sup) = (0.0, 0.0f64);
    for j in 0..3 {
        for p in 0..samples {
            let x = (p as f64 + 0.5) / samples as f64;
            let v = s.eval(j, x).unwrap();
            l1 += v.abs() / samples as f64;
        }
        for &x in grid.nodes() {
            sup = sup.max(s.eval(j, x).unwrap().abs());
        }
    }
    assert!((s.l1() - l1).abs() <= 1e-6, "{} vs {l1}", s.l1());
    assert_eq!(s.sup(), sup);
}
