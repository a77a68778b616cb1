//! Positivity of the diffusion and transport semigroups, with explicit
//! witnesses of failure.
//!
//! Diffusion is positive iff every off-diagonal entry of
//! `Ξ = (−K⁰⁰, −K⁰¹; K¹⁰, K¹¹)` is nonnegative. When one is not, a smooth
//! nonnegative `u` in the operator domain is built that vanishes at a
//! boundary point where `∂ₓₓu < 0`, breaking the positive minimum
//! principle. Transport is positive iff `K ≥ 0`; a negative `kᵢⱼ` sends a
//! nonnegative bump on edge `j` into negative values on edge `i`.

use serde::Serialize;

use crate::gridfn::{Grid, NetworkState};
use crate::netmodel::{DiffusionCoupling, TransportCoupling};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Block {
    #[serde(rename = "00")]
    B00,
    #[serde(rename = "01")]
    B01,
    #[serde(rename = "10")]
    B10,
    #[serde(rename = "11")]
    B11,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::B00, Block::B01, Block::B10, Block::B11];

    /// `(r, s)`.
    pub fn indices(self) -> (usize, usize) {
        match self {
            Block::B00 => (0, 0),
            Block::B01 => (0, 1),
            Block::B10 => (1, 0),
            Block::B11 => (1, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    NonNegative,
    NonPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Coupling block; absent for transport.
    pub block: Option<Block>,
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub required: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityVerdict {
    pub positive: bool,
    pub violations: Vec<Violation>,
}

impl PositivityVerdict {
    fn from_violations(violations: Vec<Violation>) -> Self {
        PositivityVerdict {
            positive: violations.is_empty(),
            violations,
        }
    }
}

/// Row-major over blocks `00, 01, 10, 11`.
pub fn check_diffusion_positivity(dc: &DiffusionCoupling) -> PositivityVerdict {
    let m = dc.edge_count();
    let mut violations = Vec::new();
    for block in Block::ALL {
        let (r, s) = block.indices();
        let k = dc.block(r, s);
        let sign = if r == 0 { -1.0 } else { 1.0 };
        for i in 0..m {
            for j in 0..m {
                if r == s && i == j {
                    continue;
                }
                if sign * k[(i, j)] < 0.0 {
                    violations.push(Violation {
                        block: Some(block),
                        i,
                        j,
                        value: k[(i, j)],
                        required: if r == 0 { Sign::NonPositive } else { Sign::NonNegative },
                    });
                }
            }
        }
    }
    PositivityVerdict::from_violations(violations)
}

pub fn check_transport_positivity(tc: &TransportCoupling) -> PositivityVerdict {
    let m = tc.edge_count();
    let violations = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| tc.k[(i, j)] < 0.0)
        .map(|(i, j)| Violation {
            block: None,
            i,
            j,
            value: tc.k[(i, j)],
            required: Sign::NonNegative,
        })
        .collect();
    PositivityVerdict::from_violations(violations)
}

/// `g(t) = e^{−1/t}` for `t > 0`, with its first two derivatives.
fn g3(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let g = (-1.0 / t).exp();
    let t2 = t * t;
    (g, g / t2, g * (1.0 / (t2 * t2) - 2.0 / (t2 * t)))
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, with derivatives.
fn step3(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (g, g1, g2) = g3(t);
    let (h, h1, h2) = g3(1.0 - t);
    // d/dt h(1 − t) = −h′, d²/dt² = h″
    let s = g + h;
    let s1 = g1 - h1;
    let s2 = g2 + h2;
    let num1 = g1 * s - g * s1;
    let d1 = num1 / (s * s);
    let d2 = (g2 * s - g * s2) / (s * s) - 2.0 * s1 * num1 / (s * s * s);
    (g / s, d1, d2)
}

/// Plateau bump: 1 on `[−a, a]`, 0 outside `[−2a, 2a]`, `C^∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub a: f64,
}

impl Bump {
    /// `(φ, φ′, φ″)` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let (p, d1, d2) = step3((2.0 * self.a - x.abs()) / self.a);
        let sgn = if x < 0.0 { 1.0 } else { -1.0 };
        (p, sgn * d1 / self.a, d2 / (self.a * self.a))
    }
}

/// Recomputed evidence that the positive minimum principle fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub edge: usize,
    /// Endpoint coordinate of the zero minimum, `0` or `1`.
    pub x0: f64,
    pub u_x0: f64,
    pub d2u: f64,
    /// `min u` over the dense verification sample.
    pub min_sampled: f64,
    pub samples: usize,
    pub boundary_residual: f64,
}

impl Certificate {
    pub fn verifies(&self) -> bool {
        self.min_sampled >= 0.0 && self.u_x0 == 0.0 && self.d2u < 0.0 && self.boundary_residual <= 1e-10
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessSpec {
    pub violation: Violation,
    /// `α⁰`, boundary values at `x = 0`.
    pub alpha0: Vec<f64>,
    /// `α¹`, boundary values at `x = 1`.
    pub alpha1: Vec<f64>,
    /// `β = Ξα` split by endpoint.
    pub beta0: Vec<f64>,
    pub beta1: Vec<f64>,
    pub delta: f64,
    pub bump: Bump,
    pub certificate: Certificate,
}

impl WitnessSpec {
    /// `(u, ∂ₓu, ∂ₓₓu)` of the witness on `edge` at `x`.
    pub fn eval(&self, edge: usize, x: f64) -> (f64, f64, f64) {
        let parab = |alpha: f64, beta: f64| {
            (beta * x * (x - 1.0) + alpha, beta * (2.0 * x - 1.0), 2.0 * beta)
        };
        let (f0, f0d, f0dd) = parab(self.alpha0[edge], self.beta0[edge]);
        let (f1, f1d, f1dd) = parab(self.alpha1[edge], self.beta1[edge]);
        let (p, pd, pdd) = self.bump.eval(x);
        let (q, qd, qdd) = self.bump.eval(1.0 - x);
        // φ(1 − x): derivative flips sign once
        let (q, qd, qdd) = (q, -qd, qdd);
        (
            p * f0 + q * f1,
            pd * f0 + p * f0d + qd * f1 + q * f1d,
            pdd * f0 + 2.0 * pd * f0d + p * f0dd + qdd * f1 + 2.0 * qd * f1d + q * f1dd,
        )
    }
}

/// Distance from the endpoint to the first root of `α + βx(x − 1)` on the
/// half-edge, or `1/2` if there is none.
fn nonnegative_reach(alpha: f64, beta: f64) -> f64 {
    if beta <= 0.0 || 4.0 * alpha >= beta {
        return 0.5;
    }
    // α − βx(1 − x) = 0 ⇒ x = (1 − √(1 − 4α/β))/2, written without cancellation
    let q = 1.0 - 4.0 * alpha / beta;
    2.0 * alpha / beta / (1.0 + q.sqrt())
}

/// Builds the minimum-principle counterexample for the first violation and
/// samples it on `grid`.
pub fn diffusion_pmp_witness(dc: &DiffusionCoupling, grid: &Grid) -> Result<(NetworkState<f64>, WitnessSpec)> {
    let verdict = check_diffusion_positivity(dc);
    let violation = verdict.violations.first().cloned().ok_or(Error::NotViolating)?;
    let m = dc.edge_count();
    let (r, s) = violation.block.expect("diffusion violation has a block").indices();
    let (i, j) = (violation.i, violation.j);

    let xi_row = |rr: usize, row: usize, a0: &[f64], a1: &[f64]| -> f64 {
        let sign = if rr == 0 { -1.0 } else { 1.0 };
        let (ka, kb) = (dc.block(rr, 0), dc.block(rr, 1));
        sign * (0..m).map(|l| ka[(row, l)] * a0[l] + kb[(row, l)] * a1[l]).sum::<f64>()
    };
    let alpha_for = |delta: f64| -> [Vec<f64>; 2] {
        let mut a = [vec![delta; m], vec![delta; m]];
        a[s][j] = 1.0;
        a[r][i] = 0.0;
        a
    };

    let mut delta = 1.0;
    let alpha = loop {
        let a = alpha_for(delta);
        if xi_row(r, i, &a[0], &a[1]) < 0.0 {
            break a;
        }
        delta *= 0.5;
        if delta < 1e-300 {
            return Err(Error::NoConvergence(crate::Complex64::new(delta, 0.0)));
        }
    };
    let beta0: Vec<f64> = (0..m).map(|l| xi_row(0, l, &alpha[0], &alpha[1])).collect();
    let beta1: Vec<f64> = (0..m).map(|l| xi_row(1, l, &alpha[0], &alpha[1])).collect();

    let reach = (0..m)
        .flat_map(|l| [nonnegative_reach(alpha[0][l], beta0[l]), nonnegative_reach(alpha[1][l], beta1[l])])
        .fold(0.5, f64::min);
    let bump = Bump {
        a: (0.125f64).min(0.45 * reach),
    };

    let [alpha0, alpha1] = alpha;
    let mut spec = WitnessSpec {
        violation,
        alpha0,
        alpha1,
        beta0,
        beta1,
        delta,
        bump,
        certificate: Certificate {
            edge: i,
            x0: r as f64,
            u_x0: f64::NAN,
            d2u: f64::NAN,
            min_sampled: f64::NAN,
            samples: 0,
            boundary_residual: f64::NAN,
        },
    };

    let dense = grid.refine(16).with_points(&[bump.a, 2.0 * bump.a, 1.0 - bump.a, 1.0 - 2.0 * bump.a]);
    let mut min_sampled = f64::INFINITY;
    for l in 0..m {
        for &x in dense.nodes() {
            min_sampled = min_sampled.min(spec.eval(l, x).0);
        }
    }
    let (u_x0, _, d2u) = spec.eval(i, r as f64);
    let ends: Vec<[(f64, f64); 2]> = (0..m)
        .map(|l| {
            let (u0, d0, _) = spec.eval(l, 0.0);
            let (u1, d1, _) = spec.eval(l, 1.0);
            [(u0, d0), (u1, d1)]
        })
        .collect();
    let mut residual: f64 = 0.0;
    for l in 0..m {
        for (end, (ka, kb)) in [(dc.block(0, 0), dc.block(0, 1)), (dc.block(1, 0), dc.block(1, 1))]
            .into_iter()
            .enumerate()
        {
            let rhs: f64 = (0..m).map(|p| ka[(l, p)] * ends[p][0].0 + kb[(l, p)] * ends[p][1].0).sum();
            residual = residual.max((ends[l][end].1 - rhs).abs());
        }
    }
    spec.certificate = Certificate {
        edge: i,
        x0: r as f64,
        u_x0,
        d2u,
        min_sampled,
        samples: dense.len() * m,
        boundary_residual: residual,
    };
    let state = NetworkState::from_fn(grid.clone(), m, |l, x| spec.eval(l, x).0);
    Ok((state, spec))
}

/// Initial data and closed-form prediction showing a transport solution
/// turning negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportWitness {
    /// Edge where negative values appear.
    pub target: usize,
    /// Edge carrying the bump `x(1 − x)`.
    pub source: usize,
    pub k: f64,
    pub c_target: f64,
    pub c_source: f64,
    /// Shortest delay `minₗ 1/cₗ`; the prediction holds while
    /// `0 ≤ t − x/c_target ≤ window`.
    pub window: f64,
}

impl TransportWitness {
    pub fn bump(x: f64) -> f64 {
        x * (1.0 - x)
    }

    /// `k f(1 + c_s x/c_t − c_s t)` where the closed form applies.
    pub fn predict(&self, x: f64, t: f64) -> Option<f64> {
        let tau = t - x / self.c_target;
        let slack = 1e-12 * (1.0 + t.abs());
        if !(0.0..=1.0).contains(&x) || tau < -slack || tau > self.window + slack {
            return None;
        }
        let s = 1.0 + self.c_source * x / self.c_target - self.c_source * t;
        Some(self.k * Self::bump(s.clamp(0.0, 1.0)))
    }
}

/// Witness for the first negative entry `kᵢⱼ` in row-major order.
pub fn transport_negativity_witness(tc: &TransportCoupling, grid: &Grid) -> Result<(NetworkState<f64>, TransportWitness)> {
    let verdict = check_transport_positivity(tc);
    let v = verdict.violations.first().ok_or(Error::NotViolating)?;
    let window = tc.c.iter().map(|c| 1.0 / c).fold(f64::INFINITY, f64::min);
    let w = TransportWitness {
        target: v.i,
        source: v.j,
        k: v.value,
        c_target: tc.c[v.i],
        c_source: tc.c[v.j],
        window,
    };
    let state = NetworkState::from_fn(grid.clone(), tc.edge_count(), |l, x| {
        if l == v.j {
            TransportWitness::bump(x)
        } else {
            0.0
        }
    });
    Ok((state, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn verdict_examples() {
        let dc = DiffusionCoupling::neumann(vec![1.0, 1.0]);
        assert!(check_diffusion_positivity(&dc).positive);
        let mut bad = dc.clone();
        bad.k01[(0, 1)] = 0.5;
        let v = check_diffusion_positivity(&bad);
        assert!(!v.positive);
        assert_eq!(v.violations[0].block, Some(Block::B01));
        assert_eq!((v.violations[0].i, v.violations[0].j), (0, 1));

        let tc = TransportCoupling::new(DMatrix::from_row_slice(2, 2, &[0.0, -0.1, 1.0, 0.0]), vec![1.0; 2]).unwrap();
        let v = check_transport_positivity(&tc);
        assert_eq!(v.violations.len(), 1);
        assert_eq!((v.violations[0].i, v.violations[0].j), (0, 1));
        assert!(check_transport_positivity(&tc.modulus()).positive);
    }

    #[test]
    fn diagonal_entries_of_diagonal_blocks_are_free() {
        let mut dc = DiffusionCoupling::neumann(vec![1.0]);
        dc.k00[(0, 0)] = 3.0;
        dc.k11[(0, 0)] = -3.0;
        assert!(check_diffusion_positivity(&dc).positive);
        assert_eq!(
            diffusion_pmp_witness(&dc, &Grid::uniform(8).unwrap()).unwrap_err(),
            Error::NotViolating
        );
    }

    #[test]
    fn bump_shape_and_derivatives() {
        let b = Bump { a: 0.1 };
        assert_eq!(b.eval(0.05), (1.0, 0.0, 0.0));
        assert_eq!(b.eval(0.25), (0.0, 0.0, 0.0));
        let h = 1e-5;
        for x in [0.12, 0.15, 0.19, -0.13] {
            let (p, d1, d2) = b.eval(x);
            let fd1 = (b.eval(x + h).0 - b.eval(x - h).0) / (2.0 * h);
            let fd2 = (b.eval(x + h).0 - 2.0 * p + b.eval(x - h).0) / (h * h);
            assert!((d1 - fd1).abs() < 1e-5 * (1.0 + d1.abs()), "{x}");
            assert!((d2 - fd2).abs() < 1e-3 * (1.0 + d2.abs()), "{x}");
        }
    }

    #[test]
    fn cross_block_witness() {
        let mut dc = DiffusionCoupling::neumann(vec![1.0, 1.0]);
        dc.k10[(0, 1)] = -1.0;
        let (state, w) = diffusion_pmp_witness(&dc, &Grid::uniform(64).unwrap()).unwrap();
        assert_eq!(w.alpha0[1], 1.0);
        assert_eq!(w.alpha1[0], 0.0);
        assert!(w.certificate.verifies(), "{:?}", w.certificate);
        assert_eq!(w.certificate.d2u, 2.0 * w.beta1[0]);
        assert!(state.min_value() >= 0.0);
    }

    #[test]
    fn witness_repairs_small_reach() {
        // β = 40 at the endpoint with α = 1 puts a root near x = 0.026.
        let mut dc = DiffusionCoupling::neumann(vec![1.0, 1.0]);
        dc.k00 = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.0, -40.0]);
        let (_, w) = diffusion_pmp_witness(&dc, &Grid::uniform(64).unwrap()).unwrap();
        assert_eq!(w.beta0[1], 40.0);
        assert!(w.bump.a < 0.0125);
        assert!(w.certificate.verifies(), "{:?}", w);
        let fixed = WitnessSpec { bump: Bump { a: 0.125 }, ..w };
        assert!(fixed.eval(1, 0.1).0 < 0.0);
    }

    #[test]
    fn transport_witness_prediction() {
        let tc = TransportCoupling::new(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.0, 0.0]), vec![1.0; 2]).unwrap();
        let (state, w) = transport_negativity_witness(&tc, &Grid::uniform(10).unwrap()).unwrap();
        assert_eq!((w.target, w.source), (0, 1));
        assert_eq!(state.values(0).iter().copied().fold(0.0, f64::max), 0.0);
        let (x, t) = (0.2, 0.5);
        let p = w.predict(x, t).unwrap();
        assert!((p + (1.0 + x - t) * (t - x)).abs() < 1e-15);
        assert!(p < 0.0);
        assert!(w.predict(0.6, 0.5).is_none());
        let ok = TransportCoupling::new(DMatrix::from_element(1, 1, 1.0), vec![1.0]).unwrap();
        assert_eq!(
            transport_negativity_witness(&ok, &Grid::uniform(4).unwrap()).unwrap_err(),
            Error::NotViolating
        );
    }
}
