#![allow(dead_code)]

use nalgebra::DMatrix;
use netsemi::gridfn::{Grid, NetworkState};
use netsemi::netmodel::{DiffusionCoupling, TransportCoupling};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn matrix(rng: &mut impl Rng, m: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |_, _| rng.gen_range(lo..hi))
}

/// Nodal values drawn uniformly from `[lo, hi)`.
pub fn rough_state(rng: &mut impl Rng, grid: &Grid, m: usize, lo: f64, hi: f64) -> NetworkState<f64> {
    let values = (0..m)
        .map(|_| (0..grid.len()).map(|_| rng.gen_range(lo..hi)).collect())
        .collect();
    NetworkState::new(grid.clone(), values).unwrap()
}

/// A few random Fourier modes per edge, sampled on the grid.
pub fn smooth_state(rng: &mut impl Rng, grid: &Grid, m: usize) -> NetworkState<f64> {
    let modes: Vec<Vec<(f64, f64, f64)>> = (0..m)
        .map(|_| {
            (0..4)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.3)))
                .collect()
        })
        .collect();
    NetworkState::from_fn(grid.clone(), m, |j, x| {
        modes[j].iter().map(|(a, w, p)| a * (w * x + p).sin()).sum()
    })
}

/// Nonnegative smooth data.
pub fn smooth_nonnegative(rng: &mut impl Rng, grid: &Grid, m: usize) -> NetworkState<f64> {
    smooth_state(rng, grid, m).map(f64::abs)
}

pub fn sigmas(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(0.5..2.0)).collect()
}

/// Entries uniform in `[−scale, scale)`.
pub fn random_coupling(rng: &mut impl Rng, m: usize, scale: f64, sigma: Vec<f64>) -> DiffusionCoupling {
    DiffusionCoupling::new(
        matrix(rng, m, -scale, scale),
        matrix(rng, m, -scale, scale),
        matrix(rng, m, -scale, scale),
        matrix(rng, m, -scale, scale),
        sigma,
    )
    .unwrap()
}

/// Off-diagonal entries of `(−K⁰⁰, −K⁰¹; K¹⁰, K¹¹)` nonnegative; diagonals free.
pub fn positive_coupling(rng: &mut impl Rng, m: usize, scale: f64, sigma: Vec<f64>) -> DiffusionCoupling {
    let mut k00 = matrix(rng, m, -scale, 0.0);
    let k01 = matrix(rng, m, -scale, 0.0);
    let k10 = matrix(rng, m, 0.0, scale);
    let mut k11 = matrix(rng, m, 0.0, scale);
    for i in 0..m {
        k00[(i, i)] = rng.gen_range(-scale..scale);
        k11[(i, i)] = rng.gen_range(-scale..scale);
    }
    DiffusionCoupling::new(k00, k01, k10, k11, sigma).unwrap()
}

/// A positive coupling with one off-diagonal sign flipped.
pub fn violating_coupling(rng: &mut impl Rng, m: usize, scale: f64, sigma: Vec<f64>) -> DiffusionCoupling {
    let mut dc = positive_coupling(rng, m, scale, sigma);
    loop {
        let block = rng.gen_range(0..4);
        let (i, j) = (rng.gen_range(0..m), rng.gen_range(0..m));
        if (block == 0 || block == 3) && i == j {
            continue;
        }
        let v = rng.gen_range(0.1..scale.max(0.2));
        match block {
            0 => dc.k00[(i, j)] = v,
            1 => dc.k01[(i, j)] = v,
            2 => dc.k10[(i, j)] = -v,
            _ => dc.k11[(i, j)] = -v,
        }
        return dc;
    }
}

pub fn speeds(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(0.5..2.0)).collect()
}

pub fn transport(k: DMatrix<f64>, c: Vec<f64>) -> TransportCoupling {
    TransportCoupling::new(k, c).unwrap()
}

/// Nonnegative with unit column sums.
pub fn column_stochastic(rng: &mut impl Rng, m: usize) -> DMatrix<f64> {
    let mut k = matrix(rng, m, 0.0, 1.0);
    for j in 0..m {
        let s: f64 = k.column(j).sum();
        for i in 0..m {
            k[(i, j)] /= s;
        }
    }
    k
}

/// Random `λ` with `|arg λ| ≤ θ` and `log₁₀|λ|` uniform in `[a, b]`.
pub fn sector_point(rng: &mut impl Rng, theta: f64, a: f64, b: f64) -> netsemi::Complex64 {
    let r = 10f64.powf(rng.gen_range(a..b));
    netsemi::Complex64::from_polar(r, rng.gen_range(-theta..=theta))
}
