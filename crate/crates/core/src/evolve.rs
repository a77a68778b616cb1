//! Time evolution.
//!
//! Diffusion is advanced by backward Euler through the exact resolvent,
//! `uₙ₊₁ = λR(λ, A_Φ)uₙ` with `λ = 1/h`, the result being re-represented
//! as a piecewise-linear state on the grid after every step.
//!
//! Transport is solved along characteristics. The head traces
//! `hⱼ(τ) = uⱼ(1, τ)` satisfy the delay recursion
//!
//! ```text
//! hⱼ(τ) = ůⱼ(1 − cⱼτ)               τ ≤ 1/cⱼ
//! hⱼ(τ) = (K h)ⱼ(τ − 1/cⱼ)          τ > 1/cⱼ
//! ```
//!
//! and for piecewise-linear `ů` every trace is piecewise linear in time,
//! with jumps where the data violate the boundary condition. Traces are
//! stored exactly, so snapshots and observables carry no time
//! discretization error.

use std::io::Write;

use crate::gridfn::{Grid, NetworkState, Value};
use crate::netmodel::{DiffusionCoupling, TransportCoupling};
use crate::{diffres, Complex64, Error, Result};

/// Snapshots of a real state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<NetworkState<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, &NetworkState<f64>)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// One backward Euler step of size `h`: the exact resolvent of the
/// piecewise-linear state, resampled at the nodes.
///
/// Consistent for `h ≳ dx²/σ`. Far below that, a kink at a node moves by
/// `~√(hσ)` per step instead of `~hσ/dx`, so the scheme over-diffuses.
pub fn diffusion_step(state: &NetworkState<f64>, dc: &DiffusionCoupling, h: f64) -> Result<NetworkState<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step h = {h} must be positive")));
    }
    let lambda = 1.0 / h;
    let sol = diffres::solve_resolvent(Complex64::new(lambda, 0.0), dc, state)?;
    Ok(sol.u.re().scale(lambda))
}

/// `((n/t)R(n/t, A_Φ))ⁿu`.
pub fn euler_exponential(state: &NetworkState<f64>, dc: &DiffusionCoupling, t: f64, n: usize) -> Result<NetworkState<f64>> {
    if !(t > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!("need t > 0 and n ≥ 1, got t = {t}, n = {n}")));
    }
    let h = t / n as f64;
    let mut u = state.clone();
    for _ in 0..n {
        u = diffusion_step(&u, dc, h)?;
    }
    Ok(u)
}

/// Backward Euler from `0` to `t_end` in `steps` equal steps, recording
/// every `stride`-th state and always the final one.
pub fn diffusion_evolve(
    u0: &NetworkState<f64>,
    dc: &DiffusionCoupling,
    t_end: f64,
    steps: usize,
    stride: usize,
) -> Result<Trajectory> {
    if !(t_end > 0.0) || steps == 0 || stride == 0 {
        return Err(Error::InvalidArgument(format!(
            "need t_end > 0, steps ≥ 1 and stride ≥ 1, got {t_end}, {steps}, {stride}"
        )));
    }
    let h = t_end / steps as f64;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u0.clone()],
    };
    let mut u = u0.clone();
    for n in 1..=steps {
        u = diffusion_step(&u, dc, h)?;
        if n % stride == 0 || n == steps {
            traj.times.push(if n == steps { t_end } else { n as f64 * h });
            traj.states.push(u.clone());
        }
    }
    Ok(traj)
}

/// Which one-sided limit to take at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Limit {
    Left,
    Right,
}

/// Piecewise-linear function of time with possible jumps at breakpoints.
/// On `(tᵢ, tᵢ₊₁)` it interpolates `right[i]` to `left[i + 1]`.
#[derive(Debug, Clone, PartialEq)]
struct Trace {
    t: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs()))
}

impl Trace {
    fn zero(end: f64) -> Self {
        Trace {
            t: vec![0.0, end],
            left: vec![0.0; 2],
            right: vec![0.0; 2],
        }
    }

    /// Continuous trace through `(tᵢ, vᵢ)`.
    fn continuous(t: Vec<f64>, v: Vec<f64>) -> Self {
        Trace {
            t,
            left: v.clone(),
            right: v,
        }
    }

    fn end(&self) -> f64 {
        *self.t.last().unwrap()
    }

    fn push(&mut self, t: f64, left: f64, right: f64) {
        match self.t.last() {
            Some(&last) if same_time(last, t) => {
                *self.right.last_mut().unwrap() = right;
            }
            _ => {
                self.t.push(t);
                self.left.push(left);
                self.right.push(right);
            }
        }
    }

    fn eval(&self, tau: f64, side: Limit) -> f64 {
        let i = self.t.partition_point(|&s| s < tau);
        for k in [i.wrapping_sub(1), i] {
            if k < self.t.len() && same_time(self.t[k], tau) {
                return match side {
                    Limit::Left => self.left[k],
                    Limit::Right => self.right[k],
                };
            }
        }
        if i == 0 {
            return self.right[0];
        }
        if i >= self.t.len() {
            return *self.left.last().unwrap();
        }
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let w = (tau - t0) / (t1 - t0);
        self.right[i - 1] + w * (self.left[i] - self.right[i - 1])
    }

    /// Restriction to `[0, end]`.
    fn truncate(&mut self, end: f64) {
        if self.end() <= end || same_time(self.end(), end) {
            return;
        }
        let v = self.eval(end, Limit::Left);
        let keep = self.t.partition_point(|&s| s < end && !same_time(s, end));
        self.t.truncate(keep);
        self.left.truncate(keep);
        self.right.truncate(keep);
        self.push(end, v, v);
    }

    /// `Σ aₗ hₗ` on `[0, end]`.
    fn combine(terms: &[(f64, &Trace)], end: f64) -> Trace {
        if terms.is_empty() {
            return Trace::zero(end);
        }
        let mut times: Vec<f64> = terms
            .iter()
            .flat_map(|(_, h)| h.t.iter().copied().filter(|&s| s < end))
            .collect();
        times.push(end);
        times.sort_by(f64::total_cmp);
        let mut out = Trace {
            t: Vec::with_capacity(times.len()),
            left: Vec::with_capacity(times.len()),
            right: Vec::with_capacity(times.len()),
        };
        for s in times {
            if out.t.last().is_some_and(|&l| same_time(l, s)) {
                continue;
            }
            let l: f64 = terms.iter().map(|(a, h)| a * h.eval(s, Limit::Left)).sum();
            let r: f64 = terms.iter().map(|(a, h)| a * h.eval(s, Limit::Right)).sum();
            out.push(s, l, r);
        }
        out
    }

    /// Pieces of the trace over `[a, b]` as `(length, start, end)` values.
    fn pieces(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.t.windows(2).enumerate().filter_map(move |(i, w)| {
            let (lo, hi) = (w[0].max(a), w[1].min(b));
            if hi <= lo {
                return None;
            }
            let (va, vb) = (self.right[i], self.left[i + 1]);
            let at = |s: f64| va + (s - w[0]) / (w[1] - w[0]) * (vb - va);
            Some((hi - lo, at(lo), at(hi)))
        })
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        self.pieces(a, b).map(|(h, u, v)| 0.5 * h * (u + v)).sum()
    }

    fn integral_abs(&self, a: f64, b: f64) -> f64 {
        self.pieces(a, b).map(|(h, u, v)| h * f64::segment_abs_mean(u, v)).sum()
    }

    /// `(min, max)` over `[a, b]`, one-sided limits included.
    fn range(&self, a: f64, b: f64) -> (f64, f64) {
        self.pieces(a, b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, u, v)| {
                (lo.min(u).min(v), hi.max(u).max(v))
            })
    }
}

/// Which one-sided spatial limit a point evaluation takes; see
/// [`TransportFlow::value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `u(x⁻, t)`.
    Minus,
    /// `u(x⁺, t)`.
    Plus,
}

/// Scalar summaries of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub t: f64,
    /// `Σⱼ ∫uⱼ`.
    pub mass: f64,
    pub l1: f64,
    pub sup: f64,
    /// `Σⱼ cⱼ⁻¹∫|uⱼ|`, when speeds are known.
    pub weighted: Option<f64>,
    pub min: f64,
}

/// Exact transport solution on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct TransportFlow {
    grid: Grid,
    c: Vec<f64>,
    k: nalgebra::DMatrix<f64>,
    horizon: f64,
    initial: Vec<Trace>,
    heads: Vec<Trace>,
    tails: Vec<Trace>,
}

impl TransportFlow {
    pub fn new(u0: &NetworkState<f64>, tc: &TransportCoupling, horizon: f64) -> Result<Self> {
        let m = tc.edge_count();
        if u0.edge_count() != m {
            return Err(Error::DimensionMismatch(format!(
                "state has {} edges, coupling has {m}",
                u0.edge_count()
            )));
        }
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon {horizon} must be finite and ≥ 0")));
        }
        let grid = u0.grid().clone();
        let x = grid.nodes();
        let initial: Vec<Trace> = (0..m)
            .map(|j| Trace::continuous(x.to_vec(), u0.values(j).to_vec()))
            .collect();
        let delay: Vec<f64> = tc.c.iter().map(|c| 1.0 / c).collect();

        let build_head = |j: usize, tail: Option<&Trace>| -> Trace {
            let mut h = Trace {
                t: Vec::with_capacity(x.len()),
                left: Vec::with_capacity(x.len()),
                right: Vec::with_capacity(x.len()),
            };
            let v = u0.values(j);
            for p in (0..x.len()).rev() {
                let tau = if p == 0 { delay[j] } else { (1.0 - x[p]) / tc.c[j] };
                h.push(tau, v[p], v[p]);
            }
            if let Some(tail) = tail {
                *h.right.last_mut().unwrap() = tail.eval(0.0, Limit::Right);
                for i in 1..tail.t.len() {
                    h.push(delay[j] + tail.t[i], tail.left[i], tail.right[i]);
                }
            }
            h.truncate(horizon);
            h
        };
        let tails_of = |heads: &[Trace]| -> Vec<Trace> {
            (0..m)
                .map(|i| {
                    let terms: Vec<(f64, &Trace)> = (0..m)
                        .filter(|&l| tc.k[(i, l)] != 0.0)
                        .map(|l| (tc.k[(i, l)], &heads[l]))
                        .collect();
                    let end = terms.iter().map(|(_, h)| h.end()).fold(horizon, f64::min);
                    Trace::combine(&terms, end)
                })
                .collect()
        };

        let mut heads: Vec<Trace> = (0..m).map(|j| build_head(j, None)).collect();
        let reached = |heads: &[Trace]| heads.iter().all(|h| h.end() >= horizon || same_time(h.end(), horizon));
        let mut passes = 0;
        while !reached(&heads) {
            let tails = tails_of(&heads);
            heads = (0..m).map(|j| build_head(j, Some(&tails[j]))).collect();
            passes += 1;
            debug_assert!(passes as f64 <= 2.0 + horizon * tc.c.iter().fold(0.0, |a: f64, &b| a.max(b)));
        }
        let tails = tails_of(&heads);
        Ok(TransportFlow {
            grid,
            c: tc.c.clone(),
            k: tc.k.clone(),
            horizon,
            initial,
            heads,
            tails,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < 0.0 || (t > self.horizon && !same_time(t, self.horizon)) {
            return Err(Error::OutOfDomain(t));
        }
        Ok(())
    }

    /// `uⱼ(x, t)`. At a characteristic carrying a jump the requested
    /// one-sided limit in `x` is returned.
    pub fn value(&self, edge: usize, x: f64, t: f64, side: Side) -> Result<f64> {
        self.check_time(t)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
        let c = self.c[edge];
        let s = x - c * t;
        let from_boundary = match side {
            Side::Minus => s <= 0.0,
            Side::Plus => s < 0.0,
        };
        Ok(if from_boundary {
            let limit = match side {
                Side::Minus => Limit::Right,
                Side::Plus => Limit::Left,
            };
            self.tails[edge].eval((t - x / c).max(0.0), limit)
        } else {
            self.initial[edge].eval(s, Limit::Left)
        })
    }

    /// Nodal snapshot at time `t`: `x = 0` takes the right limit in `x`,
    /// every other node the left limit.
    pub fn state_at(&self, t: f64) -> Result<NetworkState<f64>> {
        self.check_time(t)?;
        let x = self.grid.nodes();
        let values = (0..self.c.len())
            .map(|j| {
                x.iter()
                    .enumerate()
                    .map(|(p, &xp)| self.value(j, xp, t, if p == 0 { Side::Plus } else { Side::Minus }))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        NetworkState::new(self.grid.clone(), values)
    }

    /// Exact observables of the (not necessarily grid-aligned) solution.
    pub fn observables_at(&self, t: f64) -> Result<Observables> {
        self.check_time(t)?;
        let (mut mass, mut l1, mut weighted) = (0.0, 0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..self.c.len() {
            let c = self.c[j];
            let a = (c * t).min(1.0);
            let (mut mj, mut lj) = (0.0, 0.0);
            if a > 0.0 {
                let tau0 = t - a / c;
                mj += c * self.tails[j].integral(tau0, t);
                lj += c * self.tails[j].integral_abs(tau0, t);
                let (l, h) = self.tails[j].range(tau0, t);
                lo = lo.min(l);
                hi = hi.max(h);
            }
            if a < 1.0 {
                let b = 1.0 - a;
                mj += self.initial[j].integral(0.0, b);
                lj += self.initial[j].integral_abs(0.0, b);
                let (l, h) = self.initial[j].range(0.0, b);
                lo = lo.min(l);
                hi = hi.max(h);
            }
            mass += mj;
            l1 += lj;
            weighted += lj / c;
        }
        Ok(Observables {
            t,
            mass,
            l1,
            sup: lo.abs().max(hi.abs()),
            weighted: Some(weighted),
            min: lo,
        })
    }

    /// Head and tail traces sampled on `0 = t₀ < … < t_M = horizon` with
    /// `samples_per_delay` points per shortest delay.
    pub fn history(&self, samples_per_delay: usize) -> BoundaryHistory {
        let min_delay = self.c.iter().map(|c| 1.0 / c).fold(f64::INFINITY, f64::min);
        let dt = min_delay / samples_per_delay.max(1) as f64;
        let count = (self.horizon / dt).ceil() as usize;
        let times: Vec<f64> = (0..=count)
            .map(|i| (i as f64 * dt).min(self.horizon))
            .collect();
        let m = self.c.len();
        let head: Vec<Vec<f64>> = (0..m)
            .map(|j| times.iter().map(|&t| self.heads[j].eval(t, Limit::Right)).collect())
            .collect();
        let tail: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..times.len())
                    .map(|n| (0..m).map(|l| self.k[(i, l)] * head[l][n]).sum())
                    .collect()
            })
            .collect();
        BoundaryHistory { times, head, tail }
    }
}

/// Sampled boundary traces `u(1, ·)` (head) and `u(0, ·)` (tail) per edge,
/// with `tail = K · head` at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryHistory {
    pub times: Vec<f64>,
    pub head: Vec<Vec<f64>>,
    pub tail: Vec<Vec<f64>>,
}

impl BoundaryHistory {
    fn interpolate(&self, series: &[f64], t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s < t);
        if i == 0 {
            return series[0];
        }
        if i >= self.times.len() {
            return *series.last().unwrap();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        series[i - 1] + (t - t0) / (t1 - t0) * (series[i] - series[i - 1])
    }

    pub fn head_at(&self, edge: usize, t: f64) -> f64 {
        self.interpolate(&self.head[edge], t)
    }

    pub fn tail_at(&self, edge: usize, t: f64) -> f64 {
        self.interpolate(&self.tail[edge], t)
    }

    /// `max |tail − K·head|` over samples.
    pub fn boundary_residual(&self, k: &nalgebra::DMatrix<f64>) -> f64 {
        let m = self.head.len();
        let mut worst: f64 = 0.0;
        for n in 0..self.times.len() {
            for i in 0..m {
                let kh: f64 = (0..m).map(|l| k[(i, l)] * self.head[l][n]).sum();
                worst = worst.max((self.tail[i][n] - kh).abs());
            }
        }
        worst
    }
}

/// Result of [`transport_evolve`].
#[derive(Debug, Clone)]
pub struct TransportRun {
    pub trajectory: Trajectory,
    pub observables: Vec<Observables>,
    pub history: BoundaryHistory,
    pub flow: TransportFlow,
}

/// History samples per shortest delay.
pub const HISTORY_SAMPLES_PER_DELAY: usize = 64;

/// Snapshot times `0, dt, 2dt, …` up to and including `t_end`.
pub fn output_times(t_end: f64, dt_out: f64) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || !(dt_out > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need t_end > 0 and dt_out > 0, got {t_end}, {dt_out}"
        )));
    }
    let n = (t_end / dt_out * (1.0 - 1e-12)).ceil() as usize;
    Ok((0..=n).map(|i| (i as f64 * dt_out).min(t_end)).collect())
}

pub fn transport_evolve(
    u0: &NetworkState<f64>,
    tc: &TransportCoupling,
    t_end: f64,
    dt_out: f64,
) -> Result<TransportRun> {
    let times = output_times(t_end, dt_out)?;
    let flow = TransportFlow::new(u0, tc, t_end)?;
    let states = times.iter().map(|&t| flow.state_at(t)).collect::<Result<Vec<_>>>()?;
    let observables = times
        .iter()
        .map(|&t| flow.observables_at(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(TransportRun {
        trajectory: Trajectory { times, states },
        observables,
        history: flow.history(HISTORY_SAMPLES_PER_DELAY),
        flow,
    })
}

/// Observables of the piecewise-linear snapshots.
pub fn observables(traj: &Trajectory, speeds: Option<&[f64]>) -> Vec<Observables> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let n = s.norms(speeds);
            Observables {
                t,
                mass: s.mass(),
                l1: n.l1,
                sup: n.sup,
                weighted: n.weighted,
                min: s.min_value(),
            }
        })
        .collect()
}

/// CSV with header `t,edge,x,value`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,edge,x,value")?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        for j in 0..s.edge_count() {
            for (x, v) in s.grid().nodes().iter().zip(s.values(j)) {
                writeln!(out, "{t},{j},{x},{v}")?;
            }
        }
    }
    Ok(())
}

/// CSV with header `t,mass,l1,sup,weighted,min`; `weighted` is empty when
/// no speeds apply.
pub fn write_observables_csv<W: Write>(obs: &[Observables], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,mass,l1,sup,weighted,min")?;
    for o in obs {
        let w = o.weighted.map(|w| w.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{},{}", o.t, o.mass, o.l1, o.sup, w, o.min)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn single(k: f64, c: f64) -> TransportCoupling {
        TransportCoupling::new(DMatrix::from_element(1, 1, k), vec![c]).unwrap()
    }

    #[test]
    fn constants_are_invariant_under_neumann_diffusion() {
        let g = Grid::uniform(20).unwrap();
        let dc = DiffusionCoupling::neumann(vec![1.0, 0.3]);
        let u = NetworkState::constant(g, 2, 2.5);
        let v = diffusion_step(&u, &dc, 0.01).unwrap();
        assert!(v.max_abs_diff(&u) < 1e-13);
        for n in [1, 3, 10] {
            assert!(euler_exponential(&u, &dc, 0.2, n).unwrap().max_abs_diff(&u) < 1e-12);
        }
    }

    #[test]
    fn cosine_step_matches_eigenvalue() {
        let g = Grid::uniform(400).unwrap();
        let dc = DiffusionCoupling::neumann(vec![1.0]);
        let u = NetworkState::from_fn(g.clone(), 1, |_, x| (PI * x).cos());
        let h = 1e-2;
        let v = diffusion_step(&u, &dc, h).unwrap();
        let exact = u.scale(1.0 / (1.0 + h * PI * PI));
        assert!(v.max_abs_diff(&exact) < 1e-5);
        assert_eq!(euler_exponential(&u, &dc, h, 1).unwrap(), v);
    }

    #[test]
    fn euler_formula_follows_cosine_decay() {
        let g = Grid::uniform(200).unwrap();
        let dc = DiffusionCoupling::neumann(vec![1.0]);
        let u = NetworkState::from_fn(g.clone(), 1, |_, x| (PI * x).cos());
        let t = 0.1;
        let exact = u.scale((-PI * PI * t).exp());
        let v = euler_exponential(&u, &dc, t, 100).unwrap();
        assert!(v.max_abs_diff(&exact) / exact.sup() <= 2e-2);
        let stepped = diffusion_evolve(&u, &dc, t, 100, 100).unwrap();
        assert!(stepped.last().unwrap().1.max_abs_diff(&v) < 1e-12);
    }

    #[test]
    fn trace_limits_and_integrals() {
        let mut tr = Trace::continuous(vec![0.0, 1.0], vec![0.0, 1.0]);
        tr.push(1.0, 1.0, -1.0);
        tr.push(2.0, 1.0, 1.0);
        assert_eq!(tr.eval(1.0, Limit::Left), 1.0);
        assert_eq!(tr.eval(1.0, Limit::Right), -1.0);
        assert_eq!(tr.eval(1.5, Limit::Left), 0.0);
        assert!((tr.integral(0.0, 2.0) - 0.5).abs() < 1e-15);
        assert!((tr.integral_abs(0.0, 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(tr.range(0.5, 2.0), (-1.0, 1.0));
        tr.truncate(1.5);
        assert_eq!(tr.end(), 1.5);
        assert_eq!(tr.eval(1.5, Limit::Left), 0.0);
    }

    #[test]
    fn loop_rotates_back_exactly() {
        let g = Grid::uniform(50).unwrap();
        let u0 = NetworkState::from_fn(g, 1, |_, x| (3.0 * x).sin() + x * x);
        let run = transport_evolve(&u0, &single(1.0, 1.0), 1.0, 0.25).unwrap();
        let (t, u1) = run.trajectory.last().unwrap();
        assert_eq!(t, 1.0);
        assert!(u1.max_abs_diff(&u0) < 1e-12);
        assert!(run.history.boundary_residual(&DMatrix::from_element(1, 1, 1.0)) < 1e-15);
    }

    #[test]
    fn each_wrap_multiplies_by_k() {
        let g = Grid::uniform(32).unwrap();
        let u0 = NetworkState::from_fn(g, 1, |_, x| 1.0 + x);
        let flow = TransportFlow::new(&u0, &single(0.5, 1.0), 3.0).unwrap();
        for n in 1..=3 {
            let u = flow.state_at(n as f64).unwrap();
            assert!(u.max_abs_diff(&u0.scale(0.5f64.powi(n))) < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_empties_the_edge() {
        let g = Grid::uniform(10).unwrap();
        let u0 = NetworkState::constant(g, 1, 1.0);
        let flow = TransportFlow::new(&u0, &single(0.0, 2.0), 1.0).unwrap();
        let o = flow.observables_at(0.25).unwrap();
        assert!((o.mass - 0.5).abs() < 1e-15);
        assert_eq!(o.min, 0.0);
        assert!(flow.state_at(0.5).unwrap().sup() == 0.0);
    }

    #[test]
    fn exact_observables_match_refined_sampling() {
        let g = Grid::uniform(8).unwrap();
        let k = DMatrix::from_row_slice(2, 2, &[0.2, -0.9, 0.7, 0.1]);
        let tc = TransportCoupling::new(k, vec![1.0, 1.7]).unwrap();
        let u0 = NetworkState::from_fn(g, 2, |j, x| (x - 0.3 * j as f64).sin());
        let flow = TransportFlow::new(&u0, &tc, 2.0).unwrap();
        let fine = Grid::uniform(20_000).unwrap();
        for t in [0.3, 1.1, 2.0] {
            let o = flow.observables_at(t).unwrap();
            let values: Vec<Vec<f64>> = (0..2)
                .map(|j| fine.nodes().iter().map(|&x| flow.value(j, x, t, Side::Minus).unwrap()).collect())
                .collect();
            let sampled = NetworkState::new(fine.clone(), values).unwrap();
            assert!((o.mass - sampled.mass()).abs() < 1e-3, "{t}");
            assert!((o.l1 - sampled.l1()).abs() < 1e-3, "{t}");
        }
    }
}
