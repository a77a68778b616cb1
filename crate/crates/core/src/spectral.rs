//! Characteristic determinants and complex root localization.
//!
//! Eigenvalues of either model are the zeros of an analytic determinant:
//! `det(I − KE_λ(1))` for transport and the determinant of the boundary
//! system in the unknowns `(C₁, D₂)` for diffusion. Zeros are seeded by a
//! cell scan (phase winding plus local minima of `|h|`) and polished by
//! Newton's method with a central-difference derivative.

use crate::diffres::{boundary_matrix, mu_from_lambda};
use crate::linalg::{self, CMatrix};
use crate::netmodel::{DiffusionCoupling, TransportCoupling};
use crate::transres::e_lambda;
use crate::{Complex64, Error, Result};

pub fn char_det_transport(lambda: Complex64, tc: &TransportCoupling) -> Complex64 {
    let m = tc.edge_count();
    let ke = linalg::to_complex(&tc.k) * e_lambda(lambda, 1.0, &tc.c);
    linalg::determinant(&(CMatrix::identity(m, m) - ke))
}

/// Determinant of the homogeneous boundary system; defined off the cut
/// `(−∞, 0]`.
pub fn char_det_diffusion(lambda: Complex64, dc: &DiffusionCoupling) -> Result<Complex64> {
    let mu = dc
        .sigma
        .iter()
        .map(|&s| mu_from_lambda(lambda, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(linalg::determinant(&boundary_matrix(&mu, dc)))
}

/// Closed rectangle `[re0, re1] × [im0, im1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Region {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Result<Self> {
        let ok = [re0, re1, im0, im1].iter().all(|v| v.is_finite()) && re0 <= re1 && im0 <= im1;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "region [{re0}, {re1}] × [{im0}, {im1}] must be bounded and ordered"
            )));
        }
        Ok(Region { re0, re1, im0, im1 })
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re0 - slack && z.re <= self.re1 + slack && z.im >= self.im0 - slack && z.im <= self.im1 + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub lambda: Complex64,
    /// `|h(λ)|` at the returned point.
    pub residual: f64,
    /// Winding number of `h` on a small circle around the root.
    pub multiplicity_hint: usize,
}

/// Roots closer than this are merged.
pub const CLUSTER_TOL: f64 = 1e-6;

fn wrapped_phase(a: Complex64, b: Complex64) -> f64 {
    let d = b.arg() - a.arg();
    d - (2.0 * std::f64::consts::PI) * ((d + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)).floor()
}

/// Winding number of `h` along the closed polygon `pts`; `None` when `h`
/// is undefined or vanishes on it.
fn winding(h: &impl Fn(Complex64) -> Result<Complex64>, pts: &[Complex64]) -> Option<i64> {
    let vals = pts.iter().map(|&z| h(z).ok()).collect::<Option<Vec<_>>>()?;
    if vals.iter().any(|v| v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite()) {
        return None;
    }
    let total: f64 = (0..vals.len())
        .map(|k| wrapped_phase(vals[k], vals[(k + 1) % vals.len()]))
        .sum();
    Some((total / (2.0 * std::f64::consts::PI)).round() as i64)
}

fn newton(h: &impl Fn(Complex64) -> Result<Complex64>, mut z: Complex64) -> Result<Complex64> {
    for _ in 0..100 {
        let hz = h(z)?;
        if hz.norm() == 0.0 {
            return Ok(z);
        }
        let step = 1e-6 * (1.0 + z.norm());
        let d = (h(z + step)? - h(z - step)?) / (2.0 * step);
        if d.norm() == 0.0 || !d.re.is_finite() {
            return Err(Error::NoConvergence(z));
        }
        let dz = hz / d;
        z -= dz;
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NoConvergence(z));
        }
        if dz.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    Err(Error::NoConvergence(z))
}

/// Zeros of `h` in `region`. Seeds failing to converge, leaving the region
/// or ending with `|h| > tol` are dropped. Sorted by real then imaginary
/// part.
pub fn find_roots(
    h: impl Fn(Complex64) -> Result<Complex64>,
    region: Region,
    grid_step: f64,
    tol: f64,
) -> Result<Vec<Root>> {
    if !(grid_step > 0.0) {
        return Err(Error::InvalidArgument(format!("grid_step = {grid_step} must be positive")));
    }
    let nx = (((region.re1 - region.re0) / grid_step).ceil() as usize).max(1);
    let ny = (((region.im1 - region.im0) / grid_step).ceil() as usize).max(1);
    let (dx, dy) = ((region.re1 - region.re0) / nx as f64, (region.im1 - region.im0) / ny as f64);
    let at = |p: usize, q: usize| Complex64::new(region.re0 + p as f64 * dx, region.im0 + q as f64 * dy);
    let vals: Vec<Vec<Option<f64>>> = (0..=nx)
        .map(|p| (0..=ny).map(|q| h(at(p, q)).ok().map(|v| v.norm())).collect())
        .collect();

    let mut seeds = Vec::new();
    for p in 0..nx {
        for q in 0..ny {
            let corners = [at(p, q), at(p + 1, q), at(p + 1, q + 1), at(p, q + 1)];
            if winding(&h, &corners).is_some_and(|w| w != 0) {
                seeds.push((corners[0] + corners[2]) * 0.5);
            }
        }
    }
    for p in 0..=nx {
        for q in 0..=ny {
            let Some(v) = vals[p][q] else { continue };
            let mut minimum = true;
            for (a, b) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (-1, 1), (1, -1)] {
                let (pp, qq) = (p as i64 + a, q as i64 + b);
                if pp < 0 || qq < 0 || pp > nx as i64 || qq > ny as i64 {
                    continue;
                }
                if vals[pp as usize][qq as usize].is_some_and(|w| w < v) {
                    minimum = false;
                    break;
                }
            }
            if minimum {
                seeds.push(at(p, q));
            }
        }
    }

    let slack = 1e-9 * (1.0 + region.re0.abs().max(region.re1.abs()).max(region.im0.abs()).max(region.im1.abs()));
    let mut roots: Vec<Root> = Vec::new();
    for seed in seeds {
        let Ok(z) = newton(&h, seed) else { continue };
        let Ok(hz) = h(z) else { continue };
        if hz.norm() > tol || !region.contains(z, slack) {
            continue;
        }
        match roots.iter_mut().find(|r| (r.lambda - z).norm() <= CLUSTER_TOL) {
            Some(r) if hz.norm() < r.residual => {
                r.lambda = z;
                r.residual = hz.norm();
            }
            Some(_) => {}
            None => roots.push(Root {
                lambda: z,
                residual: hz.norm(),
                multiplicity_hint: 1,
            }),
        }
    }
    for r in &mut roots {
        let radius = (0.25 * grid_step).min(1e-3 * (1.0 + r.lambda.norm()));
        let circle: Vec<Complex64> = (0..64)
            .map(|k| r.lambda + Complex64::from_polar(radius, k as f64 * std::f64::consts::TAU / 64.0))
            .collect();
        r.multiplicity_hint = winding(&h, &circle).map_or(1, |w| w.unsigned_abs().max(1) as usize);
    }
    roots.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    Ok(roots)
}

/// CSV with header `re,im,residual`.
pub fn write_roots_csv<W: std::io::Write>(roots: &[Root], mut out: W) -> std::io::Result<()> {
    writeln!(out, "re,im,residual")?;
    for r in roots {
        writeln!(out, "{},{},{}", r.lambda.re, r.lambda.im, r.residual)?;
    }
    Ok(())
}
