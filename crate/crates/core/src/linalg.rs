//! Small dense complex systems: pivoted LU with an exact 1-norm condition
//! number. The boundary systems solved here have size `m` or `2m`, so
//! forming the inverse explicitly is cheaper than anything iterative.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced 1-norm of a real matrix.
pub fn norm1_real(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Result of a dense solve.
#[derive(Debug, Clone)]
pub struct DenseSolve {
    pub x: CVector,
    /// `‖A⁻¹‖₁`, infinite when a pivot vanished.
    pub inverse_norm: f64,
    /// `‖A‖₁‖A⁻¹‖₁`, infinite when a pivot vanished.
    pub condition: f64,
}

/// Solves `a x = b` by LU with partial pivoting and reports the 1-norm
/// condition number. A singular matrix gives `x = 0` and infinite condition.
pub fn solve(a: &CMatrix, b: &CVector) -> DenseSolve {
    let n = a.nrows();
    let lu = a.clone().lu();
    let inverse = lu.try_inverse();
    match (inverse, lu.solve(b)) {
        (Some(inv), Some(x)) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
            let inverse_norm = norm1(&inv);
            let condition = norm1(a) * inverse_norm;
            DenseSolve {
                x,
                inverse_norm,
                condition: if condition.is_finite() { condition } else { f64::INFINITY },
            }
        }
        _ => DenseSolve {
            x: CVector::zeros(n),
            inverse_norm: f64::INFINITY,
            condition: f64::INFINITY,
        },
    }
}

/// Scales every row by the reciprocal of its largest modulus. Returns the
/// scaled matrix and the scale factors so the right-hand side can follow.
pub fn equilibrate_rows(a: &CMatrix) -> (CMatrix, Vec<f64>) {
    let mut scaled = a.clone();
    let mut scales = Vec::with_capacity(a.nrows());
    for i in 0..a.nrows() {
        let big = a.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let s = if big > 0.0 { 1.0 / big } else { 1.0 };
        scales.push(s);
        for j in 0..a.ncols() {
            scaled[(i, j)] *= s;
        }
    }
    (scaled, scales)
}

pub fn determinant(a: &CMatrix) -> Complex64 {
    a.clone().lu().determinant()
}
