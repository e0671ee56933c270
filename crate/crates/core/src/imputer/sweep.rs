//! The sweep operator on symmetric matrices.
//!
//! Sweeping a covariance matrix on the index set `O` leaves
//! `-Σ_OO⁻¹` in the `O×O` block, the regression coefficients of the remaining
//! coordinates on `O` in the off-diagonal blocks, and the residual covariance
//! in the complementary block.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sweeps `a` in place on one pivot and returns the pivot value used.
pub fn sweep_mut(a: &mut DMatrix<f64>, pivot: usize) -> Result<f64> {
    let h = a[(pivot, pivot)];
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::SingularPivot { index: pivot, value: h });
    }
    apply(a, pivot, h, 1.0);
    Ok(h)
}

/// Undoes [`sweep_mut`] on one pivot.
pub fn reverse_sweep_mut(a: &mut DMatrix<f64>, pivot: usize) -> Result<()> {
    let h = a[(pivot, pivot)];
    if !(h < 0.0) || !h.is_finite() {
        return Err(Error::SingularPivot { index: pivot, value: h });
    }
    apply(a, pivot, h, -1.0);
    Ok(())
}

fn apply(a: &mut DMatrix<f64>, p: usize, h: f64, sign: f64) {
    let k = a.nrows();
    for i in 0..k {
        if i == p {
            continue;
        }
        for j in 0..k {
            if j == p {
                continue;
            }
            a[(i, j)] -= a[(i, p)] * a[(p, j)] / h;
        }
    }
    for i in 0..k {
        if i != p {
            a[(i, p)] *= sign / h;
            a[(p, i)] *= sign / h;
        }
    }
    a[(p, p)] = -1.0 / h;
}

/// Returns `a` swept on every index in `pivots`.
pub fn sweep(a: &DMatrix<f64>, pivots: &[usize]) -> Result<DMatrix<f64>> {
    check_square(a, pivots)?;
    let mut out = a.clone();
    for &p in pivots {
        sweep_mut(&mut out, p)?;
    }
    Ok(out)
}

/// Inverse of [`sweep`] on the same pivots.
pub fn reverse_sweep(a: &DMatrix<f64>, pivots: &[usize]) -> Result<DMatrix<f64>> {
    check_square(a, pivots)?;
    let mut out = a.clone();
    for &p in pivots.iter().rev() {
        reverse_sweep_mut(&mut out, p)?;
    }
    Ok(out)
}

fn check_square(a: &DMatrix<f64>, pivots: &[usize]) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidParams(format!("sweep needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    if let Some(&p) = pivots.iter().find(|&&p| p >= a.nrows()) {
        return Err(Error::InvalidParams(format!("pivot {p} out of range for a {0}x{0} matrix", a.nrows())));
    }
    Ok(())
}
