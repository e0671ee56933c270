//! Complete-data analysis: least-squares regression of the outcome on the
//! predictors, with squared standard errors for every estimate.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Estimates of `(α, β₁, …, β_p, σ²)` from one completed dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedFit {
    pub theta_hat: Vec<f64>,
    /// Squared standard error of each entry of `theta_hat`.
    pub w_hat: Vec<f64>,
    /// Residual degrees of freedom, `n − (p + 1)`.
    pub nu_com: usize,
}

impl CompletedFit {
    pub fn n_params(&self) -> usize {
        self.theta_hat.len()
    }
}

/// Ordinary least squares with an intercept.
///
/// `σ̂²` uses the unbiased divisor `n − p − 1`; its squared standard error is
/// the normal-theory `2σ̂⁴/ν`. Rows are processed in a canonical order, so
/// permuting the rows of `completed` gives bit-identical results.
pub fn fit_ols(completed: &DMatrix<f64>, outcome_col: usize, predictor_cols: &[usize]) -> Result<CompletedFit> {
    let rows: Vec<usize> = (0..completed.nrows()).collect();
    fit_ols_rows(completed, &rows, outcome_col, predictor_cols)
}

/// [`fit_ols`] restricted to the listed rows.
pub fn fit_ols_rows(
    completed: &DMatrix<f64>,
    rows: &[usize],
    outcome_col: usize,
    predictor_cols: &[usize],
) -> Result<CompletedFit> {
    let n = rows.len();
    let p = predictor_cols.len();
    if n <= p + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} rows leave no residual degrees of freedom for {} coefficients",
            p + 1
        )));
    }
    let mut order = rows.to_vec();
    order.sort_by(|&a, &b| {
        std::iter::once(outcome_col)
            .chain(predictor_cols.iter().copied())
            .map(|j| completed[(a, j)].total_cmp(&completed[(b, j)]))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });

    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { completed[(order[i], predictor_cols[j - 1])] });
    let y = DVector::from_fn(n, |i, _| completed[(order[i], outcome_col)]);

    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..=p {
        let norm = x.column(j).norm();
        if !(r[(j, j)].abs() > 1e-10 * norm.max(f64::MIN_POSITIVE)) {
            let label = if j == 0 { "intercept".to_string() } else { format!("column {}", predictor_cols[j - 1]) };
            return Err(Error::Collinear(label));
        }
    }
    let qty = qr.q().transpose() * &y;
    let beta = r.solve_upper_triangular(&qty).ok_or_else(|| Error::Collinear("design".into()))?;
    let r_inv =
        r.solve_upper_triangular(&DMatrix::identity(p + 1, p + 1)).ok_or_else(|| Error::Collinear("design".into()))?;

    let resid = &y - &x * &beta;
    let nu_com = n - (p + 1);
    let sigma2 = resid.norm_squared() / nu_com as f64;

    let mut theta_hat: Vec<f64> = beta.iter().copied().collect();
    // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ, so its diagonal is the squared row norms of R⁻¹
    let mut w_hat: Vec<f64> = (0..=p).map(|j| sigma2 * r_inv.row(j).norm_squared()).collect();
    theta_hat.push(sigma2);
    w_hat.push(2.0 * sigma2 * sigma2 / nu_com as f64);
    Ok(CompletedFit { theta_hat, w_hat, nu_com })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exact_fit_has_zero_residual_variance() {
        let data = DMatrix::from_row_slice(
            5,
            3,
            &[0.0, 0.0, 1.0, 1.0, 0.0, 2.0, 0.0, 1.0, 2.0, 1.0, 1.0, 3.0, 2.0, -1.0, 2.0],
        );
        let fit = fit_ols(&data, 2, &[0, 1]).unwrap();
        assert_relative_eq!(fit.theta_hat[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.theta_hat[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.theta_hat[2], 1.0, epsilon = 1e-12);
        assert!(fit.theta_hat[3].abs() < 1e-25);
        assert_eq!(fit.nu_com, 2);
    }

    #[test]
    fn hand_solved_simple_regression() {
        // normal equations: [3 0; 0 2] b = [4, 3] → b = (4/3, 3/2);
        // residuals (−1/6, −1/3, 1/6) → SSR = 1/6 with 1 df
        let data = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, 1.0, 1.0, 3.0]);
        let fit = fit_ols(&data, 1, &[0]).unwrap();
        assert_relative_eq!(fit.theta_hat[0], 4.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(fit.theta_hat[1], 1.5, epsilon = 1e-14);
        assert_relative_eq!(fit.theta_hat[2], 1.0 / 6.0, epsilon = 1e-14);
        // Var(b) = σ² (XᵀX)⁻¹ = (1/6)·diag(1/3, 1/2)
        assert_relative_eq!(fit.w_hat[0], 1.0 / 18.0, epsilon = 1e-14);
        assert_relative_eq!(fit.w_hat[1], 1.0 / 12.0, epsilon = 1e-14);
        assert_relative_eq!(fit.w_hat[2], 2.0 / 36.0, epsilon = 1e-14);
        assert_eq!(fit.nu_com, 1);
    }

    #[test]
    fn too_few_rows() {
        let data = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 2.0]);
        assert!(matches!(fit_ols(&data, 1, &[0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn collinear_design() {
        let data = DMatrix::from_row_slice(4, 3, &[1.0, 2.0, 1.0, 2.0, 4.0, 0.0, 3.0, 6.0, 2.0, 4.0, 8.0, 1.0]);
        assert!(matches!(fit_ols(&data, 2, &[0, 1]), Err(Error::Collinear(_))));
        let constant = DMatrix::from_row_slice(3, 2, &[5.0, 1.0, 5.0, 2.0, 5.0, 4.0]);
        assert!(matches!(fit_ols(&constant, 1, &[0]), Err(Error::Collinear(_))));
    }

    /// Brute-force oracle: explicit (XᵀX)⁻¹ by Gauss-Jordan elimination.
    fn brute_force(data: &DMatrix<f64>, outcome: usize, preds: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let n = data.nrows();
        let q = preds.len() + 1;
        let col = |i: usize, j: usize| if j == 0 { 1.0 } else { data[(i, preds[j - 1])] };
        let mut aug = vec![vec![0.0; 2 * q]; q];
        for (a, row) in aug.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().take(q).enumerate() {
                *cell = (0..n).map(|i| col(i, a) * col(i, b)).sum();
            }
            row[q + a] = 1.0;
        }
        for c in 0..q {
            let piv = (c..q).max_by(|&a, &b| aug[a][c].abs().total_cmp(&aug[b][c].abs())).unwrap();
            aug.swap(c, piv);
            let d = aug[c][c];
            for v in aug[c].iter_mut() {
                *v /= d;
            }
            for r in 0..q {
                if r != c {
                    let f = aug[r][c];
                    let pivot_row = aug[c].clone();
                    for (v, pv) in aug[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        let xty: Vec<f64> = (0..q).map(|a| (0..n).map(|i| col(i, a) * data[(i, outcome)]).sum()).collect();
        let beta: Vec<f64> = (0..q).map(|a| (0..q).map(|b| aug[a][q + b] * xty[b]).sum()).collect();
        let ssr: f64 = (0..n)
            .map(|i| {
                let fitted: f64 = (0..q).map(|a| col(i, a) * beta[a]).sum();
                (data[(i, outcome)] - fitted).powi(2)
            })
            .sum();
        let s2 = ssr / (n - q) as f64;
        (beta, (0..q).map(|a| s2 * aug[a][q + a]).collect())
    }

    fn dataset() -> impl Strategy<Value = DMatrix<f64>> {
        (6usize..=20).prop_flat_map(|n| {
            proptest::collection::vec(-3.0f64..3.0, n * 3).prop_map(move |v| DMatrix::from_vec(n, 3, v))
        })
    }

    proptest! {
        #[test]
        fn agrees_with_explicit_inverse(data in dataset()) {
            let fit = fit_ols(&data, 2, &[0, 1]).unwrap();
            let (beta, w) = brute_force(&data, 2, &[0, 1]);
            for j in 0..3 {
                prop_assert!((fit.theta_hat[j] - beta[j]).abs() <= 1e-8 * (1.0 + beta[j].abs()));
                prop_assert!((fit.w_hat[j] - w[j]).abs() <= 1e-8 * (1.0 + w[j].abs()));
            }
        }

        #[test]
        fn residuals_are_orthogonal_to_design(data in dataset()) {
            let fit = fit_ols(&data, 2, &[0, 1]).unwrap();
            let n = data.nrows();
            let resid: Vec<f64> = (0..n)
                .map(|i| data[(i, 2)] - fit.theta_hat[0] - fit.theta_hat[1] * data[(i, 0)] - fit.theta_hat[2] * data[(i, 1)])
                .collect();
            let scale: f64 = resid.iter().map(|r| r * r).sum::<f64>().sqrt().max(1e-12);
            for col in [None, Some(0), Some(1)] {
                let dot: f64 = (0..n).map(|i| resid[i] * col.map_or(1.0, |c| data[(i, c)])).sum();
                let norm: f64 = (0..n).map(|i| col.map_or(1.0, |c| data[(i, c)]).powi(2)).sum::<f64>().sqrt();
                prop_assert!(dot.abs() <= 1e-8 * scale * norm.max(1.0));
            }
        }

        #[test]
        fn row_permutation_is_exact(data in dataset(), seed in any::<u64>()) {
            let n = data.nrows();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let shuffled = DMatrix::from_fn(n, 3, |i, j| data[(perm[i], j)]);
            prop_assert_eq!(fit_ols(&data, 2, &[0, 1]).unwrap(), fit_ols(&shuffled, 2, &[0, 1]).unwrap());
        }
    }
}
