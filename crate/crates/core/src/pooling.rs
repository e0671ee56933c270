//! Combining rules for M completed-data analyses.

use crate::error::{Error, Result};
use crate::ols::CompletedFit;
use crate::tdist::t_quantile;

pub const DEFAULT_LEVEL: f64 = 0.95;

/// Pooled inference for one scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledEstimate {
    pub theta_bar: f64,
    /// Mean within-imputation variance.
    pub w_bar: f64,
    /// Between-imputation variance, including the `(1 + 1/M)` factor.
    pub b: f64,
    /// Total variance `w_bar + b`.
    pub t: f64,
    /// Fraction of missing information `b / t`.
    pub gamma: f64,
    pub nu_imp: f64,
    pub nu_obs: f64,
    pub nu: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
    pub m: usize,
    pub nu_com: usize,
}

impl PooledEstimate {
    pub fn se(&self) -> f64 {
        self.t.sqrt()
    }

    pub fn ci_length(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_lo <= value && value <= self.ci_hi
    }
}

/// Pools with nominal 95% intervals.
pub fn pool(fits: &[CompletedFit], nu_com: usize) -> Result<Vec<PooledEstimate>> {
    pool_at_level(fits, nu_com, DEFAULT_LEVEL)
}

pub fn pool_at_level(fits: &[CompletedFit], nu_com: usize, level: f64) -> Result<Vec<PooledEstimate>> {
    let m = fits.len();
    if m < 2 {
        return Err(Error::TooFewImputations(m));
    }
    let n_params = fits[0].n_params();
    if fits.iter().any(|f| f.n_params() != n_params || f.w_hat.len() != n_params) {
        return Err(Error::InvalidParams("completed-data fits report different parameter lists".into()));
    }
    let mut estimates = Vec::with_capacity(m);
    let mut variances = Vec::with_capacity(m);
    (0..n_params)
        .map(|j| {
            estimates.clear();
            variances.clear();
            estimates.extend(fits.iter().map(|f| f.theta_hat[j]));
            variances.extend(fits.iter().map(|f| f.w_hat[j]));
            pool_scalar(&estimates, &variances, nu_com, level)
        })
        .collect()
}

/// Pools one parameter from its M point estimates and squared standard errors.
pub fn pool_scalar(estimates: &[f64], variances: &[f64], nu_com: usize, level: f64) -> Result<PooledEstimate> {
    let m = estimates.len();
    if m < 2 {
        return Err(Error::TooFewImputations(m));
    }
    if variances.len() != m {
        return Err(Error::InvalidParams(format!("{m} estimates but {} variances", variances.len())));
    }
    if nu_com < 1 {
        return Err(Error::InvalidParams("complete-data degrees of freedom must be at least 1".into()));
    }
    if estimates.iter().chain(variances).any(|v| !v.is_finite()) || variances.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidParams("estimates must be finite and variances non-negative".into()));
    }
    let mf = m as f64;
    let theta_bar = mean(estimates);
    let w_bar = mean(variances);
    let b = if estimates.iter().all(|&e| e == estimates[0]) {
        0.0
    } else {
        let ss: f64 = estimates.iter().map(|e| (e - theta_bar).powi(2)).sum();
        (1.0 + 1.0 / mf) * ss / (mf - 1.0)
    };
    let t = w_bar + b;
    let gamma = if t > 0.0 { b / t } else { 0.0 };
    let (nu_imp, nu_obs, nu) = degrees_of_freedom(gamma, m, nu_com);
    let (ci_lo, ci_hi) = confidence_interval(theta_bar, t, nu, level)?;
    Ok(PooledEstimate { theta_bar, w_bar, b, t, gamma, nu_imp, nu_obs, nu, ci_lo, ci_hi, level, m, nu_com })
}

/// Arithmetic mean that returns the common value exactly when all entries agree.
fn mean(v: &[f64]) -> f64 {
    if v.iter().all(|&x| x == v[0]) {
        v[0]
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// `(ν_imp, ν_obs, ν)`; `ν_imp` is infinite and `ν = ν_obs` when `γ = 0`.
pub fn degrees_of_freedom(gamma: f64, m: usize, nu_com: usize) -> (f64, f64, f64) {
    let nc = nu_com as f64;
    let nu_obs = (nc + 1.0) / (nc + 3.0) * nc * (1.0 - gamma);
    if gamma == 0.0 {
        return (f64::INFINITY, nu_obs, nu_obs);
    }
    let nu_imp = (m as f64 - 1.0) / (gamma * gamma);
    let nu = if nu_obs > 0.0 { 1.0 / (1.0 / nu_imp + 1.0 / nu_obs) } else { 0.0 };
    (nu_imp, nu_obs, nu)
}

/// `θ̄ ± t_{ν,(1+level)/2} √T`. A zero total variance gives a degenerate
/// interval; zero degrees of freedom with positive variance an unbounded one.
pub fn confidence_interval(theta_bar: f64, t: f64, nu: f64, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain("confidence level must lie in (0, 1)"));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain("total variance must be non-negative"));
    }
    if t == 0.0 {
        return Ok((theta_bar, theta_bar));
    }
    if !(nu > 0.0) {
        return Ok((f64::NEG_INFINITY, f64::INFINITY));
    }
    let half = t_quantile(nu, 0.5 * (1.0 + level))? * t.sqrt();
    Ok((theta_bar - half, theta_bar + half))
}

/// Percent by which the standard error with M imputations exceeds its
/// infinite-M value, to first order.
pub fn se_inflation_pct(gamma_inf: f64, m: usize) -> f64 {
    100.0 * gamma_inf / (2.0 * m as f64)
}

/// Sampling behaviour of the total-variance estimate `T̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct THatMoments {
    pub expected: f64,
    pub cv_exact: f64,
    pub cv_approx: f64,
}

pub fn t_hat_moments(gamma_inf: f64, m: usize, t_inf: f64) -> THatMoments {
    let mf = m as f64;
    let root = (2.0 / (mf - 1.0)).sqrt();
    THatMoments {
        expected: (1.0 + gamma_inf / mf) * t_inf,
        cv_exact: gamma_inf * (mf + 1.0) / (mf + gamma_inf) * root,
        cv_approx: gamma_inf * root,
    }
}
