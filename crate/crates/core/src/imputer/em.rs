//! Maximum-likelihood fit of a multivariate normal to incomplete data by EM.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::conditional::PatternConditional;
use super::PatternIndex;
use crate::data::{IncompleteDataset, MvnParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Convergence threshold on the relative change in observed-data
    /// log-likelihood.
    pub tol: f64,
    /// Added to the covariance diagonal after every M-step. Zero disables it.
    pub ridge: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { max_iter: 1000, tol: 1e-8, ridge: 0.0 }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::InvalidConfig("EM max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("EM tol must be positive".into()));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::InvalidConfig("EM ridge must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub params: MvnParams,
    pub iterations: usize,
    /// Observed-data log-likelihood at `params`.
    pub loglik: f64,
    /// Log-likelihood at the starting values followed by one entry per iteration.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
}

struct Sufficient {
    sum: DVector<f64>,
    cross: DMatrix<f64>,
    loglik: f64,
}

pub fn em_fit(data: &IncompleteDataset, cfg: &EmConfig) -> Result<EmFit> {
    cfg.validate()?;
    let (n, k) = (data.nrows(), data.ncols());
    for j in 0..k {
        let observed = data.observed_count(j);
        if observed < 2 {
            return Err(Error::UnusableColumn { column: data.column_names()[j].clone(), observed });
        }
    }
    if n <= k && cfg.ridge == 0.0 {
        return Err(Error::InsufficientData(format!("{n} rows for {k} columns; need more rows than columns")));
    }

    let index = PatternIndex::new(data);
    let mut params = starting_values(data, cfg.ridge)?;
    let mut stats = e_step(data, &index, &params)?;
    let mut loglik = stats.loglik;
    let mut trace = vec![loglik];

    for iter in 1..=cfg.max_iter {
        params = m_step(&stats, n, cfg.ridge)?;
        stats = e_step(data, &index, &params)?;
        let next = stats.loglik;
        trace.push(next);
        if !next.is_finite() {
            return Err(Error::Singular("log-likelihood diverged".into()));
        }
        // complete data: the first M-step is already the MLE
        let converged = !data.has_missing() || (next - loglik).abs() <= cfg.tol * loglik.abs().max(1e-300);
        loglik = next;
        if converged {
            return Ok(EmFit { params, iterations: iter, loglik, loglik_trace: trace, converged: true });
        }
    }
    Ok(EmFit { params, iterations: cfg.max_iter, loglik, loglik_trace: trace, converged: false })
}

/// Available-case means and a diagonal covariance of available-case variances.
fn starting_values(data: &IncompleteDataset, ridge: f64) -> Result<MvnParams> {
    let k = data.ncols();
    let mut mu = DVector::zeros(k);
    let mut sigma = DMatrix::zeros(k, k);
    for j in 0..k {
        let vals: Vec<f64> = (0..data.nrows()).filter_map(|i| data.get(i, j)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        if !(var + ridge > 0.0) {
            return Err(Error::Singular(format!(
                "column `{}` has no variation among its observed values",
                data.column_names()[j]
            )));
        }
        mu[j] = mean;
        sigma[(j, j)] = var + ridge;
    }
    Ok(MvnParams::new_unchecked(mu, sigma))
}

fn e_step(data: &IncompleteDataset, index: &PatternIndex, params: &MvnParams) -> Result<Sufficient> {
    let k = data.ncols();
    let conds =
        index.patterns.iter().map(|pat| PatternConditional::new(params, pat, false)).collect::<Result<Vec<_>>>()?;
    let values = data.values();
    let mu = params.mu();
    let mut sum = DVector::zeros(k);
    let mut cross = DMatrix::zeros(k, k);
    let mut loglik = 0.0;
    let mut xhat = vec![0.0; k];
    let mut dev = vec![0.0; k];
    let mut fill = vec![0.0; k];
    let ln2pi = (2.0 * PI).ln();

    for i in 0..data.nrows() {
        let cond = &conds[index.row_pattern[i]];
        for (slot, &o) in cond.obs.iter().enumerate() {
            let v = values[(i, o)];
            xhat[o] = v;
            dev[slot] = v - mu[o];
        }
        let dev_obs = &dev[..cond.obs.len()];
        if !cond.mis.is_empty() {
            cond.conditional_mean(mu, dev_obs, &mut fill);
            for (a, &m) in cond.mis.iter().enumerate() {
                xhat[m] = fill[a];
            }
        }
        if !cond.obs.is_empty() {
            loglik -= 0.5 * (cond.obs.len() as f64 * ln2pi + cond.obs_logdet + cond.mahalanobis(dev_obs));
        }
        for a in 0..k {
            sum[a] += xhat[a];
            for b in 0..=a {
                cross[(a, b)] += xhat[a] * xhat[b];
            }
        }
    }
    // residual covariance of the filled-in block, once per pattern
    for (cond, &count) in conds.iter().zip(&index.counts) {
        let nm = cond.mis.len();
        for a in 0..nm {
            for c in 0..=a {
                let (ma, mc) = (cond.mis[a].max(cond.mis[c]), cond.mis[a].min(cond.mis[c]));
                cross[(ma, mc)] += count as f64 * cond.cov[a * nm + c];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            cross[(b, a)] = cross[(a, b)];
        }
    }
    Ok(Sufficient { sum, cross, loglik })
}

fn m_step(stats: &Sufficient, n: usize, ridge: f64) -> Result<MvnParams> {
    let nf = n as f64;
    let mu = &stats.sum / nf;
    let k = mu.len();
    let mut sigma = DMatrix::from_fn(k, k, |a, b| stats.cross[(a, b)] / nf - mu[a] * mu[b]);
    for j in 0..k {
        sigma[(j, j)] += ridge;
    }
    if nalgebra::Cholesky::new(sigma.clone()).is_none() {
        return Err(Error::Singular("EM covariance estimate is not positive definite".into()));
    }
    Ok(MvnParams::new_unchecked(mu, sigma))
}
