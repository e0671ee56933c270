use nalgebra::{DMatrix, DVector};

use super::sweep::sweep_mut;
use crate::data::MvnParams;
use crate::error::{Error, Result};

/// The conditional distribution of the missing coordinates given the
/// observed ones, for one missingness pattern. Small blocks are stored
/// row-major so the per-row loops stay allocation free.
#[derive(Debug, Clone)]
pub(crate) struct PatternConditional {
    pub obs: Vec<usize>,
    pub mis: Vec<usize>,
    /// `mis.len() × obs.len()` regression coefficients.
    pub coef: Vec<f64>,
    /// `mis.len() × mis.len()` residual covariance.
    pub cov: Vec<f64>,
    /// Lower Cholesky factor of `cov`; only filled when requested.
    pub chol: Vec<f64>,
    /// `obs.len() × obs.len()` inverse of the observed block.
    pub obs_precision: Vec<f64>,
    /// log det of the observed block.
    pub obs_logdet: f64,
}

impl PatternConditional {
    pub fn new(params: &MvnParams, missing: &[bool], want_chol: bool) -> Result<Self> {
        let k = params.dim();
        let obs: Vec<usize> = (0..k).filter(|&j| !missing[j]).collect();
        let mis: Vec<usize> = (0..k).filter(|&j| missing[j]).collect();
        let mut s = params.sigma().clone();
        let mut logdet = 0.0;
        for &o in &obs {
            let pivot = sweep_mut(&mut s, o)
                .map_err(|_| Error::Singular(format!("conditioning on column {o} hit a non-positive pivot")))?;
            logdet += pivot.ln();
        }
        let (no, nm) = (obs.len(), mis.len());
        let mut coef = Vec::with_capacity(nm * no);
        let mut cov = Vec::with_capacity(nm * nm);
        for &a in &mis {
            coef.extend(obs.iter().map(|&b| s[(a, b)]));
            cov.extend(mis.iter().map(|&c| s[(a, c)]));
        }
        // symmetrize against rounding
        for a in 0..nm {
            for c in 0..a {
                let v = 0.5 * (cov[a * nm + c] + cov[c * nm + a]);
                cov[a * nm + c] = v;
                cov[c * nm + a] = v;
            }
        }
        let mut obs_precision = Vec::with_capacity(no * no);
        for &b in &obs {
            obs_precision.extend(obs.iter().map(|&d| -s[(b, d)]));
        }
        let chol = if want_chol && nm > 0 {
            let mut l = cov.clone();
            if !cholesky_in_place(&mut l, nm) {
                return Err(Error::Singular("conditional covariance is not positive definite".into()));
            }
            l
        } else {
            Vec::new()
        };
        Ok(Self { obs, mis, coef, cov, chol, obs_precision, obs_logdet: logdet })
    }

    /// Writes the conditional mean of the missing coordinates into `out`,
    /// given the observed deviations `dev_obs = x_O − μ_O`.
    #[inline]
    pub fn conditional_mean(&self, mu: &DVector<f64>, dev_obs: &[f64], out: &mut [f64]) {
        let no = self.obs.len();
        for (a, &m) in self.mis.iter().enumerate() {
            let row = &self.coef[a * no..(a + 1) * no];
            out[a] = mu[m] + row.iter().zip(dev_obs).map(|(c, d)| c * d).sum::<f64>();
        }
    }

    /// Quadratic form `δᵀ Σ_OO⁻¹ δ`.
    #[inline]
    pub fn mahalanobis(&self, dev_obs: &[f64]) -> f64 {
        let no = self.obs.len();
        let mut q = 0.0;
        for b in 0..no {
            let row = &self.obs_precision[b * no..(b + 1) * no];
            q += dev_obs[b] * row.iter().zip(dev_obs).map(|(p, d)| p * d).sum::<f64>();
        }
        q
    }
}

/// In-place lower Cholesky of a row-major `k×k` matrix; the strict upper
/// triangle is zeroed. Returns `false` if the matrix is not positive definite.
pub(crate) fn cholesky_in_place(a: &mut [f64], k: usize) -> bool {
    for j in 0..k {
        let mut d = a[j * k + j];
        for l in 0..j {
            d -= a[j * k + l] * a[j * k + l];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * k + j] = d;
        for i in (j + 1)..k {
            let mut s = a[i * k + j];
            for l in 0..j {
                s -= a[i * k + l] * a[j * k + l];
            }
            a[i * k + j] = s / d;
        }
        for l in (j + 1)..k {
            a[j * k + l] = 0.0;
        }
    }
    true
}

/// Mean and covariance of the unobserved coordinates given `observed_vals`
/// at `observed_idx`.
///
/// An empty `observed_idx` returns the marginal; a full one returns empty
/// results.
pub fn conditional_params(
    params: &MvnParams,
    observed_idx: &[usize],
    observed_vals: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let k = params.dim();
    if observed_idx.len() != observed_vals.len() {
        return Err(Error::InvalidParams(format!(
            "{} observed indices but {} values",
            observed_idx.len(),
            observed_vals.len()
        )));
    }
    let mut missing = vec![true; k];
    for &o in observed_idx {
        if o >= k || !missing[o] {
            return Err(Error::InvalidParams(format!("observed index {o} is out of range or repeated")));
        }
        missing[o] = false;
    }
    let cond = PatternConditional::new(params, &missing, false)?;
    let nm = cond.mis.len();
    // observed values arrive in caller order; map them onto sorted `obs`
    let mut dev = vec![0.0; cond.obs.len()];
    for (slot, &o) in cond.obs.iter().enumerate() {
        let pos = observed_idx.iter().position(|&x| x == o).expect("present");
        dev[slot] = observed_vals[pos] - params.mu()[o];
    }
    let mut mean = vec![0.0; nm];
    cond.conditional_mean(params.mu(), &dev, &mut mean);
    Ok((DVector::from_vec(mean), DMatrix::from_row_slice(nm, nm, &cond.cov)))
}
