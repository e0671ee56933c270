//! Data augmentation: alternate draws of the missing cells given the
//! parameters (I-step) and of the parameters given the completed data
//! (P-step).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::conditional::{cholesky_in_place, PatternConditional};
use super::em::{em_fit, EmConfig};
use super::PatternIndex;
use crate::data::{ImputationMeta, ImputationSet, IncompleteDataset, MvnParams};
use crate::error::{Error, Result};
use crate::rng::{chain_rng, chi_squared, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McmcConfig {
    /// I/P iterations per chain before the retained completion.
    pub burn_in: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { burn_in: 200 }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in < 1 {
            return Err(Error::InvalidConfig("burn-in must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws every missing cell from its row's conditional normal under `params`.
/// Observed cells are copied through untouched.
pub fn i_step<R: Rng + ?Sized>(data: &IncompleteDataset, params: &MvnParams, rng: &mut R) -> Result<DMatrix<f64>> {
    if params.dim() != data.ncols() {
        return Err(Error::InvalidParams(format!(
            "parameters have dimension {} but the data have {} columns",
            params.dim(),
            data.ncols()
        )));
    }
    let index = PatternIndex::new(data);
    let mut out = data.values().clone();
    i_step_into(&index, params, rng, &mut out)?;
    Ok(out)
}

/// `out` must hold the observed values; missing cells are overwritten.
pub(crate) fn i_step_into<R: Rng + ?Sized>(
    index: &PatternIndex,
    params: &MvnParams,
    rng: &mut R,
    out: &mut DMatrix<f64>,
) -> Result<()> {
    let conds = index
        .patterns
        .iter()
        .map(|pat| if pat.iter().any(|m| *m) { PatternConditional::new(params, pat, true).map(Some) } else { Ok(None) })
        .collect::<Result<Vec<_>>>()?;
    let k = params.dim();
    let mu = params.mu();
    let mut dev = vec![0.0; k];
    let mut mean = vec![0.0; k];
    let mut z = vec![0.0; k];
    for (i, &pid) in index.row_pattern.iter().enumerate() {
        let Some(cond) = &conds[pid] else { continue };
        for (slot, &o) in cond.obs.iter().enumerate() {
            dev[slot] = out[(i, o)] - mu[o];
        }
        cond.conditional_mean(mu, &dev[..cond.obs.len()], &mut mean);
        let nm = cond.mis.len();
        for zi in z.iter_mut().take(nm) {
            *zi = rng.sample(StandardNormal);
        }
        for (a, &m) in cond.mis.iter().enumerate() {
            let row = &cond.chol[a * nm..a * nm + a + 1];
            out[(i, m)] = mean[a] + row.iter().zip(&z).map(|(l, zz)| l * zz).sum::<f64>();
        }
    }
    Ok(())
}

/// One posterior draw of `(μ, Σ)` given a completed dataset under the
/// Jeffreys prior: `Σ ~ W⁻¹(n − 1, S)` with `S` the centered cross-product
/// matrix, then `μ ~ N(x̄, Σ/n)`.
pub fn p_step<R: Rng + ?Sized>(completed: &DMatrix<f64>, rng: &mut R) -> Result<MvnParams> {
    let (n, k) = completed.shape();
    if n <= k + 1 {
        return Err(Error::InsufficientData(format!("{n} rows for {k} columns; the P-step needs n > k + 1")));
    }
    let nf = n as f64;
    let means: Vec<f64> = (0..k).map(|j| completed.column(j).sum() / nf).collect();
    let mut scale = vec![0.0; k * k];
    let cols: Vec<&[f64]> = (0..k).map(|j| &completed.as_slice()[j * n..(j + 1) * n]).collect();
    for a in 0..k {
        for b in 0..=a {
            let (ma, mb) = (means[a], means[b]);
            let s: f64 = cols[a].iter().zip(cols[b]).map(|(x, y)| (x - ma) * (y - mb)).sum();
            scale[a * k + b] = s;
            scale[b * k + a] = s;
        }
    }
    let mut c = scale;
    if !cholesky_in_place(&mut c, k) {
        return Err(Error::Singular("completed-data cross-product matrix is not positive definite".into()));
    }

    // Bartlett factor of a standard Wishart(n − 1, I) draw
    let df = nf - 1.0;
    let mut bartlett = vec![0.0; k * k];
    for i in 0..k {
        bartlett[i * k + i] = chi_squared(rng, df - i as f64).sqrt();
    }
    for i in 1..k {
        for j in 0..i {
            bartlett[i * k + j] = rng.sample(StandardNormal);
        }
    }
    let inv = invert_lower(&bartlett, k);
    // G = C · A⁻ᵀ, so that Σ = G Gᵀ = (C⁻ᵀ A Aᵀ C⁻¹)⁻¹
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            // (A⁻ᵀ)[l][j] = inv[j][l], non-zero for l <= j; C lower so l <= i
            let upper = i.min(j);
            g[i * k + j] = (0..=upper).map(|l| c[i * k + l] * inv[j * k + l]).sum();
        }
    }
    let mut sigma = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..=a {
            let v: f64 = (0..k).map(|l| g[a * k + l] * g[b * k + l]).sum();
            sigma[(a, b)] = v;
            sigma[(b, a)] = v;
        }
    }
    let root_n = nf.sqrt();
    let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let mu = DVector::from_fn(k, |a, _| means[a] + (0..k).map(|l| g[a * k + l] * z[l]).sum::<f64>() / root_n);

    let mut check = sigma.as_slice().to_vec();
    if !cholesky_in_place(&mut check, k) {
        return Err(Error::Singular("drawn covariance is not positive definite".into()));
    }
    Ok(MvnParams::new_unchecked(mu, sigma))
}

fn invert_lower(a: &[f64], k: usize) -> Vec<f64> {
    let mut inv = vec![0.0; k * k];
    for j in 0..k {
        inv[j * k + j] = 1.0 / a[j * k + j];
        for i in (j + 1)..k {
            let s: f64 = (j..i).map(|l| a[i * k + l] * inv[l * k + j]).sum();
            inv[i * k + j] = -s / a[i * k + i];
        }
    }
    inv
}

/// Fits EM once, then runs `m` independent chains from the EM estimate.
/// Each chain alternates I- and P-steps for `burn_in` iterations and keeps
/// one final I-step completion.
pub fn multiple_impute(
    data: &IncompleteDataset,
    m: usize,
    em_cfg: &EmConfig,
    mcmc_cfg: &McmcConfig,
    rng: &mut RngStream,
) -> Result<ImputationSet> {
    if m < 2 {
        return Err(Error::TooFewImputations(m));
    }
    mcmc_cfg.validate()?;
    let em = em_fit(data, em_cfg)?;
    let chain_seeds: Vec<u64> = (0..m).map(|_| rng.random()).collect();
    let meta = ImputationMeta {
        stream: Some(rng.key()),
        chain_seeds: chain_seeds.clone(),
        burn_in: mcmc_cfg.burn_in,
        em_iterations: em.iterations,
    };
    if !data.has_missing() {
        return ImputationSet::new(data, vec![data.values().clone(); m], meta);
    }

    let index = PatternIndex::new(data);
    let completed = chain_seeds
        .iter()
        .map(|&seed| {
            let mut chain = chain_rng(seed);
            let mut out = data.values().clone();
            let mut params = em.params.clone();
            for _ in 0..mcmc_cfg.burn_in {
                i_step_into(&index, &params, &mut chain, &mut out)?;
                params = p_step(&out, &mut chain)?;
            }
            i_step_into(&index, &params, &mut chain, &mut out)?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    ImputationSet::new(data, completed, meta)
}
