//! The three estimation strategies: impute then analyze (MI), impute then
//! drop imputed outcomes (MID), and drop missing outcomes then impute (DMI).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::data::{ColumnRole, ImputationSet, IncompleteDataset};
use crate::error::{Error, Result};
use crate::imputer::{multiple_impute, EmConfig, McmcConfig};
use crate::ols::{fit_ols_rows, CompletedFit};
use crate::pooling::{pool_at_level, pool_scalar, PooledEstimate, DEFAULT_LEVEL};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Mi,
    Mid,
    Dmi,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Mi, Strategy::Mid, Strategy::Dmi];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Mi => "mi",
            Strategy::Mid => "mid",
            Strategy::Dmi => "dmi",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mi" => Ok(Strategy::Mi),
            "mid" => Ok(Strategy::Mid),
            "dmi" => Ok(Strategy::Dmi),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}` (expected mi, mid or dmi)"))),
        }
    }
}

/// Settings shared by every imputation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImputerConfig {
    pub em: EmConfig,
    pub mcmc: McmcConfig,
}

/// Pooled inference from one strategy run.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyResult {
    pub strategy: Strategy,
    /// `intercept`, one entry per predictor, then `sigma2`.
    pub parameters: Vec<String>,
    pub estimates: Vec<PooledEstimate>,
    /// Rows entering each completed-data analysis.
    pub n_analyzed: usize,
    pub m: usize,
}

impl StrategyResult {
    pub fn get(&self, parameter: &str) -> Option<&PooledEstimate> {
        self.parameters.iter().position(|p| p == parameter).map(|j| &self.estimates[j])
    }
}

pub(crate) fn parameter_names(names: &[String], predictors: &[usize]) -> Vec<String> {
    std::iter::once("intercept".to_string())
        .chain(predictors.iter().map(|&j| names[j].clone()))
        .chain(std::iter::once("sigma2".to_string()))
        .collect()
}

/// Fits every completion on `rows` and pools.
fn analyze_rows(set: &ImputationSet, rows: &[usize], strategy: Strategy, level: f64) -> Result<StrategyResult> {
    let outcome = set.outcome_col();
    let predictors = set.predictor_cols();
    let fits: Vec<CompletedFit> =
        set.completed().iter().map(|c| fit_ols_rows(c, rows, outcome, &predictors)).collect::<Result<_>>()?;
    let nu_com = fits[0].nu_com;
    Ok(StrategyResult {
        strategy,
        parameters: parameter_names(set.column_names(), &predictors),
        estimates: pool_at_level(&fits, nu_com, level)?,
        n_analyzed: rows.len(),
        m: set.m(),
    })
}

/// Analyzes all rows of every completion.
pub fn analyze_mi(set: &ImputationSet) -> Result<StrategyResult> {
    analyze_mi_at_level(set, DEFAULT_LEVEL)
}

pub fn analyze_mi_at_level(set: &ImputationSet, level: f64) -> Result<StrategyResult> {
    let rows: Vec<usize> = (0..set.nrows()).collect();
    analyze_rows(set, &rows, Strategy::Mi, level)
}

/// Imputes `data` and analyzes all rows, with `ν_com = n − (p + 1)`.
pub fn run_mi(data: &IncompleteDataset, m: usize, cfg: &ImputerConfig, rng: &mut RngStream) -> Result<StrategyResult> {
    let set = multiple_impute(data, m, &cfg.em, &cfg.mcmc, rng)?;
    analyze_mi(&set)
}

/// Rows whose outcome was observed before imputation.
fn observed_outcome_rows(y_missing: &[bool], n_predictors: usize) -> Result<Vec<usize>> {
    let rows: Vec<usize> = (0..y_missing.len()).filter(|&i| !y_missing[i]).collect();
    if rows.is_empty() {
        return Err(Error::AllOutcomesImputed);
    }
    if rows.len() <= n_predictors + 1 {
        return Err(Error::TooFewObservedOutcomes { observed: rows.len(), required: n_predictors + 1 });
    }
    Ok(rows)
}

/// Drops every row whose outcome was imputed, then analyzes and pools with
/// `ν_com = n₁ − (p + 1)`. Shares its imputations with [`analyze_mi`].
pub fn run_mid(set: &ImputationSet) -> Result<StrategyResult> {
    run_mid_at_level(set, DEFAULT_LEVEL)
}

pub fn run_mid_at_level(set: &ImputationSet, level: f64) -> Result<StrategyResult> {
    let rows = observed_outcome_rows(set.y_imputed(), set.predictor_cols().len())?;
    analyze_rows(set, &rows, Strategy::Mid, level)
}

/// Drops rows with a missing outcome, imputes what remains, and analyzes.
pub fn run_dmi(data: &IncompleteDataset, m: usize, cfg: &ImputerConfig, rng: &mut RngStream) -> Result<StrategyResult> {
    run_dmi_at_level(data, m, cfg, rng, DEFAULT_LEVEL)
}

pub fn run_dmi_at_level(
    data: &IncompleteDataset,
    m: usize,
    cfg: &ImputerConfig,
    rng: &mut RngStream,
    level: f64,
) -> Result<StrategyResult> {
    let rows = observed_outcome_rows(&data.outcome_missing(), data.predictor_cols().len())?;
    let kept = data.select_rows(&rows)?;
    let set = multiple_impute(&kept, m, &cfg.em, &cfg.mcmc, rng)?;
    let mut result = analyze_mi_at_level(&set, level)?;
    result.strategy = Strategy::Dmi;
    Ok(result)
}

/// Pooled marginal variance of the outcome over all rows of every
/// completion, with the normal-theory squared standard error `2s⁴/(n − 1)`.
pub fn pooled_outcome_variance(set: &ImputationSet) -> Result<PooledEstimate> {
    let y = set.outcome_col();
    let n = set.nrows();
    if n < 2 {
        return Err(Error::InsufficientData("outcome variance needs at least 2 rows".into()));
    }
    let df = (n - 1) as f64;
    let (est, var): (Vec<f64>, Vec<f64>) = set
        .completed()
        .iter()
        .map(|c| {
            let s2 = sample_variance(c, y);
            (s2, 2.0 * s2 * s2 / df)
        })
        .unzip();
    pool_scalar(&est, &var, n - 1, DEFAULT_LEVEL)
}

fn sample_variance(m: &DMatrix<f64>, col: usize) -> f64 {
    let c = m.column(col);
    let mean = c.mean();
    c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (c.len() - 1) as f64
}

/// Explained-variance share computed from separately pooled residual and
/// outcome variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedRSquared {
    pub value: f64,
    /// Set when the raw ratio fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

pub fn r_squared_combined(sigma_e2_mid: f64, sigma_y2_mi: f64) -> Result<CombinedRSquared> {
    if !(sigma_y2_mi > 0.0) || !sigma_y2_mi.is_finite() {
        return Err(Error::Domain("outcome variance must be positive"));
    }
    if !(sigma_e2_mid >= 0.0) || !sigma_e2_mid.is_finite() {
        return Err(Error::Domain("residual variance must be non-negative"));
    }
    let raw = 1.0 - sigma_e2_mid / sigma_y2_mi;
    let value = raw.clamp(0.0, 1.0);
    Ok(CombinedRSquared { value, clamped: value != raw })
}

/// Column roles for a dataset with the outcome last and all other columns
/// predictors.
pub fn outcome_last_roles(k: usize) -> Vec<ColumnRole> {
    let mut roles = vec![ColumnRole::Predictor; k];
    roles[k - 1] = ColumnRole::Outcome;
    roles
}
