//! Shared data model: incomplete datasets, normal-model parameters,
//! imputation sets, and experiment cells.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// What a column is used for. Exactly one column of a dataset is the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnRole {
    Outcome,
    Predictor,
    /// Used by the imputation model only, never by the analysis model.
    Auxiliary,
}

/// Rectangular real-valued data with a missingness mask.
///
/// The mask is authoritative. Masked cells hold `NaN` internally and are never
/// handed out by [`IncompleteDataset::get`].
#[derive(Debug, Clone, PartialEq)]
pub struct IncompleteDataset {
    values: DMatrix<f64>,
    mask: DMatrix<bool>,
    column_names: Vec<String>,
    roles: Vec<ColumnRole>,
}

impl IncompleteDataset {
    pub fn new(
        mut values: DMatrix<f64>,
        mask: DMatrix<bool>,
        column_names: Vec<String>,
        roles: Vec<ColumnRole>,
    ) -> Result<Self> {
        let (n, k) = values.shape();
        if mask.shape() != (n, k) {
            return Err(Error::InvalidDataset(format!(
                "mask is {}x{} but values are {n}x{k}",
                mask.nrows(),
                mask.ncols()
            )));
        }
        if n < 1 || k < 2 {
            return Err(Error::InvalidDataset(format!("need at least 1 row and 2 columns, got {n}x{k}")));
        }
        if column_names.len() != k || roles.len() != k {
            return Err(Error::InvalidDataset(format!(
                "{k} columns but {} names and {} roles",
                column_names.len(),
                roles.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate column name `{name}`")));
            }
        }
        let outcomes = roles.iter().filter(|r| **r == ColumnRole::Outcome).count();
        if outcomes != 1 {
            return Err(Error::InvalidDataset(format!("exactly one outcome column is required, found {outcomes}")));
        }
        for j in 0..k {
            for i in 0..n {
                if mask[(i, j)] {
                    values[(i, j)] = f64::NAN;
                } else if !values[(i, j)].is_finite() {
                    return Err(Error::InvalidDataset(format!(
                        "non-finite observed value in column `{}`, row {}",
                        column_names[j],
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { values, mask, column_names, roles })
    }

    /// A dataset with no missing cells.
    pub fn complete(values: DMatrix<f64>, column_names: Vec<String>, roles: Vec<ColumnRole>) -> Result<Self> {
        let mask = DMatrix::from_element(values.nrows(), values.ncols(), false);
        Self::new(values, mask, column_names, roles)
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if self.mask[(row, col)] {
            None
        } else {
            Some(self.values[(row, col)])
        }
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.mask[(row, col)]
    }

    /// Raw storage; masked cells are `NaN`.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn roles(&self) -> &[ColumnRole] {
        &self.roles
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn outcome_col(&self) -> usize {
        self.roles.iter().position(|r| *r == ColumnRole::Outcome).expect("validated at construction")
    }

    pub fn predictor_cols(&self) -> Vec<usize> {
        cols_with_role(&self.roles, ColumnRole::Predictor)
    }

    pub fn auxiliary_cols(&self) -> Vec<usize> {
        cols_with_role(&self.roles, ColumnRole::Auxiliary)
    }

    pub fn observed_count(&self, col: usize) -> usize {
        self.mask.column(col).iter().filter(|m| !**m).count()
    }

    pub fn missing_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn has_missing(&self) -> bool {
        self.mask.iter().any(|m| *m)
    }

    /// `true` at row `i` when the outcome is missing there.
    pub fn outcome_missing(&self) -> Vec<bool> {
        self.mask.column(self.outcome_col()).iter().copied().collect()
    }

    /// A new dataset containing only `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let k = self.ncols();
        let values = DMatrix::from_fn(rows.len(), k, |i, j| self.values[(rows[i], j)]);
        let mask = DMatrix::from_fn(rows.len(), k, |i, j| self.mask[(rows[i], j)]);
        Self::new(values, mask, self.column_names.clone(), self.roles.clone())
    }
}

pub(crate) fn cols_with_role(roles: &[ColumnRole], role: ColumnRole) -> Vec<usize> {
    roles.iter().enumerate().filter(|(_, r)| **r == role).map(|(j, _)| j).collect()
}

/// Mean vector and positive-definite covariance of a multivariate normal.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnParams {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
}

impl MvnParams {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let k = mu.len();
        if sigma.shape() != (k, k) {
            return Err(Error::InvalidParams(format!(
                "mu has length {k} but sigma is {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let scale = sigma.amax().max(f64::MIN_POSITIVE);
        for i in 0..k {
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidParams(format!("sigma is not symmetric at ({i}, {j})")));
                }
            }
        }
        if nalgebra::Cholesky::new(sigma.clone()).is_none() {
            return Err(Error::Singular("sigma is not positive definite".into()));
        }
        Ok(Self { mu, sigma })
    }

    /// Skips validation; callers guarantee positive definiteness constructively.
    pub(crate) fn new_unchecked(mu: DVector<f64>, sigma: DMatrix<f64>) -> Self {
        Self { mu, sigma }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
}

/// Bookkeeping attached to an [`ImputationSet`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImputationMeta {
    /// Key of the stream the imputations were drawn from, when known.
    pub stream: Option<crate::rng::StreamKey>,
    /// Seed of each chain's private stream.
    pub chain_seeds: Vec<u64>,
    pub burn_in: usize,
    /// EM iterations used to find each chain's starting point. All chains
    /// share one EM fit.
    pub em_iterations: usize,
}

/// M completed copies of a dataset plus the record of which cells were imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationSet {
    completed: Vec<DMatrix<f64>>,
    original_mask: DMatrix<bool>,
    y_imputed: Vec<bool>,
    column_names: Vec<String>,
    roles: Vec<ColumnRole>,
    meta: ImputationMeta,
}

impl ImputationSet {
    /// Checks every invariant against the source dataset.
    pub fn new(source: &IncompleteDataset, completed: Vec<DMatrix<f64>>, meta: ImputationMeta) -> Result<Self> {
        if completed.len() < 2 {
            return Err(Error::TooFewImputations(completed.len()));
        }
        let (n, k) = (source.nrows(), source.ncols());
        for (m, c) in completed.iter().enumerate() {
            if c.shape() != (n, k) {
                return Err(Error::InvalidDataset(format!("completion {} has the wrong shape", m + 1)));
            }
            for j in 0..k {
                for i in 0..n {
                    match source.get(i, j) {
                        Some(v) if c[(i, j)].to_bits() != v.to_bits() => {
                            return Err(Error::InvalidDataset(format!(
                                "completion {} alters observed cell ({}, `{}`)",
                                m + 1,
                                i + 1,
                                source.column_names()[j]
                            )))
                        }
                        None if !c[(i, j)].is_finite() => {
                            return Err(Error::InvalidDataset(format!(
                                "completion {} leaves cell ({}, `{}`) unfilled",
                                m + 1,
                                i + 1,
                                source.column_names()[j]
                            )))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(Self {
            completed,
            original_mask: source.mask().clone(),
            y_imputed: source.outcome_missing(),
            column_names: source.column_names().to_vec(),
            roles: source.roles().to_vec(),
            meta,
        })
    }

    /// Rebuilds a set from completed files and a mask, e.g. after reading them
    /// back from disk. Observed cells must agree across all completions.
    pub fn from_parts(
        completed: Vec<DMatrix<f64>>,
        original_mask: DMatrix<bool>,
        column_names: Vec<String>,
        roles: Vec<ColumnRole>,
    ) -> Result<Self> {
        let first = completed.first().ok_or(Error::TooFewImputations(0))?;
        let mut values = first.clone();
        if values.shape() != original_mask.shape() {
            return Err(Error::InvalidDataset(format!(
                "mask is {}x{} but completions are {}x{}",
                original_mask.nrows(),
                original_mask.ncols(),
                values.nrows(),
                values.ncols()
            )));
        }
        values.zip_apply(&original_mask, |v, m| {
            if m {
                *v = f64::NAN
            }
        });
        let source = IncompleteDataset::new(values, original_mask, column_names, roles)?;
        Self::new(&source, completed, ImputationMeta::default())
    }

    pub fn m(&self) -> usize {
        self.completed.len()
    }

    pub fn completed(&self) -> &[DMatrix<f64>] {
        &self.completed
    }

    pub fn original_mask(&self) -> &DMatrix<bool> {
        &self.original_mask
    }

    pub fn y_imputed(&self) -> &[bool] {
        &self.y_imputed
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn roles(&self) -> &[ColumnRole] {
        &self.roles
    }

    pub fn meta(&self) -> &ImputationMeta {
        &self.meta
    }

    pub fn nrows(&self) -> usize {
        self.original_mask.nrows()
    }

    pub fn outcome_col(&self) -> usize {
        self.roles.iter().position(|r| *r == ColumnRole::Outcome).expect("validated at construction")
    }

    pub fn predictor_cols(&self) -> Vec<usize> {
        cols_with_role(&self.roles, ColumnRole::Predictor)
    }
}

/// Mechanism used to delete values of X2 and Y in the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MissingPattern {
    /// X2 and Y each deleted independently with probability p.
    Mcar,
    /// X2 and Y each deleted independently with probability 2pΦ(X1).
    Coordinated,
    /// X2 deleted with probability 2pΦ(X1), Y with probability 2pΦ(−X1).
    Complementary,
}

impl MissingPattern {
    pub const ALL: [MissingPattern; 3] = [Self::Mcar, Self::Coordinated, Self::Complementary];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Mcar => "mcar",
            Self::Coordinated => "coordinated",
            Self::Complementary => "complementary",
        }
    }
}

impl fmt::Display for MissingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MissingPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mcar" => Ok(Self::Mcar),
            "coordinated" => Ok(Self::Coordinated),
            "complementary" => Ok(Self::Complementary),
            other => Err(Error::InvalidConfig(format!("unknown missingness pattern `{other}`"))),
        }
    }
}

/// One combination of the simulation factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentCell {
    /// Cases per simulated dataset.
    pub n: usize,
    pub rho12: f64,
    pub r2: f64,
    /// Deletion proportion.
    pub p: f64,
    pub pattern: MissingPattern,
    /// Number of imputations.
    pub m: usize,
    /// Correlation of the auxiliary variable with Y; `None` means no auxiliary.
    pub rho_yz: Option<f64>,
    /// Replications.
    pub d: usize,
    pub seed: u64,
}

impl ExperimentCell {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.rho12 > -1.0 && self.rho12 < 1.0) {
            return bad(format!("rho12 = {} is outside (-1, 1)", self.rho12));
        }
        if !(self.r2 > 0.0 && self.r2 < 1.0) {
            return bad(format!("r2 = {} is outside (0, 1)", self.r2));
        }
        if !(0.0..=0.5).contains(&self.p) {
            return bad(format!("p = {} is outside [0, 0.5]", self.p));
        }
        if self.d < 1 {
            return bad("d must be at least 1".into());
        }
        if self.m < 2 {
            return bad(format!("m = {} but at least 2 imputations are required", self.m));
        }
        if self.n < 5 {
            return bad(format!("n = {} is too small to fit the regression", self.n));
        }
        if let Some(r) = self.rho_yz {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("rho_yz = {r} is outside [0, 1)"));
            }
        }
        Ok(())
    }
}
