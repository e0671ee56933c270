//! Multivariate-normal imputation: EM for the starting point, then
//! data-augmentation chains for proper multiple imputations.

mod conditional;
mod em;
mod mcmc;
mod sweep;

use std::collections::HashMap;

pub use conditional::conditional_params;
pub use em::{em_fit, EmConfig, EmFit};
pub use mcmc::{i_step, multiple_impute, p_step, McmcConfig};
pub use sweep::{reverse_sweep, reverse_sweep_mut, sweep, sweep_mut};

use crate::data::IncompleteDataset;

/// Distinct missingness patterns of a dataset, numbered in order of first
/// appearance.
#[derive(Debug, Clone)]
pub(crate) struct PatternIndex {
    /// `true` = missing, one entry per column.
    pub patterns: Vec<Vec<bool>>,
    pub row_pattern: Vec<usize>,
    pub counts: Vec<usize>,
}

impl PatternIndex {
    pub fn new(data: &IncompleteDataset) -> Self {
        let mut lookup: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut patterns = Vec::new();
        let mut counts = Vec::new();
        let mut row_pattern = Vec::with_capacity(data.nrows());
        for i in 0..data.nrows() {
            let pat: Vec<bool> = (0..data.ncols()).map(|j| data.is_missing(i, j)).collect();
            let id = *lookup.entry(pat.clone()).or_insert_with(|| {
                patterns.push(pat);
                counts.push(0);
                patterns.len() - 1
            });
            counts[id] += 1;
            row_pattern.push(id);
        }
        Self { patterns, row_pattern, counts }
    }
}
