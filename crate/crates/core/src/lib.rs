//! Multiple imputation for linear regression with incomplete outcomes:
//! a normal-model imputer, Rubin's combining rules, the MI / MID / DMI
//! analysis strategies, and a Monte Carlo harness comparing them.

pub mod data;
pub mod error;
pub mod imputer;
pub mod io;
pub mod ols;
pub mod pooling;
pub mod rng;
pub mod sim;
pub mod strategies;
pub mod tdist;

pub use data::{
    ColumnRole, ExperimentCell, ImputationMeta, ImputationSet, IncompleteDataset, MissingPattern, MvnParams,
};
pub use error::{Error, Result};
pub use imputer::{em_fit, multiple_impute, EmConfig, EmFit, McmcConfig};
pub use ols::{fit_ols, fit_ols_rows, CompletedFit};
pub use pooling::{pool, pool_at_level, PooledEstimate};
pub use rng::{rng_stream, RngStream, StreamKey};
pub use strategies::{ImputerConfig, Strategy, StrategyResult};
