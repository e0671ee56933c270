//! Monte Carlo comparison of the strategies on simulated regression data.

mod generate;
mod grid;
mod metrics;
mod report;
mod runner;

pub use generate::{
    apply_missingness, attach_auxiliary, deletion_probabilities, generate_complete, sim_columns, std_normal_cdf,
    TruthSpec, X1, X2, Y, Z,
};
pub use grid::GridSpec;
pub use metrics::{median, paired_metrics, PairedSample, Proportion};
pub use report::{write_grid_result, write_metrics, write_plot};
pub use runner::{
    chain, paired_sample, run_cell, run_cell_records, run_grid, run_replication, summarize, CellMetrics, Comparison,
    GridResult, ParamSummary, PlotRow, ReplicationRecord, RunOptions, StrategySummary, PARAMETERS,
};
