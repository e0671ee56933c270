use rayon::prelude::*;

use super::generate::{apply_missingness, attach_auxiliary, generate_complete, TruthSpec};
use super::metrics::{median, PairedSample, Proportion};
use crate::data::ExperimentCell;
use crate::error::{Error, Result};
use crate::imputer::multiple_impute;
use crate::pooling::PooledEstimate;
use crate::rng::rng_stream;
use crate::strategies::{analyze_mi, run_dmi, run_mid, ImputerConfig, Strategy};

/// Stream ids within one replication.
pub mod chain {
    pub const GENERATE: u64 = 0;
    pub const MASK: u64 = 1;
    pub const AUXILIARY: u64 = 2;
    pub const IMPUTE: u64 = 3;
    pub const IMPUTE_DMI: u64 = 4;
}

pub const PARAMETERS: [&str; 4] = ["intercept", "x1", "x2", "sigma2"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Strategies to run, kept in canonical `mi, mid, dmi` order.
    pub strategies: Vec<Strategy>,
    pub imputer: ImputerConfig,
    /// Worker threads for [`run_grid`].
    pub parallelism: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { strategies: vec![Strategy::Mi, Strategy::Mid], imputer: ImputerConfig::default(), parallelism: 1 }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("at least one strategy is required".into()));
        }
        if self.parallelism < 1 {
            return Err(Error::InvalidConfig("parallelism must be at least 1".into()));
        }
        self.imputer.em.validate()?;
        self.imputer.mcmc.validate()
    }

    fn canonical_strategies(&self) -> Vec<Strategy> {
        let mut s = self.strategies.clone();
        s.sort();
        s.dedup();
        s
    }
}

/// Pooled estimates, or the error that stopped them, for each requested
/// strategy in one simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub truth: TruthSpec,
    pub outcomes: Vec<(Strategy, Result<Vec<PooledEstimate>>)>,
}

impl ReplicationRecord {
    pub fn outcome(&self, s: Strategy) -> Option<&Result<Vec<PooledEstimate>>> {
        self.outcomes.iter().find(|(t, _)| *t == s).map(|(_, r)| r)
    }

    /// Estimates for `s`, if it was requested and succeeded.
    pub fn estimates(&self, s: Strategy) -> Option<&[PooledEstimate]> {
        match self.outcome(s) {
            Some(Ok(e)) => Some(e),
            _ => None,
        }
    }
}

/// Generates, masks, imputes and analyzes one dataset. MI and MID share a
/// single set of imputations; DMI imputes separately from its own stream.
pub fn run_replication(
    cell: &ExperimentCell,
    cell_id: u64,
    replication: usize,
    strategies: &[Strategy],
    cfg: &ImputerConfig,
) -> ReplicationRecord {
    let stream = |chain| rng_stream(cell.seed, cell_id, replication as u64, chain);
    let (complete, truth) = generate_complete(cell, &mut stream(chain::GENERATE));
    let mut outcomes = Vec::with_capacity(strategies.len());
    let data = cell
        .rho_yz
        .map_or(Ok(complete.clone()), |r| attach_auxiliary(&complete, &truth, r, &mut stream(chain::AUXILIARY)))
        .and_then(|m| apply_missingness(&m, cell.pattern, cell.p, &mut stream(chain::MASK)));
    let data = match data {
        Ok(d) => d,
        Err(e) => {
            outcomes.extend(strategies.iter().map(|&s| (s, Err(e.clone()))));
            return ReplicationRecord { replication, truth, outcomes };
        }
    };

    let shared = if strategies.iter().any(|s| matches!(s, Strategy::Mi | Strategy::Mid)) {
        Some(multiple_impute(&data, cell.m, &cfg.em, &cfg.mcmc, &mut stream(chain::IMPUTE)))
    } else {
        None
    };
    for &s in strategies {
        let res = match s {
            Strategy::Mi | Strategy::Mid => match shared.as_ref().expect("imputed") {
                Ok(set) if s == Strategy::Mi => analyze_mi(set),
                Ok(set) => run_mid(set),
                Err(e) => Err(e.clone()),
            },
            Strategy::Dmi => run_dmi(&data, cell.m, cfg, &mut stream(chain::IMPUTE_DMI)),
        };
        outcomes.push((s, res.map(|r| r.estimates)));
    }
    ReplicationRecord { replication, truth, outcomes }
}

/// All replications of one cell, in replication order. Runs on the current
/// rayon pool.
pub fn run_cell_records(cell: &ExperimentCell, cell_id: u64, opts: &RunOptions) -> Result<Vec<ReplicationRecord>> {
    cell.validate()?;
    opts.validate()?;
    let strategies = opts.canonical_strategies();
    Ok((0..cell.d).into_par_iter().map(|r| run_replication(cell, cell_id, r, &strategies, &opts.imputer)).collect())
}

/// Per-parameter summary of one strategy over its successful replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub coverage: Proportion,
    pub mean_estimate: f64,
    pub mean_ci_length: f64,
    pub median_abs_err: f64,
    pub mean_w_bar: f64,
    pub mean_b: f64,
    pub mean_gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub successes: usize,
    pub failures: usize,
    pub params: Vec<ParamSummary>,
}

/// One strategy against a reference for one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub reference: Strategy,
    pub other: Strategy,
    pub parameter: usize,
    pub sample: PairedSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub cell: ExperimentCell,
    pub cell_id: u64,
    pub parameters: Vec<String>,
    pub truth: [f64; 4],
    pub replications: usize,
    pub strategies: Vec<StrategySummary>,
    pub comparisons: Vec<Comparison>,
}

impl CellMetrics {
    pub fn strategy(&self, s: Strategy) -> Option<&StrategySummary> {
        self.strategies.iter().find(|x| x.strategy == s)
    }

    pub fn comparison(&self, reference: Strategy, other: Strategy, parameter: usize) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.reference == reference && c.other == other && c.parameter == parameter)
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Paired differences of `other` against `reference` for one parameter,
/// over replications where both succeeded.
pub fn paired_sample(
    records: &[ReplicationRecord],
    reference: Strategy,
    other: Strategy,
    parameter: usize,
) -> PairedSample {
    let mut sample = PairedSample::default();
    for rec in records {
        if let (Some(a), Some(b)) = (rec.estimates(reference), rec.estimates(other)) {
            sample.push(&a[parameter], &b[parameter], rec.truth.parameters()[parameter]);
        }
    }
    sample
}

fn summarize_strategy(records: &[ReplicationRecord], s: Strategy) -> StrategySummary {
    let ok: Vec<(&[PooledEstimate], [f64; 4])> =
        records.iter().filter_map(|r| r.estimates(s).map(|e| (e, r.truth.parameters()))).collect();
    let params = (0..PARAMETERS.len())
        .map(|j| {
            let est = || ok.iter().map(move |(e, _)| &e[j]);
            let abs_err: Vec<f64> = ok.iter().map(|(e, t)| (e[j].theta_bar - t[j]).abs()).collect();
            ParamSummary {
                coverage: Proportion {
                    successes: ok.iter().filter(|(e, t)| e[j].covers(t[j])).count(),
                    trials: ok.len(),
                },
                mean_estimate: mean(est().map(|e| e.theta_bar)),
                mean_ci_length: mean(est().map(|e| e.ci_length())),
                median_abs_err: median(&abs_err).unwrap_or(f64::NAN),
                mean_w_bar: mean(est().map(|e| e.w_bar)),
                mean_b: mean(est().map(|e| e.b)),
                mean_gamma: mean(est().map(|e| e.gamma)),
            }
        })
        .collect();
    StrategySummary { strategy: s, successes: ok.len(), failures: records.len() - ok.len(), params }
}

/// Aggregates replication records into per-strategy summaries and every
/// pairwise comparison among the requested strategies.
pub fn summarize(cell: &ExperimentCell, cell_id: u64, records: &[ReplicationRecord], opts: &RunOptions) -> CellMetrics {
    let strategies = opts.canonical_strategies();
    let truth = TruthSpec::new(cell.rho12, cell.r2).parameters();
    let summaries = strategies.iter().map(|&s| summarize_strategy(records, s)).collect();
    let mut comparisons = Vec::new();
    for (a, &reference) in strategies.iter().enumerate() {
        for &other in &strategies[a + 1..] {
            for parameter in 0..PARAMETERS.len() {
                let sample = paired_sample(records, reference, other, parameter);
                comparisons.push(Comparison { reference, other, parameter, sample });
            }
        }
    }
    CellMetrics {
        cell: cell.clone(),
        cell_id,
        parameters: PARAMETERS.iter().map(|s| s.to_string()).collect(),
        truth,
        replications: records.len(),
        strategies: summaries,
        comparisons,
    }
}

/// Runs every replication of `cell`, keyed by `cell.seed` and `cell_id`.
pub fn run_cell(cell: &ExperimentCell, cell_id: u64, opts: &RunOptions) -> Result<CellMetrics> {
    let records = run_cell_records(cell, cell_id, opts)?;
    Ok(summarize(cell, cell_id, &records, opts))
}

/// β₁ comparison of MID against MI, collapsed over every factor except the
/// deletion rate, the number of imputations and the auxiliary correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub p: f64,
    pub m: usize,
    pub rho_yz: Option<f64>,
    pub sample: PairedSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub cells: Vec<CellMetrics>,
    pub plot: Vec<PlotRow>,
}

/// Runs every cell with `master_seed` in place of the cells' own seeds; cell
/// `i` draws from streams keyed by `(master_seed, i)`. Output does not depend
/// on `opts.parallelism`.
pub fn run_grid(grid: &[ExperimentCell], master_seed: u64, opts: &RunOptions) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("the grid has no cells".into()));
    }
    opts.validate()?;
    for c in grid {
        c.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {} worker threads: {e}", opts.parallelism)))?;
    let strategies = opts.canonical_strategies();
    let plot_pair = strategies.contains(&Strategy::Mi) && strategies.contains(&Strategy::Mid);

    let mut cells = Vec::with_capacity(grid.len());
    let mut plot: Vec<PlotRow> = Vec::new();
    for (i, c) in grid.iter().enumerate() {
        let cell = ExperimentCell { seed: master_seed, ..c.clone() };
        let records = pool.install(|| run_cell_records(&cell, i as u64, opts))?;
        if plot_pair {
            let sample = paired_sample(&records, Strategy::Mi, Strategy::Mid, 1);
            match plot.iter_mut().find(|r| r.p == cell.p && r.m == cell.m && r.rho_yz == cell.rho_yz) {
                Some(row) => row.sample.extend(&sample),
                None => plot.push(PlotRow { p: cell.p, m: cell.m, rho_yz: cell.rho_yz, sample }),
            }
        }
        cells.push(summarize(&cell, i as u64, &records, opts));
    }
    plot.sort_by(|a, b| {
        a.rho_yz.unwrap_or(-1.0).total_cmp(&b.rho_yz.unwrap_or(-1.0)).then(a.p.total_cmp(&b.p)).then(a.m.cmp(&b.m))
    });
    Ok(GridResult { cells, plot })
}
