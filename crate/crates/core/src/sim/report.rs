//! Tidy CSV tables for simulation results.

use std::io::Write;

use super::metrics::{PairedSample, Proportion};
use super::runner::{CellMetrics, GridResult, PlotRow};
use crate::error::{Error, Result};
use crate::io::fmt_num;

fn num(x: f64) -> String {
    if x.is_finite() {
        fmt_num(x)
    } else {
        String::new()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

const METRIC_HEADERS: [&str; 29] = [
    "cell_id",
    "n",
    "rho12",
    "r2",
    "p",
    "pattern",
    "m",
    "rho_yz",
    "d",
    "parameter",
    "truth",
    "reference",
    "other",
    "ref_failures",
    "other_failures",
    "n_pairs",
    "coverage_ref",
    "coverage_ref_se",
    "coverage_other",
    "coverage_other_se",
    "mean_length_ref",
    "mean_length_other",
    "median_pct_length",
    "excluded_length",
    "median_pct_abs_err",
    "excluded_abs_err",
    "frac_other_closer",
    "mean_gamma_ref",
    "mean_gamma_other",
];

fn cell_prefix(c: &CellMetrics) -> Vec<String> {
    let cell = &c.cell;
    vec![
        c.cell_id.to_string(),
        cell.n.to_string(),
        num(cell.rho12),
        num(cell.r2),
        num(cell.p),
        cell.pattern.to_string(),
        cell.m.to_string(),
        opt(cell.rho_yz),
        cell.d.to_string(),
    ]
}

fn prop_cells(p: Proportion) -> [String; 2] {
    [num(p.rate()), num(p.se())]
}

/// One row per cell, parameter and strategy pair. A cell run with a single
/// strategy gets one row per parameter with the comparison columns empty.
pub fn write_metrics<W: Write>(writer: W, cells: &[CellMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METRIC_HEADERS)?;
    for c in cells {
        let summary = |s| c.strategy(s).expect("summary for every strategy");
        if c.comparisons.is_empty() {
            for st in &c.strategies {
                for (j, name) in c.parameters.iter().enumerate() {
                    let ps = &st.params[j];
                    let mut rec = cell_prefix(c);
                    rec.extend([name.clone(), num(c.truth[j]), st.strategy.to_string(), String::new()]);
                    rec.extend([st.failures.to_string(), String::new(), st.successes.to_string()]);
                    rec.extend(prop_cells(ps.coverage));
                    rec.extend([String::new(), String::new(), num(ps.mean_ci_length)]);
                    rec.extend(std::iter::repeat_n(String::new(), 6));
                    rec.extend([num(ps.mean_gamma), String::new()]);
                    w.write_record(&rec)?;
                }
            }
            continue;
        }
        for cmp in &c.comparisons {
            let (r, o) = (summary(cmp.reference), summary(cmp.other));
            let (pr, po) = (&r.params[cmp.parameter], &o.params[cmp.parameter]);
            let s = &cmp.sample;
            let mut rec = cell_prefix(c);
            rec.extend([
                c.parameters[cmp.parameter].clone(),
                num(c.truth[cmp.parameter]),
                cmp.reference.to_string(),
                cmp.other.to_string(),
                r.failures.to_string(),
                o.failures.to_string(),
                s.n_pairs.to_string(),
            ]);
            rec.extend(prop_cells(s.coverage_ref()));
            rec.extend(prop_cells(s.coverage_other()));
            rec.extend([
                num(pr.mean_ci_length),
                num(po.mean_ci_length),
                opt(s.median_pct_length()),
                s.excluded_length.to_string(),
                opt(s.median_pct_abs_err()),
                s.excluded_abs_err.to_string(),
                num(s.frac_other_closer()),
                num(pr.mean_gamma),
                num(po.mean_gamma),
            ]);
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

fn plot_record(row: &PlotRow, with_rho: bool) -> Vec<String> {
    let s: &PairedSample = &row.sample;
    let mut rec = vec![num(row.p), row.m.to_string()];
    if with_rho {
        rec.push(opt(row.rho_yz));
    }
    rec.extend([
        s.n_pairs.to_string(),
        opt(s.median_pct_length()),
        opt(s.median_pct_abs_err()),
        num(s.coverage_ref().rate()),
        num(s.coverage_other().rate()),
        num(100.0 * (s.coverage_other().rate() - s.coverage_ref().rate())),
        num(s.frac_other_closer()),
    ]);
    rec
}

/// β₁ panels of MID against MI. `auxiliary` selects rows with an auxiliary
/// variable (keyed additionally by its correlation with Y) or rows without.
pub fn write_plot<W: Write>(writer: W, rows: &[PlotRow], auxiliary: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut headers = vec!["p", "m"];
    if auxiliary {
        headers.push("rho_yz");
    }
    headers.extend([
        "n_pairs",
        "median_pct_length",
        "median_pct_abs_err",
        "coverage_mi",
        "coverage_mid",
        "coverage_diff_pts",
        "frac_mid_closer",
    ]);
    w.write_record(&headers)?;
    for row in rows.iter().filter(|r| r.rho_yz.is_some() == auxiliary) {
        w.write_record(plot_record(row, auxiliary))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// Writes `<prefix>_metrics.csv`, `<prefix>_plot.csv` and, when the grid has
/// auxiliary cells, `<prefix>_plot_aux.csv`. Returns the paths written.
pub fn write_grid_result(prefix: &str, result: &GridResult) -> Result<Vec<String>> {
    let create = |path: &str| {
        std::fs::File::create(path).map(std::io::BufWriter::new).map_err(|e| Error::Csv(format!("{path}: {e}")))
    };
    let mut written = Vec::new();
    let metrics = format!("{prefix}_metrics.csv");
    write_metrics(create(&metrics)?, &result.cells)?;
    written.push(metrics);
    let has_plain = result.cells.iter().any(|c| c.cell.rho_yz.is_none());
    let has_aux = result.cells.iter().any(|c| c.cell.rho_yz.is_some());
    if has_plain {
        let path = format!("{prefix}_plot.csv");
        write_plot(create(&path)?, &result.plot, false)?;
        written.push(path);
    }
    if has_aux {
        let path = format!("{prefix}_plot_aux.csv");
        write_plot(create(&path)?, &result.plot, true)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ExperimentCell, MissingPattern};
    use crate::imputer::McmcConfig;
    use crate::sim::runner::{run_grid, RunOptions};
    use crate::strategies::{ImputerConfig, Strategy};

    fn grid(rho_yz: Option<f64>) -> Vec<ExperimentCell> {
        vec![ExperimentCell {
            n: 50,
            rho12: 0.5,
            r2: 0.5,
            p: 0.2,
            pattern: MissingPattern::Mcar,
            m: 2,
            rho_yz,
            d: 4,
            seed: 0,
        }]
    }

    fn opts(strategies: Vec<Strategy>) -> RunOptions {
        RunOptions {
            strategies,
            imputer: ImputerConfig { mcmc: McmcConfig { burn_in: 20 }, ..Default::default() },
            parallelism: 1,
        }
    }

    fn lines(buf: &[u8]) -> Vec<String> {
        String::from_utf8(buf.to_vec()).unwrap().lines().map(str::to_string).collect()
    }

    #[test]
    fn one_row_per_parameter_for_a_pair() {
        let res = run_grid(&grid(None), 3, &opts(vec![Strategy::Mi, Strategy::Mid])).unwrap();
        let mut buf = Vec::new();
        write_metrics(&mut buf, &res.cells).unwrap();
        let l = lines(&buf);
        assert_eq!(l.len(), 5);
        assert_eq!(l[0].split(',').count(), METRIC_HEADERS.len());
        assert!(l[1].contains(",intercept,") && l[4].contains(",sigma2,"));
        assert!(l[1..].iter().all(|r| r.split(',').count() == METRIC_HEADERS.len()));
    }

    #[test]
    fn all_three_strategies_give_three_pairs() {
        let res = run_grid(&grid(None), 3, &opts(Strategy::ALL.to_vec())).unwrap();
        let mut buf = Vec::new();
        write_metrics(&mut buf, &res.cells).unwrap();
        assert_eq!(lines(&buf).len(), 1 + 3 * 4);
    }

    #[test]
    fn single_strategy_rows() {
        let res = run_grid(&grid(None), 3, &opts(vec![Strategy::Dmi])).unwrap();
        let mut buf = Vec::new();
        write_metrics(&mut buf, &res.cells).unwrap();
        let l = lines(&buf);
        assert_eq!(l.len(), 5);
        assert!(l[1].contains(",dmi,,"));
        assert!(res.plot.is_empty());
    }

    #[test]
    fn plot_split_by_auxiliary() {
        let res = run_grid(&grid(Some(0.5)), 3, &opts(vec![Strategy::Mi, Strategy::Mid])).unwrap();
        let (mut plain, mut aux) = (Vec::new(), Vec::new());
        write_plot(&mut plain, &res.plot, false).unwrap();
        write_plot(&mut aux, &res.plot, true).unwrap();
        assert_eq!(lines(&plain).len(), 1);
        let a = lines(&aux);
        assert_eq!(a.len(), 2);
        assert!(a[0].starts_with("p,m,rho_yz,"));
    }
}
