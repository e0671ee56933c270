use midlab_core::sim::{run_cell_records, run_replication, ReplicationRecord, RunOptions, PARAMETERS};
use midlab_core::{ExperimentCell, ImputerConfig, MissingPattern, Strategy};

fn cell(p: f64, pattern: MissingPattern, d: usize, seed: u64) -> ExperimentCell {
    ExperimentCell { n: 200, rho12: 0.5, r2: 0.5, p, pattern, m: 5, rho_yz: None, d, seed }
}

fn all() -> RunOptions {
    RunOptions { strategies: Strategy::ALL.to_vec(), ..RunOptions::default() }
}

/// Mean estimate and its Monte Carlo standard error.
fn mean_and_se(records: &[ReplicationRecord], s: Strategy, j: usize) -> (f64, f64, usize) {
    let v: Vec<f64> = records.iter().filter_map(|r| r.estimates(s).map(|e| e[j].theta_bar)).collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt(), v.len())
}

#[test]
fn every_strategy_is_unbiased_under_mcar() {
    let c = cell(0.2, MissingPattern::Mcar, 200, 41);
    let records = run_cell_records(&c, 0, &all()).unwrap();
    let truth = records[0].truth.parameters();
    for s in Strategy::ALL {
        for j in 0..3 {
            let (mean, se, n) = mean_and_se(&records, s, j);
            assert_eq!(n, 200, "{s} failed on some replications");
            assert!(
                (mean - truth[j]).abs() < 4.0 * se,
                "{s} {}: mean {mean} truth {} se {se}",
                PARAMETERS[j],
                truth[j]
            );
        }
    }
}

#[test]
fn mid_keeps_only_rows_with_observed_outcome() {
    let c = cell(0.5, MissingPattern::Coordinated, 1, 42);
    let opts = RunOptions::default();
    let rec = run_replication(&c, 0, 0, &[Strategy::Mi, Strategy::Mid], &opts.imputer);
    let mi = rec.estimates(Strategy::Mi).unwrap();
    let mid = rec.estimates(Strategy::Mid).unwrap();
    // nu_com = n_analyzed - 3 for both
    assert_eq!(mi[0].nu_com, 197);
    assert!(mid[0].nu_com < mi[0].nu_com);
    assert!(mid[0].nu_com > 60);
}

#[test]
fn replications_are_reproducible() {
    let c = cell(0.5, MissingPattern::Complementary, 1, 43);
    let cfg = ImputerConfig::default();
    let a = run_replication(&c, 3, 9, &Strategy::ALL, &cfg);
    let b = run_replication(&c, 3, 9, &Strategy::ALL, &cfg);
    assert_eq!(a, b);
    let other = run_replication(&c, 3, 10, &Strategy::ALL, &cfg);
    assert_ne!(a.estimates(Strategy::Mi), other.estimates(Strategy::Mi));
}

#[test]
fn adding_dmi_leaves_mi_and_mid_unchanged() {
    let c = cell(0.2, MissingPattern::Mcar, 1, 44);
    let cfg = ImputerConfig::default();
    let pair = run_replication(&c, 0, 0, &[Strategy::Mi, Strategy::Mid], &cfg);
    let full = run_replication(&c, 0, 0, &Strategy::ALL, &cfg);
    for s in [Strategy::Mi, Strategy::Mid] {
        assert_eq!(pair.estimates(s), full.estimates(s));
    }
}

#[test]
fn mid_intervals_are_shorter_with_few_imputations_and_heavy_missingness() {
    let c = ExperimentCell { m: 2, ..cell(0.5, MissingPattern::Mcar, 200, 45) };
    let records = run_cell_records(&c, 0, &RunOptions::default()).unwrap();
    let s = midlab_core::sim::paired_sample(&records, Strategy::Mi, Strategy::Mid, 1);
    assert!(s.median_pct_length().unwrap() < 0.0);
}
