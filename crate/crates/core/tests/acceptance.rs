//! Acceptance checks. Runs as a plain binary so each criterion prints one
//! PASS/FAIL line whether or not output is captured. Set
//! `MIDLAB_ACCEPTANCE=3,7` to run a subset.

use std::time::Instant;

use midlab_core::pooling::{degrees_of_freedom, pool_scalar, se_inflation_pct};
use midlab_core::sim::{
    apply_missingness, generate_complete, run_cell_records, run_grid, write_grid_result, GridResult, GridSpec,
    PairedSample, RunOptions, Y,
};
use midlab_core::strategies::{analyze_mi, run_mid};
use midlab_core::{
    fit_ols, multiple_impute, rng_stream, ColumnRole, EmConfig, ExperimentCell, ImputerConfig, IncompleteDataset,
    McmcConfig, MissingPattern, Strategy,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const INTERCEPT: usize = 0;
const BETA1: usize = 1;

type Criterion = (u32, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}

fn opts(strategies: Vec<Strategy>) -> RunOptions {
    RunOptions { strategies, imputer: ImputerConfig::default(), parallelism: 1 }
}

fn cell(n: usize, p: f64, pattern: MissingPattern, m: usize, d: usize, seed: u64) -> ExperimentCell {
    ExperimentCell { n, rho12: 0.5, r2: 0.5, p, pattern, m, rho_yz: None, d, seed }
}

/// Paired sample for one comparison and parameter, pooled over every cell.
fn pooled(result: &GridResult, reference: Strategy, other: Strategy, parameter: usize) -> PairedSample {
    let mut s = PairedSample::default();
    for c in &result.cells {
        s.extend(&c.comparison(reference, other, parameter).expect("comparison present").sample);
    }
    s
}

fn reduced_grid(p: f64, m: usize, rho_yz: Option<f64>, d: usize) -> Vec<ExperimentCell> {
    GridSpec {
        n: vec![200],
        rho12: vec![0.5],
        r2: vec![0.2, 0.5, 0.8],
        p: vec![p],
        pattern: MissingPattern::ALL.to_vec(),
        m: vec![m],
        rho_yz: vec![rho_yz],
        d,
    }
    .cells(0)
    .expect("valid grid")
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn c1_pooling_fixture() -> Verdict {
    let p = pool_scalar(&[1.0, 3.0], &[1.0, 1.0], 100, 0.95).unwrap();
    let (nu_imp, nu_obs, nu) = degrees_of_freedom(0.75, 2, 100);
    let hand_nu_obs = 101.0 / 103.0 * 100.0 * 0.25;
    let hand_nu = 1.0 / (9.0 / 16.0 + 1.0 / hand_nu_obs);
    let checks = [
        (p.theta_bar, 2.0),
        (p.w_bar, 1.0),
        (p.b, 3.0),
        (p.t, 4.0),
        (p.gamma, 0.75),
        (p.nu_imp, 16.0 / 9.0),
        (p.nu_obs, hand_nu_obs),
        (p.nu, hand_nu),
        (nu_imp, 16.0 / 9.0),
        (nu_obs, hand_nu_obs),
        (nu, hand_nu),
    ];
    let exact = checks.iter().all(|&(a, b)| rel_close(a, b, 1e-9));
    let printed = [(p.nu_imp, 1.778), (p.nu_obs, 24.515), (p.nu, 1.658)].iter().all(|&(a, b)| (a - b).abs() < 5e-4);
    verdict(
        exact && printed,
        format!(
            "theta={} W={} B={} T={} gamma={} nu_imp={:.4} nu_obs={:.4} nu={:.4}",
            p.theta_bar, p.w_bar, p.b, p.t, p.gamma, p.nu_imp, p.nu_obs, p.nu
        ),
    )
}

fn c2_se_inflation() -> Verdict {
    let a = se_inflation_pct(0.5, 5);
    let b = se_inflation_pct(0.2, 2);
    verdict(a == 5.0 && b == 5.0, format!("(0.5,5) -> {a}%, (0.2,2) -> {b}%"))
}

fn c3_two_imputation_coverage() -> Verdict {
    let c = cell(200, 0.5, MissingPattern::Mcar, 2, 2000, 20_003);
    let records = run_cell_records(&c, 0, &opts(vec![Strategy::Mi])).unwrap();
    let ok: Vec<_> =
        records.iter().filter_map(|r| r.estimates(Strategy::Mi).map(|e| (e[INTERCEPT], r.truth.alpha))).collect();
    let covered = ok.iter().filter(|(e, t)| e.covers(*t)).count();
    let rate = 100.0 * covered as f64 / ok.len() as f64;
    let gamma = ok.iter().map(|(e, _)| e.gamma).sum::<f64>() / ok.len() as f64;
    verdict(
        (90.0..=94.0).contains(&rate),
        format!(
            "MI intercept coverage {rate:.2}% over {} reps (mean gamma {gamma:.3}, {} failures)",
            ok.len(),
            records.len() - ok.len()
        ),
    )
}

fn c4_reduced_grid_high_missingness() -> Verdict {
    let res = run_grid(&reduced_grid(0.5, 2, None, 500), 20_004, &opts(vec![Strategy::Mi, Strategy::Mid])).unwrap();
    let s = pooled(&res, Strategy::Mi, Strategy::Mid, INTERCEPT);
    let (mi, mid) = (100.0 * s.coverage_ref().rate(), 100.0 * s.coverage_other().rate());
    let len = s.median_pct_length().unwrap();
    let err = s.median_pct_abs_err().unwrap();
    verdict(
        mid - mi >= 2.0 && (-34.0..=-18.0).contains(&len) && err < 0.0,
        format!(
            "intercept: coverage MI {mi:.2}% MID {mid:.2}% (+{:.2} pts), median length {len:.2}%, median abs err {err:.2}% ({} pairs)",
            mid - mi,
            s.n_pairs
        ),
    )
}

fn c5_reduced_grid_low_missingness() -> Verdict {
    let res = run_grid(&reduced_grid(0.2, 10, None, 500), 20_005, &opts(vec![Strategy::Mi, Strategy::Mid])).unwrap();
    let s = pooled(&res, Strategy::Mi, Strategy::Mid, BETA1);
    let (mi, mid) = (100.0 * s.coverage_ref().rate(), 100.0 * s.coverage_other().rate());
    let len = s.median_pct_length().unwrap();
    verdict(
        (mi - 94.9).abs() <= 2.0 && (mid - 95.0).abs() <= 2.0 && (-4.0..=2.0).contains(&len),
        format!("beta1: coverage MI {mi:.2}% MID {mid:.2}%, median length {len:.2}% ({} pairs)", s.n_pairs),
    )
}

fn c6_orderings() -> Verdict {
    let c = cell(200, 0.5, MissingPattern::Mcar, 5, 500, 20_006);
    let records = run_cell_records(&c, 0, &opts(vec![Strategy::Mi, Strategy::Mid])).unwrap();
    let pairs: Vec<_> =
        records.iter().filter_map(|r| Some((r.estimates(Strategy::Mi)?, r.estimates(Strategy::Mid)?))).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (j, name) in ["intercept", "x1", "x2", "sigma2"].iter().enumerate() {
        let diff = |f: &dyn Fn(&midlab_core::PooledEstimate) -> f64, mi_minus_mid: bool| {
            let v: Vec<f64> = pairs
                .iter()
                .map(|(a, b)| if mi_minus_mid { f(&a[j]) - f(&b[j]) } else { f(&b[j]) - f(&a[j]) })
                .collect();
            let (m, se) = mean_se(&v);
            m / se
        };
        let zw = diff(&|e| e.w_bar, false);
        let zb = diff(&|e| e.b, true);
        let zg = diff(&|e| e.gamma, true);
        pass &= zw > 2.0 && zb > 2.0 && zg > 2.0;
        parts.push(format!("{name} z(W)={zw:.1} z(B)={zb:.1} z(gamma)={zg:.1}"));
    }
    verdict(pass, format!("{} pairs; {}", pairs.len(), parts.join("; ")))
}

fn c7_asymptotic_agreement() -> Verdict {
    let c = cell(200, 0.2, MissingPattern::Mcar, 200, 1, 20_007);
    let (complete, _) = generate_complete(&c, &mut rng_stream(c.seed, 0, 0, 0));
    let data = apply_missingness(&complete, c.pattern, c.p, &mut rng_stream(c.seed, 0, 0, 1)).unwrap();
    let com = fit_ols(&complete, Y, &[0, 1]).unwrap();
    let set =
        multiple_impute(&data, c.m, &EmConfig::default(), &McmcConfig::default(), &mut rng_stream(c.seed, 0, 0, 3))
            .unwrap();
    let (mi, mid) = (analyze_mi(&set).unwrap(), run_mid(&set).unwrap());
    let mut pass = true;
    let mut parts = Vec::new();
    for j in 0..4 {
        let (a, b) = (&mi.estimates[j], &mid.estimates[j]);
        let dtheta = (a.theta_bar - b.theta_bar).abs() / com.w_hat[j].sqrt();
        let dse = (a.se() - b.se()).abs() / b.se();
        pass &= dtheta < 0.02 && dse < 0.05;
        parts.push(format!("{} dtheta={:.2}%SE dse={:.2}%", mi.parameters[j], 100.0 * dtheta, 100.0 * dse));
    }
    verdict(pass, parts.join("; "))
}

fn sign_test(s: &PairedSample) -> (f64, f64) {
    let untied = (s.other_closer + s.ref_closer) as f64;
    (s.frac_other_closer(), (0.25 / untied).sqrt())
}

fn c8_auxiliary_tipping() -> Verdict {
    let run = |m, rho, seed| {
        let res =
            run_grid(&reduced_grid(0.5, m, Some(rho), 500), seed, &opts(vec![Strategy::Mi, Strategy::Mid])).unwrap();
        pooled(&res, Strategy::Mi, Strategy::Mid, BETA1)
    };
    let describe = |s: &PairedSample| {
        let (f, se) = sign_test(s);
        format!(
            "MID closer in {:.1}% (SE {:.1}), median abs err {:.2}%, coverage MID-MI {:+.2} pts",
            100.0 * f,
            100.0 * se,
            s.median_pct_abs_err().unwrap_or(f64::NAN),
            100.0 * (s.coverage_other().rate() - s.coverage_ref().rate())
        )
    };
    let a = run(2, 0.1, 20_008);
    let b = run(10, 0.9, 20_018);
    let (fa, sea) = sign_test(&a);
    let (fb, seb) = sign_test(&b);
    verdict(
        fa - 0.5 > 2.0 * sea && 0.5 - fb > 2.0 * seb,
        format!("(a) rho_yz=.1 M=2: {}; (b) rho_yz=.9 M=10: {}", describe(&a), describe(&b)),
    )
}

fn c9_dmi_degradation() -> Verdict {
    let grid = GridSpec {
        n: vec![50, 200],
        rho12: vec![0.5],
        r2: vec![0.5],
        p: vec![0.5],
        pattern: vec![MissingPattern::Complementary],
        m: vec![2, 5, 10],
        rho_yz: vec![None],
        d: 2000,
    };
    let res = run_grid(&grid.cells(0).unwrap(), 20_009, &opts(Strategy::ALL.to_vec())).unwrap();
    let failures = |s| res.cells.iter().map(|c| c.strategy(s).unwrap().failures).sum::<usize>();
    let total: usize = res.cells.iter().map(|c| c.replications).sum();
    let rate = 100.0 * failures(Strategy::Dmi) as f64 / total as f64;
    let by_n: Vec<String> = [50, 200]
        .iter()
        .map(|&n| {
            let cells = res.cells.iter().filter(|c| c.cell.n == n);
            let f: usize = cells.clone().map(|c| c.strategy(Strategy::Dmi).unwrap().failures).sum();
            let t: usize = cells.map(|c| c.replications).sum();
            format!("N={n} {f}/{t}")
        })
        .collect();
    let lengths: Vec<f64> =
        (0..4).map(|j| pooled(&res, Strategy::Mid, Strategy::Dmi, j).median_pct_length().unwrap()).collect();
    verdict(
        rate > 0.0 && rate <= 1.0 && lengths.iter().all(|&l| l >= 0.0),
        format!(
            "DMI failures {}/{total} = {rate:.2}% ({}; MI/MID {}), median DMI-vs-MID length {:.2}% / {:.2}% / {:.2}% / {:.2}%",
            failures(Strategy::Dmi),
            by_n.join(", "),
            failures(Strategy::Mi),
            lengths[0],
            lengths[1],
            lengths[2],
            lengths[3]
        ),
    )
}

fn c10_imputer_propriety() -> Verdict {
    let (n, m, d, seed) = (200usize, 5usize, 500usize, 20_010u64);
    let rho: f64 = 0.5;
    let mut covered = [0usize; 2];
    let mut ok = 0usize;
    for r in 0..d as u64 {
        let mut gen = rng_stream(seed, 0, r, 0);
        let mut values = DMatrix::zeros(n, 2);
        for i in 0..n {
            let (z1, z2): (f64, f64) = (StandardNormal.sample(&mut gen), StandardNormal.sample(&mut gen));
            values[(i, 0)] = z1;
            values[(i, 1)] = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
        }
        let mut mrng = rng_stream(seed, 0, r, 1);
        let mask = DMatrix::from_fn(n, 2, |_, _| mrng.random::<f64>() < 0.3);
        let data = IncompleteDataset::new(
            values,
            mask,
            vec!["a".into(), "b".into()],
            vec![ColumnRole::Predictor, ColumnRole::Outcome],
        )
        .unwrap();
        let Ok(set) =
            multiple_impute(&data, m, &EmConfig::default(), &McmcConfig::default(), &mut rng_stream(seed, 0, r, 3))
        else {
            continue;
        };
        ok += 1;
        for (j, hit) in covered.iter_mut().enumerate() {
            let (mut est, mut var) = (Vec::new(), Vec::new());
            for c in set.completed() {
                let col = c.column(j);
                let mean = col.mean();
                let s2 = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                est.push(mean);
                var.push(s2 / n as f64);
            }
            let p = pool_scalar(&est, &var, n - 1, 0.95).unwrap();
            *hit += p.covers(0.0) as usize;
        }
    }
    let rates = covered.map(|c| 100.0 * c as f64 / ok as f64);
    verdict(
        rates.iter().all(|r| (r - 95.0).abs() <= 3.0),
        format!("mu coverage {:.2}% / {:.2}% over {ok} of {d} reps", rates[0], rates[1]),
    )
}

fn c11_determinism() -> Verdict {
    let cells = GridSpec::smoke().cells(0).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut outputs = Vec::new();
    for (dir, threads) in dirs.iter().zip([1, 8]) {
        let res = run_grid(&cells, 20_011, &RunOptions { parallelism: threads, ..RunOptions::default() }).unwrap();
        let prefix = dir.path().join("smoke");
        let files = write_grid_result(prefix.to_str().unwrap(), &res).unwrap();
        outputs.push(files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    let same = outputs[0] == outputs[1];
    verdict(
        same,
        format!(
            "{} files, {} bytes at parallelism 1 and 8",
            outputs[0].len(),
            outputs[0].iter().map(Vec::len).sum::<usize>()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "pooling fixture", c1_pooling_fixture),
        (2, "standard error inflation", c2_se_inflation),
        (3, "coverage with two imputations", c3_two_imputation_coverage),
        (4, "reduced grid, p=.5, M=2", c4_reduced_grid_high_missingness),
        (5, "reduced grid, p=.2, M=10", c5_reduced_grid_low_missingness),
        (6, "variance orderings", c6_orderings),
        (7, "agreement at M=200", c7_asymptotic_agreement),
        (8, "auxiliary variable tipping", c8_auxiliary_tipping),
        (9, "DMI under complementary deletion", c9_dmi_degradation),
        (10, "imputer propriety", c10_imputer_propriety),
        (11, "determinism across thread counts", c11_determinism),
    ];
    let only: Option<Vec<u32>> =
        std::env::var("MIDLAB_ACCEPTANCE").ok().map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} [{name}] {} ({:.1}s)", v.detail, start.elapsed().as_secs_f64());
        if !v.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
