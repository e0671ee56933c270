use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use midlab_core::io::{read_mask, write_mask, write_matrix, ColumnSpec, RawTable};
use midlab_core::pooling::{pool_scalar, DEFAULT_LEVEL};
use midlab_core::sim::{chain, run_grid, write_grid_result, GridSpec, RunOptions};
use midlab_core::strategies::{analyze_mi_at_level, run_dmi_at_level, run_mid_at_level};
use midlab_core::{
    multiple_impute, rng_stream, EmConfig, ImputationSet, ImputerConfig, McmcConfig, MissingPattern, PooledEstimate,
    Strategy,
};
use nalgebra::DMatrix;

use crate::config::Settings;
use crate::CliError;

pub const IMPUTE_KEYS: &[&str] =
    &["input", "out", "outcome", "predictors", "auxiliary", "m", "seed", "burn_in", "max_iter", "tol", "ridge"];
pub const ANALYZE_KEYS: &[&str] = &[
    "input",
    "out",
    "outcome",
    "predictors",
    "auxiliary",
    "mask",
    "m",
    "seed",
    "burn_in",
    "strategy",
    "level",
    "max_iter",
    "tol",
    "ridge",
];
pub const SIMULATE_KEYS: &[&str] = &[
    "out",
    "m",
    "seed",
    "burn_in",
    "strategy",
    "d",
    "parallelism",
    "preset",
    "n",
    "rho12",
    "r2",
    "p",
    "pattern",
    "rho_yz",
    "max_iter",
    "tol",
    "ridge",
];

const DEFAULT_M: usize = 5;

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn create(path: &str) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Runtime(format!("cannot create {path}: {e}")))
}

fn read_table(path: &str) -> Result<RawTable, CliError> {
    if !Path::new(path).is_file() {
        return Err(CliError::Invalid(format!("{path}: no such file")));
    }
    Ok(RawTable::from_path(Path::new(path))?)
}

fn imputer_config(s: &Settings) -> Result<ImputerConfig, CliError> {
    let d = EmConfig::default();
    let em = EmConfig {
        max_iter: s.parse_or("max_iter", d.max_iter)?,
        tol: s.parse_or("tol", d.tol)?,
        ridge: s.parse_or("ridge", d.ridge)?,
    };
    let mcmc = McmcConfig { burn_in: s.parse_or("burn_in", McmcConfig::default().burn_in)? };
    em.validate()?;
    mcmc.validate()?;
    Ok(ImputerConfig { em, mcmc })
}

fn column_spec(s: &Settings, command: &str) -> Result<ColumnSpec, CliError> {
    Ok(ColumnSpec {
        outcome: s.require("outcome", command)?.to_string(),
        predictors: s.list("predictors"),
        auxiliary: s.list("auxiliary"),
    })
}

fn level(s: &Settings) -> Result<f64, CliError> {
    let level = s.parse_or("level", DEFAULT_LEVEL)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::Invalid(format!("level = {level} is outside (0, 1)")));
    }
    Ok(level)
}

pub fn impute(s: &Settings) -> Result<(), CliError> {
    let input = s.require("input", "impute")?;
    let out = s.require("out", "impute")?;
    let spec = column_spec(s, "impute")?;
    let m: usize = s.parse_or("m", DEFAULT_M)?;
    let seed: u64 = s.parse_or("seed", 0)?;
    let cfg = imputer_config(s)?;

    let table = read_table(input)?;
    let (data, cols) = spec.dataset(&table)?;
    let set = multiple_impute(&data, m, &cfg.em, &cfg.mcmc, &mut rng_stream(seed, 0, 0, chain::IMPUTE))?;

    let headers = data.column_names();
    let raw = |i: usize, j: usize| (!data.is_missing(i, j)).then(|| table.rows[i][cols[j]].clone());
    for (k, completed) in set.completed().iter().enumerate() {
        let path = format!("{out}_imp{}.csv", k + 1);
        write_matrix(create(&path)?, headers, completed, None, Some(&raw)).map_err(runtime)?;
        println!("{path}");
    }
    let path = format!("{out}_mask.csv");
    write_mask(create(&path)?, headers, data.mask()).map_err(runtime)?;
    println!("{path}");
    Ok(())
}

/// Reads `<prefix>_imp1.csv`, `<prefix>_imp2.csv`, ... (all `m` of them when
/// given, else as many as exist) and the mask.
fn load_set(s: &Settings, prefix: &str, spec: &ColumnSpec) -> Result<ImputationSet, CliError> {
    let m: Option<usize> = s.parse_opt("m")?;
    let mut tables = Vec::new();
    loop {
        let k = tables.len() + 1;
        let path = format!("{prefix}_imp{k}.csv");
        match m {
            Some(m) if k > m => break,
            None if !Path::new(&path).is_file() => break,
            _ => tables.push((path.clone(), read_table(&path)?)),
        }
    }
    if tables.is_empty() {
        return Err(CliError::Invalid(format!("no completed files found at {prefix}_imp1.csv")));
    }
    let mask_path = s.get("mask").map_or_else(|| format!("{prefix}_mask.csv"), str::to_string);
    let mask_table = read_table(&mask_path)?;
    let full_mask = read_mask(&mask_table)?;

    let (cols, roles) = spec.resolve(&tables[0].1)?;
    let mut completed = Vec::with_capacity(tables.len());
    for (path, t) in &tables {
        if t.headers != tables[0].1.headers || t.headers != mask_table.headers {
            return Err(CliError::Invalid(format!("{path}: columns differ from the mask or the first completion")));
        }
        let (values, missing) = t.numeric(&cols)?;
        if let Some((i, j)) =
            (0..missing.nrows()).flat_map(|i| (0..missing.ncols()).map(move |j| (i, j))).find(|&(i, j)| missing[(i, j)])
        {
            return Err(CliError::Invalid(format!("{path}: column `{}`, row {} is empty", t.headers[cols[j]], i + 1)));
        }
        completed.push(values);
    }
    let mask = DMatrix::from_fn(full_mask.nrows(), cols.len(), |i, j| full_mask[(i, cols[j])]);
    let names = cols.iter().map(|&c| tables[0].1.headers[c].clone()).collect();
    Ok(ImputationSet::from_parts(completed, mask, names, roles)?)
}

const ANALYZE_HEADERS: [&str; 15] = [
    "parameter",
    "theta_bar",
    "se",
    "w_bar",
    "b",
    "gamma",
    "nu_com",
    "nu_obs",
    "nu_imp",
    "nu",
    "ci_lo",
    "ci_hi",
    "level",
    "M",
    "n_analyzed",
];

fn write_pooled<W: Write>(
    writer: W,
    names: &[String],
    est: &[PooledEstimate],
    n_analyzed: Option<usize>,
) -> Result<(), CliError> {
    use midlab_core::io::fmt_num as f;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ANALYZE_HEADERS).map_err(runtime)?;
    for (name, e) in names.iter().zip(est) {
        w.write_record([
            name.clone(),
            f(e.theta_bar),
            f(e.se()),
            f(e.w_bar),
            f(e.b),
            f(e.gamma),
            e.nu_com.to_string(),
            f(e.nu_obs),
            f(e.nu_imp),
            f(e.nu),
            f(e.ci_lo),
            f(e.ci_hi),
            f(e.level),
            e.m.to_string(),
            n_analyzed.map_or_else(String::new, |n| n.to_string()),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

fn emit(s: &Settings, names: &[String], est: &[PooledEstimate], n_analyzed: Option<usize>) -> Result<(), CliError> {
    match s.get("out") {
        Some(path) => write_pooled(create(path)?, names, est, n_analyzed),
        None => write_pooled(std::io::stdout().lock(), names, est, n_analyzed),
    }
}

pub fn analyze(s: &Settings) -> Result<(), CliError> {
    let strategy: Strategy = s.parse_or("strategy", Strategy::Mi)?;
    let input = s.require("input", "analyze")?;
    let spec = column_spec(s, "analyze")?;
    let level = level(s)?;
    let result = match strategy {
        Strategy::Mi | Strategy::Mid => {
            let set = load_set(s, input, &spec)?;
            if strategy == Strategy::Mi {
                analyze_mi_at_level(&set, level)?
            } else {
                run_mid_at_level(&set, level)?
            }
        }
        Strategy::Dmi => {
            let (data, _) = spec.dataset(&read_table(input)?)?;
            let m: usize = s.parse_or("m", DEFAULT_M)?;
            let seed: u64 = s.parse_or("seed", 0)?;
            let cfg = imputer_config(s)?;
            run_dmi_at_level(&data, m, &cfg, &mut rng_stream(seed, 0, 0, chain::IMPUTE_DMI), level)?
        }
    };
    emit(s, &result.parameters, &result.estimates, Some(result.n_analyzed))
}

/// Pools per-imputation estimates read from a CSV with columns `parameter`,
/// `estimate` and `se`, one row per imputation and parameter.
pub fn pool_fits(s: &Settings, path: &str, nu_com: Option<&str>) -> Result<(), CliError> {
    let nu_com: usize = nu_com
        .ok_or_else(|| CliError::Invalid("--fits needs --nu-com".into()))?
        .parse()
        .map_err(|e| CliError::Invalid(format!("invalid --nu-com: {e}")))?;
    let level = level(s)?;
    let table = read_table(path)?;
    let [p, e, se] = ["parameter", "estimate", "se"].map(|c| table.column(c));
    let (p, e, se) = (p?, e?, se?);
    let mut groups: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let num = |c: usize| {
            row[c].trim().parse::<f64>().map_err(|_| {
                CliError::Invalid(format!(
                    "{path}: column `{}`, row {}: `{}` is not a number",
                    table.headers[c],
                    i + 1,
                    row[c]
                ))
            })
        };
        let (est, sd) = (num(e)?, num(se)?);
        match groups.iter_mut().find(|g| g.0 == row[p]) {
            Some(g) => {
                g.1.push(est);
                g.2.push(sd * sd);
            }
            None => groups.push((row[p].clone(), vec![est], vec![sd * sd])),
        }
    }
    let names: Vec<String> = groups.iter().map(|g| g.0.clone()).collect();
    let est = groups
        .iter()
        .map(|(_, est, var)| pool_scalar(est, var, nu_com, level))
        .collect::<midlab_core::Result<Vec<_>>>()?;
    emit(s, &names, &est, None)
}

fn grid(s: &Settings) -> Result<GridSpec, CliError> {
    let d: Option<usize> = s.parse_opt("d")?;
    let mut g = match s.get("preset") {
        Some(name) => GridSpec::preset(name, d)?,
        None => {
            let missing: Vec<&str> =
                ["n", "rho12", "r2", "p", "pattern", "m", "d"].into_iter().filter(|k| s.get(k).is_none()).collect();
            if !missing.is_empty() {
                return Err(CliError::Invalid(format!(
                    "simulate needs a preset or every grid factor; missing {}",
                    missing.join(", ")
                )));
            }
            GridSpec { rho_yz: vec![None], ..GridSpec::smoke() }
        }
    };
    if let Some(v) = s.parse_list("n")? {
        g.n = v;
    }
    if let Some(v) = s.parse_list("rho12")? {
        g.rho12 = v;
    }
    if let Some(v) = s.parse_list("r2")? {
        g.r2 = v;
    }
    if let Some(v) = s.parse_list("p")? {
        g.p = v;
    }
    if let Some(v) = s.parse_list::<MissingPattern>("pattern")? {
        g.pattern = v;
    }
    if let Some(v) = s.parse_list("m")? {
        g.m = v;
    }
    if s.get("rho_yz").is_some() {
        g.rho_yz = s
            .list("rho_yz")
            .iter()
            .map(|v| match v.as_str() {
                "none" | "NA" => Ok(None),
                other => other
                    .parse()
                    .map(Some)
                    .map_err(|e| CliError::Invalid(format!("invalid value `{other}` for rho_yz: {e}"))),
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(d) = d {
        g.d = d;
    }
    Ok(g)
}

pub fn simulate(s: &Settings) -> Result<(), CliError> {
    let out = s.require("out", "simulate")?;
    let seed: u64 = s.parse_or("seed", 0)?;
    let strategies = s.parse_list::<Strategy>("strategy")?.unwrap_or_else(|| vec![Strategy::Mi, Strategy::Mid]);
    let opts = RunOptions { strategies, imputer: imputer_config(s)?, parallelism: s.parse_or("parallelism", 1)? };
    opts.validate()?;
    let cells = grid(s)?.cells(seed)?;
    let result = run_grid(&cells, seed, &opts)?;
    for path in write_grid_result(out, &result).map_err(runtime)? {
        println!("{path}");
    }
    Ok(())
}
