use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::Settings;

/// Multiple imputation for regression with missing outcomes.
#[derive(Parser, Debug)]
#[command(name = "midlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write M completed copies of a CSV file plus its missingness mask.
    Impute(Flags),
    /// Fit the regression to completed files and pool the results.
    Analyze(Flags),
    /// Run the Monte Carlo comparison over a grid of conditions.
    Simulate(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV (impute, analyze dmi) or prefix of completed files (analyze mi/mid).
    #[arg(long)]
    input: Option<String>,
    /// Output prefix (impute, simulate) or file (analyze; stdout if absent).
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    outcome: Option<String>,
    /// Comma-separated; defaults to every other non-auxiliary column.
    #[arg(long)]
    predictors: Option<String>,
    #[arg(long)]
    auxiliary: Option<String>,
    /// Mask CSV for analyze; defaults to `<input>_mask.csv`.
    #[arg(long)]
    mask: Option<String>,
    /// Number of imputations (a list for simulate).
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    burn_in: Option<String>,
    /// mi, mid or dmi (a list for simulate).
    #[arg(long)]
    strategy: Option<String>,
    /// Confidence level of the pooled intervals.
    #[arg(long)]
    level: Option<String>,
    /// Replications per cell.
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    parallelism: Option<String>,
    /// smoke, full or auxiliary.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    rho12: Option<String>,
    #[arg(long)]
    r2: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    pattern: Option<String>,
    /// Auxiliary correlations; `none` runs without one.
    #[arg(long)]
    rho_yz: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    ridge: Option<String>,
    /// Per-imputation estimates (columns parameter, estimate, se) to pool directly.
    #[arg(long, hide = true)]
    fits: Option<String>,
    #[arg(long, hide = true)]
    nu_com: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("input", &self.input),
            ("out", &self.out),
            ("outcome", &self.outcome),
            ("predictors", &self.predictors),
            ("auxiliary", &self.auxiliary),
            ("mask", &self.mask),
            ("m", &self.m),
            ("seed", &self.seed),
            ("burn_in", &self.burn_in),
            ("strategy", &self.strategy),
            ("level", &self.level),
            ("d", &self.d),
            ("parallelism", &self.parallelism),
            ("preset", &self.preset),
            ("n", &self.n),
            ("rho12", &self.rho12),
            ("r2", &self.r2),
            ("p", &self.p),
            ("pattern", &self.pattern),
            ("rho_yz", &self.rho_yz),
            ("max_iter", &self.max_iter),
            ("tol", &self.tol),
            ("ridge", &self.ridge),
        ]
    }

    fn settings(&self, command: &str, allowed: &[&str]) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(path) => Settings::from_path(path)?,
            None => Settings::default(),
        };
        for (key, value) in self.pairs() {
            if let Some(v) = value {
                if !allowed.contains(&key) {
                    return Err(CliError::Invalid(format!("--{} does not apply to {command}", key.replace('_', "-"))));
                }
                s.set(key, v.clone());
            }
        }
        Ok(s)
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input, configuration or data; exit code 2.
    Invalid(String),
    /// Anything that went wrong after the inputs were accepted; exit code 1.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<midlab_core::Error> for CliError {
    fn from(e: midlab_core::Error) -> Self {
        use midlab_core::Error as E;
        match e {
            E::InvalidDataset(_)
            | E::InvalidParams(_)
            | E::InvalidConfig(_)
            | E::UnusableColumn { .. }
            | E::InvalidRate(_)
            | E::TooFewImputations(_)
            | E::Csv(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Impute(f) => commands::impute(&f.settings("impute", commands::IMPUTE_KEYS)?),
        Command::Analyze(f) => {
            let mut s = f.settings("analyze", commands::ANALYZE_KEYS)?;
            match (&f.fits, &f.nu_com) {
                (Some(fits), nu_com) => commands::pool_fits(&s, fits, nu_com.as_deref()),
                (None, Some(_)) => Err(CliError::Invalid("--nu-com only applies together with --fits".into())),
                (None, None) => {
                    if s.get("strategy").is_none() {
                        s.set("strategy", "mi".into());
                    }
                    commands::analyze(&s)
                }
            }
        }
        Command::Simulate(f) => commands::simulate(&f.settings("simulate", commands::SIMULATE_KEYS)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("midlab: {e}");
            ExitCode::from(match e {
                CliError::Invalid(_) => 2,
                CliError::Runtime(_) => 1,
            })
        }
    }
}
