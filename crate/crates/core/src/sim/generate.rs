use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;

use crate::data::{ColumnRole, ExperimentCell, IncompleteDataset, MissingPattern};
use crate::error::{Error, Result};

pub const X1: usize = 0;
pub const X2: usize = 1;
pub const Y: usize = 2;
pub const Z: usize = 3;

/// Regression truth for one cell: `Y = α + β₁X₁ + β₂X₂ + e`, `e ~ N(0, σₑ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSpec {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub sigma_e2: f64,
    pub rho12: f64,
}

impl TruthSpec {
    /// Unit coefficients, with the error variance chosen so the population
    /// R² equals `r2`.
    pub fn new(rho12: f64, r2: f64) -> Self {
        Self { alpha: 1.0, beta1: 1.0, beta2: 1.0, sigma_e2: 2.0 * (1.0 - r2) * (1.0 + rho12) / r2, rho12 }
    }

    /// Population variance of Y.
    pub fn y_variance(&self) -> f64 {
        let (b1, b2) = (self.beta1, self.beta2);
        b1 * b1 + b2 * b2 + 2.0 * b1 * b2 * self.rho12 + self.sigma_e2
    }

    /// True values in parameter order `(α, β₁, β₂, σₑ²)`.
    pub fn parameters(&self) -> [f64; 4] {
        [self.alpha, self.beta1, self.beta2, self.sigma_e2]
    }
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Columns `x1, x2, y`: standard bivariate normal predictors with
/// correlation `rho12` and the outcome from the regression truth.
pub fn generate_complete<R: Rng + ?Sized>(cell: &ExperimentCell, rng: &mut R) -> (DMatrix<f64>, TruthSpec) {
    let truth = TruthSpec::new(cell.rho12, cell.r2);
    let resid_x2 = (1.0 - cell.rho12 * cell.rho12).sqrt();
    let sd_e = truth.sigma_e2.sqrt();
    let mut out = DMatrix::zeros(cell.n, 3);
    for i in 0..cell.n {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let e: f64 = StandardNormal.sample(rng);
        let x1 = z1;
        let x2 = cell.rho12 * z1 + resid_x2 * z2;
        out[(i, X1)] = x1;
        out[(i, X2)] = x2;
        out[(i, Y)] = truth.alpha + truth.beta1 * x1 + truth.beta2 * x2 + sd_e * e;
    }
    (out, truth)
}

/// Appends `z = ρ·Yₛ + u` with `Yₛ` standardized by the population mean and
/// standard deviation of Y, and `u ~ N(0, 1 − ρ²)`.
pub fn attach_auxiliary<R: Rng + ?Sized>(
    complete: &DMatrix<f64>,
    truth: &TruthSpec,
    rho_yz: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&rho_yz) {
        return Err(Error::InvalidConfig(format!("rho_yz = {rho_yz} is outside [0, 1)")));
    }
    let n = complete.nrows();
    let sd_y = truth.y_variance().sqrt();
    let sd_u = (1.0 - rho_yz * rho_yz).sqrt();
    let mut out = complete.clone().insert_column(complete.ncols(), 0.0);
    for i in 0..n {
        let u: f64 = StandardNormal.sample(rng);
        let ys = (complete[(i, Y)] - truth.alpha) / sd_y;
        out[(i, complete.ncols())] = rho_yz * ys + sd_u * u;
    }
    Ok(out)
}

/// Names and roles for the simulated columns.
pub fn sim_columns(k: usize) -> (Vec<String>, Vec<ColumnRole>) {
    let all = [
        ("x1", ColumnRole::Predictor),
        ("x2", ColumnRole::Predictor),
        ("y", ColumnRole::Outcome),
        ("z", ColumnRole::Auxiliary),
    ];
    all[..k].iter().map(|(n, r)| (n.to_string(), *r)).unzip()
}

/// Masks X2 and Y. X1 and any auxiliary column stay complete. Two uniforms
/// are drawn per row whatever the pattern, so the stream layout does not
/// depend on it.
pub fn apply_missingness<R: Rng + ?Sized>(
    complete: &DMatrix<f64>,
    pattern: MissingPattern,
    p: f64,
    rng: &mut R,
) -> Result<IncompleteDataset> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::InvalidRate(p));
    }
    let (n, k) = complete.shape();
    if !(3..=4).contains(&k) {
        return Err(Error::InvalidDataset(format!("expected 3 or 4 simulated columns, got {k}")));
    }
    let mut mask = DMatrix::from_element(n, k, false);
    for i in 0..n {
        let (px2, py) = deletion_probabilities(pattern, p, complete[(i, X1)]);
        let u_x2: f64 = rng.random();
        let u_y: f64 = rng.random();
        mask[(i, X2)] = u_x2 < px2;
        mask[(i, Y)] = u_y < py;
    }
    let (names, roles) = sim_columns(k);
    IncompleteDataset::new(complete.clone(), mask, names, roles)
}

/// Per-row deletion probabilities for X2 and Y.
pub fn deletion_probabilities(pattern: MissingPattern, p: f64, x1: f64) -> (f64, f64) {
    match pattern {
        MissingPattern::Mcar => (p, p),
        MissingPattern::Coordinated => {
            let q = 2.0 * p * std_normal_cdf(x1);
            (q, q)
        }
        MissingPattern::Complementary => (2.0 * p * std_normal_cdf(x1), 2.0 * p * std_normal_cdf(-x1)),
    }
}
