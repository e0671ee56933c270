use crate::data::{ExperimentCell, MissingPattern};
use crate::error::{Error, Result};

/// Factor levels; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: Vec<usize>,
    pub rho12: Vec<f64>,
    pub r2: Vec<f64>,
    pub p: Vec<f64>,
    pub pattern: Vec<MissingPattern>,
    pub m: Vec<usize>,
    /// `None` runs without an auxiliary variable.
    pub rho_yz: Vec<Option<f64>>,
    pub d: usize,
}

impl GridSpec {
    /// Two sample sizes, three predictor correlations, three R² values, two
    /// deletion rates, three patterns and three imputation counts.
    pub fn full(d: usize) -> Self {
        Self {
            n: vec![50, 200],
            rho12: vec![0.2, 0.5, 0.8],
            r2: vec![0.2, 0.5, 0.8],
            p: vec![0.2, 0.5],
            pattern: MissingPattern::ALL.to_vec(),
            m: vec![2, 5, 10],
            rho_yz: vec![None],
            d,
        }
    }

    /// The full grid crossed with five auxiliary correlations.
    pub fn auxiliary(d: usize) -> Self {
        Self { rho_yz: [0.1, 0.3, 0.5, 0.7, 0.9].into_iter().map(Some).collect(), ..Self::full(d) }
    }

    /// Small grid that touches every pattern and both deletion rates.
    pub fn smoke() -> Self {
        Self {
            n: vec![50],
            rho12: vec![0.5],
            r2: vec![0.5],
            p: vec![0.2, 0.5],
            pattern: MissingPattern::ALL.to_vec(),
            m: vec![2],
            rho_yz: vec![None],
            d: 4,
        }
    }

    pub fn preset(name: &str, d: Option<usize>) -> Result<Self> {
        match name {
            "full" => Ok(Self::full(d.unwrap_or(1000))),
            "auxiliary" => Ok(Self::auxiliary(d.unwrap_or(1000))),
            "smoke" => Ok(Self { d: d.unwrap_or(4), ..Self::smoke() }),
            other => {
                Err(Error::InvalidConfig(format!("unknown grid preset `{other}` (expected full, auxiliary or smoke)")))
            }
        }
    }

    pub fn len(&self) -> usize {
        self.n.len()
            * self.rho12.len()
            * self.r2.len()
            * self.p.len()
            * self.pattern.len()
            * self.m.len()
            * self.rho_yz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in nested order `n, rho12, r2, p, pattern, m, rho_yz` (last
    /// varies fastest), all validated.
    pub fn cells(&self, seed: u64) -> Result<Vec<ExperimentCell>> {
        if self.is_empty() {
            return Err(Error::InvalidConfig("every grid factor needs at least one level".into()));
        }
        let mut out = Vec::with_capacity(self.len());
        for &n in &self.n {
            for &rho12 in &self.rho12 {
                for &r2 in &self.r2 {
                    for &p in &self.p {
                        for &pattern in &self.pattern {
                            for &m in &self.m {
                                for &rho_yz in &self.rho_yz {
                                    let cell = ExperimentCell { n, rho12, r2, p, pattern, m, rho_yz, d: self.d, seed };
                                    cell.validate()?;
                                    out.push(cell);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
