use crate::pooling::PooledEstimate;

/// Percent differences of one strategy against a reference, for one
/// parameter in one replication. `None` marks a zero denominator.
pub fn paired_metrics(
    lambda_ref: f64,
    lambda_other: f64,
    abs_err_ref: f64,
    abs_err_other: f64,
) -> (Option<f64>, Option<f64>) {
    (pct_diff(lambda_ref, lambda_other), pct_diff(abs_err_ref, abs_err_other))
}

fn pct_diff(reference: f64, other: f64) -> Option<f64> {
    if reference > 0.0 && reference.is_finite() && other.is_finite() {
        Some(100.0 * (other - reference) / reference)
    } else {
        None
    }
}

/// Median of the finite entries; `None` when there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[h] } else { 0.5 * (v[h - 1] + v[h]) })
}

/// A binomial rate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
}

impl Proportion {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            f64::NAN
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    pub fn se(&self) -> f64 {
        let r = self.rate();
        (r * (1.0 - r) / self.trials as f64).sqrt()
    }
}

/// Paired observations of two strategies over the replications where both
/// succeeded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairedSample {
    pub pct_length: Vec<f64>,
    pub pct_abs_err: Vec<f64>,
    pub n_pairs: usize,
    pub excluded_length: usize,
    pub excluded_abs_err: usize,
    /// Pairs where the other strategy's estimate is strictly closer to the truth.
    pub other_closer: usize,
    /// Pairs where the reference estimate is strictly closer.
    pub ref_closer: usize,
    pub covers_ref: usize,
    pub covers_other: usize,
}

impl PairedSample {
    pub fn push(&mut self, reference: &PooledEstimate, other: &PooledEstimate, truth: f64) {
        let err_ref = (reference.theta_bar - truth).abs();
        let err_other = (other.theta_bar - truth).abs();
        let (len, abs) = paired_metrics(reference.ci_length(), other.ci_length(), err_ref, err_other);
        self.n_pairs += 1;
        match len {
            Some(v) => self.pct_length.push(v),
            None => self.excluded_length += 1,
        }
        match abs {
            Some(v) => self.pct_abs_err.push(v),
            None => self.excluded_abs_err += 1,
        }
        if err_other < err_ref {
            self.other_closer += 1;
        } else if err_ref < err_other {
            self.ref_closer += 1;
        }
        self.covers_ref += reference.covers(truth) as usize;
        self.covers_other += other.covers(truth) as usize;
    }

    pub fn extend(&mut self, other: &PairedSample) {
        self.pct_length.extend_from_slice(&other.pct_length);
        self.pct_abs_err.extend_from_slice(&other.pct_abs_err);
        self.n_pairs += other.n_pairs;
        self.excluded_length += other.excluded_length;
        self.excluded_abs_err += other.excluded_abs_err;
        self.other_closer += other.other_closer;
        self.ref_closer += other.ref_closer;
        self.covers_ref += other.covers_ref;
        self.covers_other += other.covers_other;
    }

    pub fn median_pct_length(&self) -> Option<f64> {
        median(&self.pct_length)
    }

    pub fn median_pct_abs_err(&self) -> Option<f64> {
        median(&self.pct_abs_err)
    }

    /// Share of untied pairs in which the other strategy is closer.
    pub fn frac_other_closer(&self) -> f64 {
        let untied = self.other_closer + self.ref_closer;
        if untied == 0 {
            f64::NAN
        } else {
            self.other_closer as f64 / untied as f64
        }
    }

    pub fn coverage_ref(&self) -> Proportion {
        Proportion { successes: self.covers_ref, trials: self.n_pairs }
    }

    pub fn coverage_other(&self) -> Proportion {
        Proportion { successes: self.covers_other, trials: self.n_pairs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_differences() {
        assert_eq!(paired_metrics(2.0, 1.5, 1.0, 0.9).0, Some(-25.0));
        let (_, abs) = paired_metrics(2.0, 1.5, 1.0, 0.9);
        assert!((abs.unwrap() + 10.0).abs() < 1e-12);
        assert_eq!(paired_metrics(3.0, 3.0, 0.4, 0.4), (Some(0.0), Some(0.0)));
        assert_eq!(paired_metrics(3.0, 2.0, 0.0, 0.4).1, None);
        assert_eq!(paired_metrics(0.0, 2.0, 1.0, 0.4).0, None);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn median_shrugs_off_one_huge_outlier() {
        let base: Vec<f64> = (0..101).map(|i| -20.0 + 0.4 * i as f64).collect();
        let m0 = median(&base).unwrap();
        let mut spiked = base.clone();
        spiked[7] = 1e6;
        let m1 = median(&spiked).unwrap();
        assert!((m1 - m0).abs() <= 0.4 + 1e-12);
        let mean0 = base.iter().sum::<f64>() / 101.0;
        let mean1 = spiked.iter().sum::<f64>() / 101.0;
        assert!((mean1 - mean0).abs() > 1e3);
    }

    #[test]
    fn proportion_se() {
        let p = Proportion { successes: 950, trials: 1000 };
        assert!((p.se() - (0.95f64 * 0.05 / 1000.0).sqrt()).abs() < 1e-15);
        assert!(Proportion { successes: 0, trials: 0 }.rate().is_nan());
    }
}
