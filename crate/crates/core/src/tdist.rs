//! Student t distribution with real-valued degrees of freedom.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Above this the incomplete beta loses accuracy and the asymptotic
/// expansion in 1/ν is used instead.
const ASYMPTOTIC_DF: f64 = 1e5;

/// Upper tail `P(T > t)` for `t ≥ 0`.
fn upper_tail(t: f64, nu: f64) -> f64 {
    0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + t * t))
}

fn ln_density_const(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln()
}

/// CDF of the t distribution.
pub fn t_cdf(t: f64, nu: f64) -> f64 {
    if nu.is_infinite() {
        return Normal::standard().cdf(t);
    }
    if t >= 0.0 {
        1.0 - upper_tail(t, nu)
    } else {
        upper_tail(-t, nu)
    }
}

/// Quantile of the t distribution, found by safeguarded Newton iteration on
/// the regularized incomplete beta representation of the CDF.
pub fn t_quantile(nu: f64, prob: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain("t degrees of freedom must be positive"));
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain("t quantile probability must lie in (0, 1)"));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    if nu > ASYMPTOTIC_DF {
        return Ok(cornish_fisher(nu, prob));
    }
    Ok(invert_beta(nu, prob))
}

/// Expansion of the t quantile about the normal one in powers of 1/ν.
fn cornish_fisher(nu: f64, prob: f64) -> f64 {
    let z = Normal::standard().inverse_cdf(prob);
    if nu.is_infinite() {
        return z;
    }
    let z2 = z * z;
    let g1 = z * (z2 + 1.0) / 4.0;
    let g2 = z * ((5.0 * z2 + 16.0) * z2 + 3.0) / 96.0;
    let g3 = z * (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) / 384.0;
    let g4 = z * ((((79.0 * z2 + 776.0) * z2 + 1482.0) * z2 - 1920.0) * z2 - 945.0) / 92160.0;
    z + (g1 + (g2 + (g3 + g4 / nu) / nu) / nu) / nu
}

fn invert_beta(nu: f64, prob: f64) -> f64 {
    let (target, sign) = if prob > 0.5 { (1.0 - prob, 1.0) } else { (prob, -1.0) };

    // bracket the root of upper_tail(t) = target on [lo, hi]
    let mut lo = 0.0;
    let mut hi = 1.0;
    while upper_tail(hi, nu) > target {
        lo = hi;
        hi *= 2.0;
    }
    let c = ln_density_const(nu);
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = upper_tail(t, nu) - target;
        if f > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let dens = (c - 0.5 * (nu + 1.0) * (1.0 + t * t / nu).ln()).exp();
        let newton = t + f / dens;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 1e-13 * t.max(1.0) || hi - lo <= 1e-13 * t.max(1.0) {
            t = next;
            break;
        }
        t = next;
    }
    sign * t
}
