//! Power of the two-sided Wald test and its inversion for sample size,
//! plus the continuous-trait convenience computation.
//!
//! Power at sample size n uses the per-observation variance factor v1
//! (the variance of the genetic estimate is v1 / n):
//!
//!   Phi(-z + |beta_G| sqrt(n / v1)) + Phi(-z - |beta_G| sqrt(n / v1)),
//!   z = Phi^-1(1 - alpha/2).

use crate::error::{Error, Result};
use crate::num::normal::{norm_cdf, norm_quantile};

/// Which estimator produced the variance driving a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ss,
    Rd,
    Exact,
    Conditional,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Ss => "ss",
            Method::Rd => "rd",
            Method::Exact => "exact",
            Method::Conditional => "conditional",
        })
    }
}

#[derive(Debug, Clone)]
pub struct PowerResult {
    pub power: f64,
    pub method: Method,
    pub n: u64,
    pub alpha: f64,
    /// Variance of the genetic coefficient at this n (v1 / n).
    pub v_g_n: f64,
    /// Monte Carlo standard error of the variance factor, when the
    /// semi-simulation estimator produced it.
    pub mc_se: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SampleSizeResult {
    pub n_required: u64,
    pub achieved_power: f64,
    pub target_power: f64,
    pub alpha: f64,
    pub method: Method,
    /// Per-observation variance factor used for the inversion.
    pub v1: f64,
}

pub const DEFAULT_N_MAX: u64 = 1_000_000_000;

/// Two-sided Wald power as a bare value. beta_g = 0 gives exactly alpha.
pub fn power_value(v1: f64, beta_g: f64, n: u64, alpha: f64) -> f64 {
    if beta_g == 0.0 {
        return alpha;
    }
    let z = norm_quantile(1.0 - alpha / 2.0);
    let shift = beta_g.abs() * (n as f64 / v1).sqrt();
    norm_cdf(-z + shift) + norm_cdf(-z - shift)
}

fn check_power_inputs(v1: f64, n: u64, alpha: f64) -> Result<()> {
    if !(v1 > 0.0) || !v1.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "variance factor v1 must be positive and finite, got {v1}"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    Ok(())
}

/// Power of the Wald test at sample size n.
pub fn compute_power(v1: f64, beta_g: f64, n: u64, alpha: f64, method: Method) -> Result<PowerResult> {
    check_power_inputs(v1, n, alpha)?;
    Ok(PowerResult {
        power: power_value(v1, beta_g, n, alpha),
        method,
        n,
        alpha,
        v_g_n: v1 / n as f64,
        mc_se: None,
    })
}

/// Smallest integer n whose power reaches `target_power`.
///
/// A closed-form initial guess (dropping the negligible second Phi term)
/// seeds an integer bisection of the full two-term formula, so the
/// minimality contract power(n) >= target > power(n-1) holds exactly.
pub fn required_sample_size(
    v1: f64,
    beta_g: f64,
    target_power: f64,
    alpha: f64,
    n_max: u64,
    method: Method,
) -> Result<SampleSizeResult> {
    check_power_inputs(v1, 1, alpha)?;
    if beta_g == 0.0 {
        return Err(Error::Unattainable(
            "beta_G = 0: power never exceeds alpha".into(),
        ));
    }
    if !(target_power > alpha && target_power < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target power must lie in (alpha, 1), got {target_power} at alpha {alpha}"
        )));
    }

    let z_alpha = norm_quantile(1.0 - alpha / 2.0);
    let z_power = norm_quantile(target_power);
    let guess = v1 * (z_alpha + z_power) * (z_alpha + z_power) / (beta_g * beta_g);

    // bracket: power(lo) < target <= power(hi)
    let mut hi = (guess.ceil() as u64).max(1);
    let mut grow = 0;
    while power_value(v1, beta_g, hi, alpha) < target_power {
        if hi >= n_max {
            return Err(Error::SampleSizeCapped { cap: n_max });
        }
        hi = (hi.saturating_mul(2)).min(n_max);
        grow += 1;
        if grow > 80 {
            return Err(Error::SampleSizeCapped { cap: n_max });
        }
    }
    let mut lo = 0u64; // exclusive: power at "0" treated as below target
    let mut lo_cand = (guess / 2.0).floor() as u64;
    if lo_cand >= hi {
        lo_cand = hi / 2;
    }
    if lo_cand >= 1 && power_value(v1, beta_g, lo_cand, alpha) < target_power {
        lo = lo_cand;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if power_value(v1, beta_g, mid, alpha) >= target_power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SampleSizeResult {
        n_required: hi,
        achieved_power: power_value(v1, beta_g, hi, alpha),
        target_power,
        alpha,
        method,
        v1,
    })
}

/// Power for a continuous trait analyzed by linear regression: covariate
/// effects enter only through the residual variance, so
/// v1 = residual_sd^2 / Var(G).
pub fn linear_trait_power(
    beta_g: f64,
    var_g: f64,
    residual_sd: f64,
    n: u64,
    alpha: f64,
) -> Result<PowerResult> {
    if !(var_g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Var(G) must be positive, got {var_g}"
        )));
    }
    if !(residual_sd > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "residual sd must be positive, got {residual_sd}"
        )));
    }
    compute_power(
        residual_sd * residual_sd / var_g,
        beta_g,
        n,
        alpha,
        Method::Exact,
    )
}
