//! Weighted logistic regression by Newton / iteratively reweighted least
//! squares, and the Wald test on a fitted coefficient.

use crate::error::{Error, Result};
use crate::matrix::SymMat;
use crate::num::normal::{chi2_sf_1, expit, log1pexp};

/// Flat row-major design matrix with outcomes and observation weights.
#[derive(Debug, Clone)]
pub struct Dataset {
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Dataset {
    pub fn new(p: usize) -> Self {
        Dataset {
            p,
            x: Vec::new(),
            y: Vec::new(),
            w: Vec::new(),
        }
    }

    pub fn with_capacity(p: usize, rows: usize) -> Self {
        Dataset {
            p,
            x: Vec::with_capacity(p * rows),
            y: Vec::with_capacity(rows),
            w: Vec::with_capacity(rows),
        }
    }

    pub fn push_row(&mut self, x: &[f64], y: bool, weight: f64) {
        debug_assert_eq!(x.len(), self.p);
        debug_assert!(weight > 0.0);
        self.x.extend_from_slice(x);
        self.y.push(if y { 1.0 } else { 0.0 });
        self.w.push(weight);
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn outcome(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.w[i]
    }

    fn validate(&self) -> Result<()> {
        if self.w.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter(
                "dataset weights must be positive".into(),
            ));
        }
        let any0 = self.y.iter().any(|y| *y == 0.0);
        let any1 = self.y.iter().any(|y| *y == 1.0);
        if !(any0 && any1) {
            return Err(Error::DegenerateOutcome);
        }
        if self.n() < self.p {
            return Err(Error::SingularDesign);
        }
        Ok(())
    }
}

/// Linear predictor of one design row. Shared by every caller so that
/// identical inputs give bit-identical etas.
#[inline]
pub fn eta(x: &[f64], beta: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), beta.len());
    let mut acc = 0.0;
    for (xi, bi) in x.iter().zip(beta.iter()) {
        acc += xi * bi;
    }
    acc
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: Vec<f64>,
    /// Inverse of X^T W X at the estimate; withheld when not converged.
    pub covariance: Option<SymMat>,
    pub converged: bool,
    pub iterations: usize,
}

const SCORE_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 30;
// |beta| beyond this is separation drift, not an interior optimum
const BETA_DIVERGENCE_BOUND: f64 = 100.0;

/// Maximize the weighted log-likelihood
/// sum_i w_i [y_i eta_i - log(1 + exp(eta_i))].
///
/// Newton steps with step halving; converged when the largest score entry
/// or coefficient change drops below 1e-10. Non-convergence (separation)
/// is flagged on the result rather than raised, with the covariance
/// withheld; a rank-deficient design is an error.
pub fn fit_weighted_logistic(data: &Dataset, start: Option<&[f64]>) -> Result<FitResult> {
    data.validate()?;
    let p = data.p();
    let n = data.n();
    let mut beta = match start {
        Some(b) => {
            debug_assert_eq!(b.len(), p);
            b.to_vec()
        }
        None => vec![0.0; p],
    };

    let loglik = |beta: &[f64]| -> f64 {
        let mut ll = 0.0;
        for i in 0..n {
            let e = eta(data.row(i), beta);
            ll += data.weight(i) * (data.outcome(i) * e - log1pexp(e));
        }
        ll
    };

    let mut ll = loglik(&beta);
    let mut score = vec![0.0; p];

    for iter in 1..=MAX_ITERATIONS {
        score.iter_mut().for_each(|s| *s = 0.0);
        let mut hess = SymMat::zeros(p);
        for i in 0..n {
            let row = data.row(i);
            let w = data.weight(i);
            let mu = expit(eta(row, beta.as_slice()));
            let resid = w * (data.outcome(i) - mu);
            for (s, xi) in score.iter_mut().zip(row.iter()) {
                *s += resid * xi;
            }
            hess.add_weighted_outer(row, w * mu * (1.0 - mu));
        }

        let chol = match hess.cholesky() {
            Ok(c) => c,
            // at the start the weights are interior, so a factorization
            // failure means the design itself is rank deficient
            Err(_) if iter == 1 => return Err(Error::SingularDesign),
            Err(_) => {
                // weights collapsed mid-iteration: separation
                return Ok(FitResult {
                    beta,
                    covariance: None,
                    converged: false,
                    iterations: iter,
                });
            }
        };

        let max_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let diverged = beta.iter().any(|b| b.abs() > BETA_DIVERGENCE_BOUND);
        if max_score < SCORE_TOL {
            if diverged {
                // the score vanishes along a separating direction too
                return Ok(FitResult {
                    beta,
                    covariance: None,
                    converged: false,
                    iterations: iter,
                });
            }
            return Ok(FitResult {
                beta,
                covariance: Some(chol.inverse()),
                converged: true,
                iterations: iter - 1,
            });
        }
        if diverged {
            return Ok(FitResult {
                beta,
                covariance: None,
                converged: false,
                iterations: iter,
            });
        }
        let delta = chol.solve(&score);
        let max_delta = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if max_delta < STEP_TOL {
            return Ok(FitResult {
                beta,
                covariance: Some(chol.inverse()),
                converged: true,
                iterations: iter,
            });
        }

        // step halving when the full Newton step decreases the objective
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = beta
                .iter()
                .zip(delta.iter())
                .map(|(b, d)| b + t * d)
                .collect();
            let cand_ll = loglik(&cand);
            if cand_ll.is_finite() && cand_ll >= ll - 1e-12 {
                beta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok(FitResult {
                beta,
                covariance: None,
                converged: false,
                iterations: iter,
            });
        }
        if t * max_delta < STEP_TOL {
            // converged by step size; recompute curvature at the new point
            let mut hess = SymMat::zeros(p);
            for i in 0..n {
                let row = data.row(i);
                let mu = expit(eta(row, beta.as_slice()));
                hess.add_weighted_outer(row, data.weight(i) * mu * (1.0 - mu));
            }
            let covariance = hess.inverse().ok();
            return Ok(FitResult {
                beta,
                covariance,
                converged: true,
                iterations: iter,
            });
        }
    }

    Ok(FitResult {
        beta,
        covariance: None,
        converged: false,
        iterations: MAX_ITERATIONS,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct WaldTest {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Wald chi-square test of H0: beta[index] = 0.
pub fn wald_test(fit: &FitResult, index: usize, alpha: f64) -> Result<WaldTest> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    let cov = fit.covariance.as_ref().ok_or(Error::NotConverged)?;
    if index >= fit.beta.len() {
        return Err(Error::InvalidParameter(format!(
            "coefficient index {index} out of range"
        )));
    }
    let b = fit.beta[index];
    let var = cov.get(index, index);
    if !(var > 0.0) {
        return Err(Error::SingularMatrix);
    }
    let statistic = b * b / var;
    let p_value = chi2_sf_1(statistic);
    Ok(WaldTest {
        statistic,
        p_value,
        reject: p_value < alpha,
    })
}
