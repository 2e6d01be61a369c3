//! Empirical power by full simulation: generate datasets under the solved
//! model (prospective draws or retrospective quota sampling from the
//! population process), fit an unweighted logistic regression, apply the
//! Wald test, and report the rejection fraction.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::glm::{eta, fit_weighted_logistic, wald_test, Dataset};
use crate::model::{Sampling, SolvedModel, StudyDesign};
use crate::num::normal::expit;
use crate::rng::{derive_seed, domain, stream_rng};
use crate::space::{build_space, CovariateSpace};

/// Index of the genetic coefficient in the design row (1, G, E...).
pub const G_INDEX: usize = 1;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub empirical_power: f64,
    pub replicates: u64,
    /// sqrt(p(1-p)/R) binomial standard error of the rejection fraction.
    pub mc_se: f64,
    /// Replicates whose fit failed to converge (counted as non-rejections).
    pub n_nonconverged: u64,
    pub seed: u64,
}

/// The population data-generating process for a solved model: the model
/// itself for prospective designs; for retrospective designs the intercept
/// is re-solved at the population prevalence.
fn population_process(solved: &SolvedModel) -> Result<(SolvedModel, CovariateSpace)> {
    match solved.spec.design.sampling {
        Sampling::Prospective { .. } => {
            let space = build_space(solved);
            Ok((solved.clone(), space))
        }
        Sampling::Retrospective {
            population_prevalence,
            ..
        } => {
            let mut spec = solved.spec.clone();
            spec.design = StudyDesign::prospective(population_prevalence, solved.spec.design.alpha)?;
            let pop = SolvedModel::solve(spec)?;
            let space = build_space(&pop);
            Ok((pop, space))
        }
    }
}

fn simulate_with_rng(
    solved: &SolvedModel,
    pop: &SolvedModel,
    space: &CovariateSpace,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Dataset> {
    let dim = pop.dim();
    let beta = pop.coefficients();
    let mut data = Dataset::with_capacity(dim, n);
    let mut row = vec![0.0; dim];
    row[0] = 1.0;
    match solved.spec.design.sampling {
        Sampling::Prospective { .. } => {
            for _ in 0..n {
                let (head, e_slots) = row.split_at_mut(2);
                head[1] = space.draw_into(rng, e_slots);
                let y = rng.random::<f64>() < expit(eta(&row, &beta));
                data.push_row(&row, y, 1.0);
            }
        }
        Sampling::Retrospective { case_fraction, .. } => {
            let want_cases = ((n as f64) * case_fraction).round() as usize;
            let want_controls = n - want_cases;
            let (mut cases, mut controls) = (0usize, 0usize);
            let max_draws = (n as u64).saturating_mul(1_000_000);
            let mut draws = 0u64;
            while cases < want_cases || controls < want_controls {
                if draws >= max_draws {
                    return Err(Error::QuotaUnreachable { draws });
                }
                draws += 1;
                let (head, e_slots) = row.split_at_mut(2);
                head[1] = space.draw_into(rng, e_slots);
                let y = rng.random::<f64>() < expit(eta(&row, &beta));
                if y && cases < want_cases {
                    cases += 1;
                    data.push_row(&row, true, 1.0);
                } else if !y && controls < want_controls {
                    controls += 1;
                    data.push_row(&row, false, 1.0);
                }
            }
        }
    }
    Ok(data)
}

/// Simulate one dataset of size n under the solved design.
///
/// Prospective: n draws of covariates with Bernoulli outcomes at the
/// population intercept. Retrospective: rejection sampling from the same
/// population process until the case and control quotas are filled.
pub fn simulate_dataset(solved: &SolvedModel, n: usize, seed: u64) -> Result<Dataset> {
    let (pop, space) = population_process(solved)?;
    let mut rng = stream_rng(derive_seed(seed, domain::SIM_DATASET), 0);
    simulate_with_rng(solved, &pop, &space, n, &mut rng)
}

/// Empirical power: fraction of replicates whose Wald test on the genetic
/// coefficient rejects at `alpha`.
///
/// Replicate r always uses RNG stream r, so results are independent of
/// executor thread count. Non-converged (separated) fits count as
/// non-rejections and are tallied.
pub fn empirical_power(
    solved: &SolvedModel,
    n: usize,
    alpha: f64,
    replicates: u64,
    seed: u64,
) -> Result<OracleResult> {
    if replicates < 100 {
        return Err(Error::InvalidParameter(format!(
            "oracle needs at least 100 replicates, got {replicates}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let (pop, space) = population_process(solved)?;
    let derived = derive_seed(seed, domain::ORACLE);

    let outcomes: Vec<Result<(bool, bool)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(derived, r);
            let data = simulate_with_rng(solved, &pop, &space, n, &mut rng)?;
            match fit_weighted_logistic(&data, None) {
                Ok(fit) if fit.converged => {
                    let test = wald_test(&fit, G_INDEX, alpha)?;
                    Ok((test.reject, false))
                }
                // separation / degenerate replicate: conservative non-rejection
                Ok(_) | Err(Error::DegenerateOutcome) => Ok((false, true)),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut rejections = 0u64;
    let mut n_nonconverged = 0u64;
    for outcome in outcomes {
        let (reject, nonconv) = outcome?;
        if reject {
            rejections += 1;
        }
        if nonconv {
            n_nonconverged += 1;
        }
    }
    let phat = rejections as f64 / replicates as f64;
    Ok(OracleResult {
        empirical_power: phat,
        replicates,
        mc_se: (phat * (1.0 - phat) / replicates as f64).sqrt(),
        n_nonconverged,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coding, GenotypeModel, ModelSpec, StudyDesign};

    fn spec(beta_g: f64, design: StudyDesign) -> SolvedModel {
        let spec = ModelSpec::new(
            GenotypeModel::new(0.1, Coding::Additive).unwrap(),
            vec![],
            beta_g,
            design,
        )
        .unwrap();
        SolvedModel::solve(spec).unwrap()
    }

    #[test]
    fn prospective_case_fraction_near_prevalence() {
        let solved = spec(0.3, StudyDesign::prospective(0.2, 0.05).unwrap());
        let n = 100_000;
        let data = simulate_dataset(&solved, n, 9).unwrap();
        let cases: f64 = (0..data.n()).map(|i| data.outcome(i)).sum();
        let phat = cases / n as f64;
        let bound = 3.0 * (0.2f64 * 0.8 / n as f64).sqrt();
        assert!((phat - 0.2).abs() < bound, "phat = {phat}");
    }

    #[test]
    fn retrospective_quota_is_exact() {
        let solved = spec(0.3, StudyDesign::retrospective(0.5, 0.2, 0.05).unwrap());
        let data = simulate_dataset(&solved, 1000, 5).unwrap();
        let cases: f64 = (0..data.n()).map(|i| data.outcome(i)).sum();
        assert_eq!(data.n(), 1000);
        assert_eq!(cases, 500.0);
    }

    #[test]
    fn null_outcome_independent_of_genotype() {
        let solved = spec(0.0, StudyDesign::prospective(0.3, 0.05).unwrap());
        let data = simulate_dataset(&solved, 200_000, 21).unwrap();
        let mut case_by_g = [0.0f64; 3];
        let mut n_by_g = [0.0f64; 3];
        for i in 0..data.n() {
            let g = data.row(i)[1] as usize;
            n_by_g[g] += 1.0;
            case_by_g[g] += data.outcome(i);
        }
        for g in 0..2 {
            let p_g = case_by_g[g] / n_by_g[g];
            let p_next = case_by_g[g + 1] / n_by_g[g + 1];
            let se = (0.3 * 0.7 * (1.0 / n_by_g[g] + 1.0 / n_by_g[g + 1])).sqrt();
            assert!((p_g - p_next).abs() < 4.0 * se, "g={g}: {p_g} vs {p_next}");
        }
    }

    #[test]
    fn oracle_is_deterministic() {
        let solved = spec(0.4, StudyDesign::prospective(0.2, 0.05).unwrap());
        let a = empirical_power(&solved, 300, 0.05, 200, 77).unwrap();
        let b = empirical_power(&solved, 300, 0.05, 200, 77).unwrap();
        assert_eq!(a.empirical_power, b.empirical_power);
        assert_eq!(a.n_nonconverged, b.n_nonconverged);
    }

    #[test]
    fn replicate_floor_enforced() {
        let solved = spec(0.4, StudyDesign::prospective(0.2, 0.05).unwrap());
        assert!(empirical_power(&solved, 100, 0.05, 99, 1).is_err());
        assert!(empirical_power(&solved, 100, 0.05, 0, 1).is_err());
    }
}
