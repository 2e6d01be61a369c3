//! Trait model, genotype model, covariate models and study design, plus
//! the solvers that turn marginal constraints (prevalence, covariate
//! rates/means) into intercepts and conditional variances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::brent::{brent, brent_expanding};
use crate::num::normal::expit;
use crate::space::CovariateSpace;

/// Inheritance coding of the SNP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coding {
    /// Count of minor alleles, support {0, 1, 2}.
    Additive,
    /// Carrier indicator, support {0, 1} with P(1) = 1 - (1-p)^2.
    Dominant,
    /// Homozygote indicator, support {0, 1} with P(1) = p^2.
    Recessive,
}

impl std::fmt::Display for Coding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Coding::Additive => "additive",
            Coding::Dominant => "dominant",
            Coding::Recessive => "recessive",
        })
    }
}

/// SNP model: minor allele frequency under Hardy-Weinberg equilibrium plus
/// the inheritance coding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenotypeModel {
    maf: f64,
    coding: Coding,
}

/// Mean, variance and pmf of the coded genotype.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeMoments {
    pub mean: f64,
    pub variance: f64,
    /// (coded value, probability) pairs in increasing value order.
    pub pmf: Vec<(f64, f64)>,
}

impl GenotypeModel {
    pub fn new(maf: f64, coding: Coding) -> Result<Self> {
        if !(maf > 0.0 && maf <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "maf must lie in (0, 0.5], got {maf} (use the minor allele)"
            )));
        }
        Ok(GenotypeModel { maf, coding })
    }

    pub fn maf(&self) -> f64 {
        self.maf
    }

    pub fn coding(&self) -> Coding {
        self.coding
    }

    /// (coded value, probability) pairs.
    pub fn pmf(&self) -> Vec<(f64, f64)> {
        let p = self.maf;
        let q = 1.0 - p;
        match self.coding {
            Coding::Additive => vec![(0.0, q * q), (1.0, 2.0 * p * q), (2.0, p * p)],
            Coding::Dominant => vec![(0.0, q * q), (1.0, 1.0 - q * q)],
            Coding::Recessive => vec![(0.0, 1.0 - p * p), (1.0, p * p)],
        }
    }

    pub fn moments(&self) -> GenotypeMoments {
        let pmf = self.pmf();
        let mean: f64 = pmf.iter().map(|(g, p)| g * p).sum();
        let second: f64 = pmf.iter().map(|(g, p)| g * g * p).sum();
        GenotypeMoments {
            mean,
            variance: second - mean * mean,
            pmf,
        }
    }

    /// Largest coded value (2 for additive, 1 otherwise).
    pub fn max_coded(&self) -> f64 {
        match self.coding {
            Coding::Additive => 2.0,
            _ => 1.0,
        }
    }

    pub fn support_contains(&self, g: f64) -> bool {
        self.pmf().iter().any(|(v, _)| *v == g)
    }
}

/// Mean/variance and variance-model of one non-genetic covariate.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateDist {
    /// Bernoulli with marginal rate in (0, 1).
    Binary { rate: f64 },
    /// Normal given G, with the stated marginal mean and standard deviation.
    Continuous { mean: f64, sd: f64 },
}

/// One covariate: marginal distribution, second-stage slope on G and the
/// first-stage (trait model) effect.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateModel {
    pub name: String,
    pub dist: CovariateDist,
    /// Second-stage slope: log-odds per unit G for binary E, conditional
    /// mean shift per unit G for continuous E.
    pub gamma_g: f64,
    /// First-stage effect on the trait, log-odds per unit E.
    pub beta_e: f64,
}

impl CovariateModel {
    pub fn new(name: impl Into<String>, dist: CovariateDist, gamma_g: f64, beta_e: f64) -> Result<Self> {
        let name = name.into();
        match &dist {
            CovariateDist::Binary { rate } => {
                if !(*rate > 0.0 && *rate < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "covariate '{name}': binary rate must lie in (0,1), got {rate}"
                    )));
                }
            }
            CovariateDist::Continuous { sd, .. } => {
                if !(*sd > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "covariate '{name}': sd must be positive, got {sd}"
                    )));
                }
            }
        }
        if !gamma_g.is_finite() || !beta_e.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "covariate '{name}': gamma_g and beta_e must be finite"
            )));
        }
        Ok(CovariateModel {
            name,
            dist,
            gamma_g,
            beta_e,
        })
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.dist, CovariateDist::Binary { .. })
    }
}

/// Sampling design of the study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// Random sample from the population at the given prevalence.
    Prospective { prevalence: f64 },
    /// Case-control sampling to a fixed case fraction; the population
    /// trait prevalence is still needed to generate data.
    Retrospective {
        case_fraction: f64,
        population_prevalence: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyDesign {
    pub sampling: Sampling,
    pub alpha: f64,
}

fn check_interior(value: f64, what: &str) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{what} must lie strictly inside (0,1), got {value}"
        )));
    }
    Ok(())
}

impl StudyDesign {
    pub fn new(sampling: Sampling, alpha: f64) -> Result<Self> {
        match sampling {
            Sampling::Prospective { prevalence } => check_interior(prevalence, "prevalence")?,
            Sampling::Retrospective {
                case_fraction,
                population_prevalence,
            } => {
                check_interior(case_fraction, "case_fraction")?;
                check_interior(population_prevalence, "population_prevalence")?;
            }
        }
        check_interior(alpha, "alpha")?;
        Ok(StudyDesign { sampling, alpha })
    }

    pub fn prospective(prevalence: f64, alpha: f64) -> Result<Self> {
        Self::new(Sampling::Prospective { prevalence }, alpha)
    }

    pub fn retrospective(case_fraction: f64, population_prevalence: f64, alpha: f64) -> Result<Self> {
        Self::new(
            Sampling::Retrospective {
                case_fraction,
                population_prevalence,
            },
            alpha,
        )
    }

    /// Prevalence the intercept is solved against: the population
    /// prevalence for prospective sampling, the case fraction for
    /// retrospective sampling.
    pub fn effective_prevalence(&self) -> f64 {
        match self.sampling {
            Sampling::Prospective { prevalence } => prevalence,
            Sampling::Retrospective { case_fraction, .. } => case_fraction,
        }
    }

    pub fn is_retrospective(&self) -> bool {
        matches!(self.sampling, Sampling::Retrospective { .. })
    }
}

/// Full user-facing model: genotype, covariates, genetic effect and design.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub genotype: GenotypeModel,
    pub covariates: Vec<CovariateModel>,
    /// Genetic effect, log-odds per unit coded G.
    pub beta_g: f64,
    pub design: StudyDesign,
}

impl ModelSpec {
    pub fn new(
        genotype: GenotypeModel,
        covariates: Vec<CovariateModel>,
        beta_g: f64,
        design: StudyDesign,
    ) -> Result<Self> {
        if !beta_g.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta_g must be finite, got {beta_g}"
            )));
        }
        for (i, c) in covariates.iter().enumerate() {
            if covariates[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate covariate name '{}'",
                    c.name
                )));
            }
        }
        Ok(ModelSpec {
            genotype,
            covariates,
            beta_g,
            design,
        })
    }
}

/// Convert an odds ratio to a log-odds effect.
pub fn or_to_beta(odds_ratio: f64) -> Result<f64> {
    if !(odds_ratio > 0.0) || !odds_ratio.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "odds ratio must be positive and finite, got {odds_ratio}"
        )));
    }
    Ok(odds_ratio.ln())
}

/// A covariate with its second-stage regression solved: the intercept
/// gamma_0 and, for continuous covariates, the conditional SD given G.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedCovariate {
    pub model: CovariateModel,
    pub gamma_0: f64,
    pub sigma_cond: Option<f64>,
}

impl SolvedCovariate {
    /// P(E = 1 | G = g) for a binary covariate.
    pub fn conditional_rate(&self, g: f64) -> f64 {
        debug_assert!(self.model.is_binary());
        expit(self.gamma_0 + self.model.gamma_g * g)
    }

    /// E[E | G = g] for a continuous covariate.
    pub fn conditional_mean(&self, g: f64) -> f64 {
        self.gamma_0 + self.model.gamma_g * g
    }
}

const SECOND_STAGE_XTOL: f64 = 1e-10;
const INTERCEPT_XTOL: f64 = 1e-12;

/// Solve the second-stage regression of one covariate on G.
///
/// Binary E: finds gamma_0 so that the HWE-weighted mean of
/// expit(gamma_0 + gamma_G g) equals the marginal rate. Continuous E:
/// gamma_0 = mu_E - gamma_G E[G] and
/// sigma_cond = sqrt(sigma_E^2 - gamma_G^2 Var(G)).
pub fn solve_second_stage(g: &GenotypeModel, c: &CovariateModel) -> Result<(f64, Option<f64>)> {
    match c.dist {
        CovariateDist::Binary { rate } => {
            let pmf = g.pmf();
            let gamma_g = c.gamma_g;
            let f = |g0: f64| -> f64 {
                pmf.iter()
                    .map(|(gv, pv)| pv * expit(g0 + gamma_g * gv))
                    .sum::<f64>()
                    - rate
            };
            let logit_rate = (rate / (1.0 - rate)).ln();
            let half = c.gamma_g.abs() * g.max_coded();
            let gamma_0 = brent_expanding(f, logit_rate - half, logit_rate + half, SECOND_STAGE_XTOL)?;
            Ok((gamma_0, None))
        }
        CovariateDist::Continuous { mean, sd } => {
            let m = g.moments();
            let explained = c.gamma_g * c.gamma_g * m.variance;
            let sigma_sq = sd * sd;
            if sigma_sq <= explained {
                return Err(Error::InfeasibleVariance {
                    name: c.name.clone(),
                    sigma_sq,
                    explained,
                });
            }
            let gamma_0 = mean - c.gamma_g * m.mean;
            Ok((gamma_0, Some((sigma_sq - explained).sqrt())))
        }
    }
}

/// A model with every implied coefficient solved, ready for computation.
#[derive(Debug, Clone)]
pub struct SolvedModel {
    pub spec: ModelSpec,
    pub beta_0: f64,
    pub covariates: Vec<SolvedCovariate>,
    pub effective_prevalence: f64,
    pub warnings: Vec<String>,
}

impl SolvedModel {
    /// Solve all second stages and the intercept of `spec`.
    pub fn solve(spec: ModelSpec) -> Result<SolvedModel> {
        let mut covariates = Vec::with_capacity(spec.covariates.len());
        for c in &spec.covariates {
            let (gamma_0, sigma_cond) = solve_second_stage(&spec.genotype, c)?;
            covariates.push(SolvedCovariate {
                model: c.clone(),
                gamma_0,
                sigma_cond,
            });
        }
        let space = CovariateSpace::from_parts(&spec.genotype, covariates);
        solve_intercept(&spec, &space)
    }

    /// Coefficient vector [beta_0, beta_G, beta_E1, ..., beta_EK] matching
    /// the design row layout (1, G, E1, ..., EK).
    pub fn coefficients(&self) -> Vec<f64> {
        let mut beta = Vec::with_capacity(2 + self.covariates.len());
        beta.push(self.beta_0);
        beta.push(self.spec.beta_g);
        beta.extend(self.covariates.iter().map(|c| c.model.beta_e));
        beta
    }

    /// Number of regression coefficients, 2 + K.
    pub fn dim(&self) -> usize {
        2 + self.covariates.len()
    }
}

/// Find beta_0 so that the prevalence implied by the covariate space
/// matches the design's effective prevalence.
///
/// The space must have been built from the same genotype model and
/// second-stage solutions as `spec`.
pub fn solve_intercept(spec: &ModelSpec, space: &CovariateSpace) -> Result<SolvedModel> {
    let target = spec.design.effective_prevalence();
    let beta_g = spec.beta_g;
    let betas_e: Vec<f64> = spec.covariates.iter().map(|c| c.beta_e).collect();
    let f = |b0: f64| -> f64 {
        space.expectation(|g, e| {
            let mut eta = b0 + beta_g * g;
            for (b, v) in betas_e.iter().zip(e.iter()) {
                eta += b * v;
            }
            expit(eta)
        }) - target
    };
    let center = (target / (1.0 - target)).ln();
    let beta_0 = brent(f, center - 10.0, center + 10.0, INTERCEPT_XTOL).or_else(|_| {
        // widen by doubling until the sign change appears
        brent_expanding(f, center - 10.0, center + 10.0, INTERCEPT_XTOL)
    })?;

    let mut warnings = Vec::new();
    if spec.design.is_retrospective() {
        warnings.push(
            "retrospective design: the intercept is solved at the case fraction while the \
             population covariate distribution is kept; the covariate space conditional on \
             case-control sampling can differ"
                .to_string(),
        );
    }
    Ok(SolvedModel {
        spec: spec.clone(),
        beta_0,
        covariates: space.covariates().to_vec(),
        effective_prevalence: target,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::build_space;

    fn no_cov_spec(maf: f64, coding: Coding, beta_g: f64, design: StudyDesign) -> ModelSpec {
        ModelSpec::new(GenotypeModel::new(maf, coding).unwrap(), vec![], beta_g, design).unwrap()
    }

    #[test]
    fn or_to_beta_examples() {
        assert_eq!(or_to_beta(1.0).unwrap(), 0.0);
        assert!((or_to_beta(1.5).unwrap() - 0.405_465_108_108_164_4).abs() < 1e-15);
        assert!((or_to_beta(2.5).unwrap() - 0.916_290_731_874_155_1).abs() < 1e-15);
        assert!(or_to_beta(0.0).is_err());
        assert!(or_to_beta(-2.0).is_err());
        assert!(or_to_beta(f64::INFINITY).is_err());
    }

    #[test]
    fn genotype_moments_examples() {
        let m = GenotypeModel::new(0.1, Coding::Additive).unwrap().moments();
        assert_eq!(m.pmf.len(), 3);
        assert!((m.pmf[0].1 - 0.81).abs() < 1e-15);
        assert!((m.pmf[1].1 - 0.18).abs() < 1e-15);
        assert!((m.pmf[2].1 - 0.01).abs() < 1e-15);
        assert!((m.mean - 0.2).abs() < 1e-15);
        assert!((m.variance - 0.18).abs() < 1e-15);

        let m = GenotypeModel::new(0.1, Coding::Dominant).unwrap().moments();
        assert!((m.pmf[0].1 - 0.81).abs() < 1e-15);
        assert!((m.pmf[1].1 - 0.19).abs() < 1e-15);
        assert!((m.mean - 0.19).abs() < 1e-15);
        assert!((m.variance - 0.1539).abs() < 1e-15);

        let m = GenotypeModel::new(0.5, Coding::Recessive).unwrap().moments();
        assert!((m.pmf[0].1 - 0.75).abs() < 1e-15);
        assert!((m.pmf[1].1 - 0.25).abs() < 1e-15);
        assert!((m.mean - 0.25).abs() < 1e-15);
        assert!((m.variance - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn pmf_sums_to_one() {
        for coding in [Coding::Additive, Coding::Dominant, Coding::Recessive] {
            for maf in [0.01, 0.1, 0.25, 0.5] {
                let s: f64 = GenotypeModel::new(maf, coding)
                    .unwrap()
                    .pmf()
                    .iter()
                    .map(|(_, p)| p)
                    .sum();
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn maf_bounds_enforced() {
        assert!(GenotypeModel::new(0.0, Coding::Additive).is_err());
        assert!(GenotypeModel::new(0.51, Coding::Additive).is_err());
        assert!(GenotypeModel::new(0.5, Coding::Additive).is_ok());
    }

    #[test]
    fn second_stage_binary_independent_collapses_to_marginal_logit() {
        let g = GenotypeModel::new(0.1, Coding::Additive).unwrap();
        let c = CovariateModel::new("e", CovariateDist::Binary { rate: 0.3 }, 0.0, 0.0).unwrap();
        let (g0, sc) = solve_second_stage(&g, &c).unwrap();
        assert!((g0 - (3.0f64 / 7.0).ln()).abs() < 1e-9);
        assert!(sc.is_none());
    }

    #[test]
    fn second_stage_continuous_independent() {
        let g = GenotypeModel::new(0.1, Coding::Additive).unwrap();
        let c = CovariateModel::new(
            "e",
            CovariateDist::Continuous { mean: 0.0, sd: 1.0 },
            0.0,
            0.0,
        )
        .unwrap();
        let (g0, sc) = solve_second_stage(&g, &c).unwrap();
        assert_eq!(g0, 0.0);
        assert_eq!(sc, Some(1.0));
    }

    #[test]
    fn second_stage_binary_dependent_frozen_root() {
        // Root of 0.81 expit(g0) + 0.18 expit(g0 + ln 0.2) + 0.01 expit(g0 + 2 ln 0.2) = 0.3,
        // solved independently with scipy brentq.
        let g = GenotypeModel::new(0.1, Coding::Additive).unwrap();
        let c = CovariateModel::new(
            "e",
            CovariateDist::Binary { rate: 0.3 },
            0.2f64.ln(),
            0.0,
        )
        .unwrap();
        let (g0, _) = solve_second_stage(&g, &c).unwrap();
        assert!((g0 - (-0.625_091_208_664_944_3)).abs() < 1e-8, "g0 = {g0}");
        // residual check: the returned root satisfies the defining equation
        let resid: f64 = g
            .pmf()
            .iter()
            .map(|(gv, pv)| pv * expit(g0 + 0.2f64.ln() * gv))
            .sum::<f64>()
            - 0.3;
        assert!(resid.abs() < 1e-10);
    }

    #[test]
    fn second_stage_infeasible_variance_names_covariate() {
        let g = GenotypeModel::new(0.1, Coding::Additive).unwrap();
        let c = CovariateModel::new(
            "age",
            CovariateDist::Continuous { mean: 0.0, sd: 0.1 },
            2.0,
            0.0,
        )
        .unwrap();
        let err = solve_second_stage(&g, &c).unwrap_err();
        assert!(err.to_string().contains("age"), "{err}");
    }

    #[test]
    fn intercept_no_covariates_zero_effect() {
        let spec = no_cov_spec(
            0.1,
            Coding::Additive,
            0.0,
            StudyDesign::prospective(0.2, 0.05).unwrap(),
        );
        let solved = SolvedModel::solve(spec).unwrap();
        assert!((solved.beta_0 - (-1.386_294_361_119_890_6)).abs() < 1e-9);
    }

    #[test]
    fn intercept_frozen_root_with_effect() {
        // 0.81 expit(b0) + 0.18 expit(b0 + ln 1.5) + 0.01 expit(b0 + 2 ln 1.5) = 0.2,
        // scipy brentq root.
        let spec = no_cov_spec(
            0.1,
            Coding::Additive,
            1.5f64.ln(),
            StudyDesign::prospective(0.2, 0.05).unwrap(),
        );
        let solved = SolvedModel::solve(spec).unwrap();
        assert!(
            (solved.beta_0 - (-1.476_229_233_486_193)).abs() < 1e-8,
            "beta_0 = {}",
            solved.beta_0
        );
    }

    #[test]
    fn intercept_retrospective_balanced_null_is_zero() {
        let spec = no_cov_spec(
            0.1,
            Coding::Additive,
            0.0,
            StudyDesign::retrospective(0.5, 0.2, 0.05).unwrap(),
        );
        let solved = SolvedModel::solve(spec).unwrap();
        assert!(solved.beta_0.abs() < 1e-9);
        assert_eq!(solved.effective_prevalence, 0.5);
        assert!(!solved.warnings.is_empty(), "retrospective mode warns");
    }

    #[test]
    fn prevalence_round_trip_across_designs() {
        // re-evaluating the prevalence expectation at the solved intercept
        // recovers the effective prevalence
        for k in [0.01, 0.1, 0.2, 0.5, 0.9, 0.999] {
            let spec = no_cov_spec(
                0.2,
                Coding::Additive,
                1.8f64.ln(),
                StudyDesign::prospective(k, 0.05).unwrap(),
            );
            let solved = SolvedModel::solve(spec).unwrap();
            let space = build_space(&solved);
            let beta = solved.coefficients();
            let prev = space.expectation(|g, e| {
                let mut eta = beta[0] + beta[1] * g;
                for (b, v) in beta[2..].iter().zip(e.iter()) {
                    eta += b * v;
                }
                expit(eta)
            });
            assert!(
                (prev - k).abs() < 1e-7,
                "round trip failed at K={k}: {prev}"
            );
        }
    }

    #[test]
    fn duplicate_covariate_names_rejected() {
        let g = GenotypeModel::new(0.1, Coding::Additive).unwrap();
        let c1 = CovariateModel::new("e", CovariateDist::Binary { rate: 0.3 }, 0.0, 0.1).unwrap();
        let c2 = CovariateModel::new("e", CovariateDist::Binary { rate: 0.4 }, 0.0, 0.2).unwrap();
        assert!(ModelSpec::new(
            g,
            vec![c1, c2],
            0.0,
            StudyDesign::prospective(0.2, 0.05).unwrap()
        )
        .is_err());
    }

    #[test]
    fn design_probabilities_must_be_interior() {
        assert!(StudyDesign::prospective(0.0, 0.05).is_err());
        assert!(StudyDesign::prospective(1.0, 0.05).is_err());
        assert!(StudyDesign::prospective(0.2, 0.0).is_err());
        assert!(StudyDesign::retrospective(0.5, 0.0, 0.05).is_err());
    }
}
