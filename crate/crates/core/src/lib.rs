//! Power and required sample size for genetic association tests of binary
//! traits under logistic regression, with explicit non-genetic covariate
//! effects and gene-environment dependence.
//!
//! Two estimators of the per-observation Fisher information drive the
//! Wald-test power formula:
//!
//! * semi-simulation ([`fisher::estimate_info_ss`]): average B
//!   single-observation information matrices over draws from the
//!   covariate space; cost depends on B, not on the target sample size;
//! * representative dataset ([`repdata::build_representative`]): a
//!   deterministic size-n covariate layout expanded to 2n
//!   outcome-weighted rows whose weighted MLE yields the variance.
//!
//! Exact enumeration / Gauss-Hermite quadrature
//! ([`fisher::estimate_info_exact`]) covers discrete spaces and up to two
//! continuous covariates, and a seeded Monte Carlo oracle
//! ([`oracle::empirical_power`]) verifies everything empirically.

pub mod config;
pub mod error;
pub mod fisher;
pub mod glm;
pub mod matrix;
pub mod model;
pub mod num;
pub mod oracle;
pub mod power;
pub mod repdata;
pub mod report;
pub mod rng;
pub mod runner;
pub mod space;

pub use config::{scenario_preset, MethodSel, OutFormat, RunConfig};
pub use error::{Error, Result};
pub use fisher::{conditional_info, estimate_info_exact, estimate_info_ss, FisherEstimate};
pub use glm::{fit_weighted_logistic, wald_test, Dataset, FitResult};
pub use model::{
    or_to_beta, Coding, CovariateDist, CovariateModel, GenotypeModel, ModelSpec, SolvedModel,
    StudyDesign,
};
pub use oracle::{empirical_power, simulate_dataset, OracleResult};
pub use power::{
    compute_power, linear_trait_power, required_sample_size, Method, PowerResult,
    SampleSizeResult,
};
pub use repdata::{build_representative, power_variance_rd, RepresentativeDataset};
pub use space::{build_space, CovariateSample, CovariateSpace};
