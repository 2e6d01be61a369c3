//! TOML run configuration: model description plus command parameters, and
//! the built-in scenario presets.
//!
//! The schema is strict: unknown keys are rejected so typos fail loudly.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    or_to_beta, Coding, CovariateDist, CovariateModel, GenotypeModel, ModelSpec, StudyDesign,
};

pub const DEFAULT_B: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_REPLICATES: u64 = 1000;
pub const DEFAULT_TARGET_POWER: f64 = 0.8;

/// Estimator selection; `auto` resolves to exact enumeration/quadrature
/// when available and semi-simulation otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSel {
    Auto,
    Ss,
    Rd,
    Exact,
}

impl FromStr for MethodSel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodSel::Auto),
            "ss" => Ok(MethodSel::Ss),
            "rd" => Ok(MethodSel::Rd),
            "exact" => Ok(MethodSel::Exact),
            other => Err(Error::Config(format!(
                "method must be one of auto|ss|rd|exact, got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

impl FromStr for OutFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutFormat::Csv),
            "json" => Ok(OutFormat::Json),
            other => Err(Error::Config(format!(
                "format must be csv or json, got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingKind {
    Prospective,
    Retrospective,
}

/// alpha may be a single level or a list of levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaField {
    One(f64),
    Many(Vec<f64>),
}

/// One covariate block of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCovariate {
    pub name: String,
    pub kind: String, // "binary" | "continuous"
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    #[serde(default)]
    pub gamma_g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub or_e: Option<f64>,
}

/// The raw (file-shaped) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub maf: f64,
    pub coding: Coding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub or_g: Option<f64>,
    pub sampling: SamplingKind,
    pub prevalence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub covariate: Vec<RawCovariate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodSel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub or_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariate_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

/// Validated, normalized run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub spec: ModelSpec,
    pub method: MethodSel,
    pub b: u64,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub n: Option<u64>,
    pub n_grid: Vec<u64>,
    pub target_power: Option<f64>,
    pub or_grid: Vec<f64>,
    pub replicates: u64,
    pub covariate_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: OutFormat,
    pub threads: usize,
}

fn build_covariate(raw: &RawCovariate) -> Result<CovariateModel> {
    let beta_e = match (raw.beta_e, raw.or_e) {
        (Some(b), None) => b,
        (None, Some(or)) => or_to_beta(or)
            .map_err(|e| Error::Config(format!("covariate '{}': {e}", raw.name)))?,
        (Some(_), Some(_)) => {
            return Err(Error::Config(format!(
                "covariate '{}': give exactly one of beta_e or or_e",
                raw.name
            )))
        }
        (None, None) => {
            return Err(Error::Config(format!(
                "covariate '{}': beta_e or or_e is required (use 0/1.0 for no effect)",
                raw.name
            )))
        }
    };
    let dist = match raw.kind.as_str() {
        "binary" => {
            if raw.mean.is_some() || raw.sd.is_some() {
                return Err(Error::Config(format!(
                    "covariate '{}': binary covariates take 'rate', not mean/sd",
                    raw.name
                )));
            }
            CovariateDist::Binary {
                rate: raw.rate.ok_or_else(|| {
                    Error::Config(format!("covariate '{}': binary needs 'rate'", raw.name))
                })?,
            }
        }
        "continuous" => {
            if raw.rate.is_some() {
                return Err(Error::Config(format!(
                    "covariate '{}': continuous covariates take mean/sd, not 'rate'",
                    raw.name
                )));
            }
            CovariateDist::Continuous {
                mean: raw.mean.ok_or_else(|| {
                    Error::Config(format!("covariate '{}': continuous needs 'mean'", raw.name))
                })?,
                sd: raw.sd.ok_or_else(|| {
                    Error::Config(format!("covariate '{}': continuous needs 'sd'", raw.name))
                })?,
            }
        }
        other => {
            return Err(Error::Config(format!(
                "covariate '{}': kind must be binary or continuous, got '{other}'",
                raw.name
            )))
        }
    };
    CovariateModel::new(raw.name.clone(), dist, raw.gamma_g, beta_e)
        .map_err(|e| Error::Config(e.to_string()))
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig, scenario: Option<String>) -> Result<RunConfig> {
        let beta_g = match (raw.beta_g, raw.or_g) {
            (Some(b), None) => b,
            (None, Some(or)) => or_to_beta(or).map_err(|e| Error::Config(e.to_string()))?,
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give exactly one of beta_g or or_g".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "beta_g or or_g is required (use 0 / 1.0 for the null)".into(),
                ))
            }
        };
        let alphas = match &raw.alpha {
            None => vec![DEFAULT_ALPHA],
            Some(AlphaField::One(a)) => vec![*a],
            Some(AlphaField::Many(list)) if !list.is_empty() => list.clone(),
            Some(AlphaField::Many(_)) => {
                return Err(Error::Config("alpha list must not be empty".into()))
            }
        };
        for a in &alphas {
            if !(*a > 0.0 && *a < 1.0) {
                return Err(Error::Config(format!("alpha must lie in (0,1), got {a}")));
            }
        }
        let design = match raw.sampling {
            SamplingKind::Prospective => {
                if raw.case_fraction.is_some() {
                    return Err(Error::Config(
                        "case_fraction is only valid with retrospective sampling".into(),
                    ));
                }
                StudyDesign::prospective(raw.prevalence, alphas[0])
            }
            SamplingKind::Retrospective => StudyDesign::retrospective(
                raw.case_fraction.ok_or_else(|| {
                    Error::Config("retrospective sampling needs case_fraction".into())
                })?,
                raw.prevalence,
                alphas[0],
            ),
        }
        .map_err(|e| Error::Config(e.to_string()))?;

        let genotype =
            GenotypeModel::new(raw.maf, raw.coding).map_err(|e| Error::Config(e.to_string()))?;
        let covariates = raw
            .covariate
            .iter()
            .map(build_covariate)
            .collect::<Result<Vec<_>>>()?;
        let spec = ModelSpec::new(genotype, covariates, beta_g, design)
            .map_err(|e| Error::Config(e.to_string()))?;

        if raw.n.is_some() && raw.target_power.is_some() {
            return Err(Error::Config(
                "give exactly one of n or target_power per computation request".into(),
            ));
        }
        if let Some(t) = raw.target_power {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!(
                    "target_power must lie in (0,1), got {t}"
                )));
            }
        }
        if let Some(b) = raw.b {
            if b < 100 {
                return Err(Error::Config(format!("B must be >= 100, got {b}")));
            }
        }
        if raw.replicates == Some(0) {
            return Err(Error::Config("replicates must be positive".into()));
        }

        Ok(RunConfig {
            scenario,
            spec,
            method: raw.method.unwrap_or(MethodSel::Auto),
            b: raw.b.unwrap_or(DEFAULT_B),
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            alphas,
            n: raw.n,
            n_grid: raw.n_grid.clone().unwrap_or_default(),
            target_power: raw.target_power,
            or_grid: raw.or_grid.clone().unwrap_or_default(),
            replicates: raw.replicates.unwrap_or(DEFAULT_REPLICATES),
            covariate_file: raw.covariate_file.clone(),
            out: raw.out.clone(),
            format: raw.format.unwrap_or(OutFormat::Csv),
            threads: raw.threads.unwrap_or(0),
        })
    }

    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        RunConfig::from_raw(&raw, None)
    }

    pub fn from_toml_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_toml_str(&text)
    }
}

/// The odds-ratio grid shared by the scenario presets: 1.1 to 2.5.
pub fn preset_or_grid() -> Vec<f64> {
    vec![1.1, 1.3, 1.5, 1.7, 1.9, 2.1, 2.3, 2.5]
}

/// Built-in scenario presets.
///
/// * `s1`: retrospective 1:1 case-control at population prevalence 0.2,
///   MAF 0.1 dominant, no covariates, OR 1.5.
/// * `s2`: prospective at prevalence 0.2, binary covariate with rate 0.3,
///   beta_E = ln 2.5, gamma_G = ln 0.2, OR 1.5.
/// * `s3`: prospective at prevalence 0.2, continuous covariate that is
///   standard normal given G (gamma_G = ln 0.5, beta_E = ln 2.5), OR 1.3.
pub fn scenario_preset(name: &str) -> Result<RunConfig> {
    let lower = name.to_ascii_lowercase();
    let raw = match lower.as_str() {
        "s1" => RawConfig {
            maf: 0.1,
            coding: Coding::Dominant,
            beta_g: None,
            or_g: Some(1.5),
            sampling: SamplingKind::Retrospective,
            prevalence: 0.2,
            case_fraction: Some(0.5),
            covariate: vec![],
            method: None,
            b: None,
            seed: None,
            alpha: None,
            n: None,
            n_grid: Some(vec![250, 500, 1000, 1500, 2000, 3000]),
            target_power: Some(DEFAULT_TARGET_POWER),
            or_grid: Some(preset_or_grid()),
            replicates: None,
            covariate_file: None,
            out: None,
            format: None,
            threads: None,
        },
        "s2" => RawConfig {
            maf: 0.1,
            coding: Coding::Dominant,
            beta_g: None,
            or_g: Some(1.5),
            sampling: SamplingKind::Prospective,
            prevalence: 0.2,
            case_fraction: None,
            covariate: vec![RawCovariate {
                name: "exposure".into(),
                kind: "binary".into(),
                rate: Some(0.3),
                mean: None,
                sd: None,
                gamma_g: 0.2f64.ln(),
                beta_e: None,
                or_e: Some(2.5),
            }],
            method: None,
            b: None,
            seed: None,
            alpha: None,
            n: None,
            n_grid: Some(vec![500, 1000, 2000, 3000, 4500, 6000]),
            target_power: Some(DEFAULT_TARGET_POWER),
            or_grid: Some(preset_or_grid()),
            replicates: None,
            covariate_file: None,
            out: None,
            format: None,
            threads: None,
        },
        "s3" => {
            // E | G ~ N(gamma_0 + gamma_G G, 1): the marginal sd follows
            // from the law of total variance so that sigma_cond = 1.
            let gamma_g = 0.5f64.ln();
            let var_g = GenotypeModel::new(0.1, Coding::Dominant)
                .expect("valid preset genotype")
                .moments()
                .variance;
            let sd = (1.0 + gamma_g * gamma_g * var_g).sqrt();
            RawConfig {
                maf: 0.1,
                coding: Coding::Dominant,
                beta_g: None,
                or_g: Some(1.3),
                sampling: SamplingKind::Prospective,
                prevalence: 0.2,
                case_fraction: None,
                covariate: vec![RawCovariate {
                    name: "exposure".into(),
                    kind: "continuous".into(),
                    rate: None,
                    mean: Some(0.0),
                    sd: Some(sd),
                    gamma_g,
                    beta_e: None,
                    or_e: Some(2.5),
                }],
                method: None,
                b: None,
                seed: None,
                alpha: None,
                n: None,
                n_grid: Some(vec![1000, 2000, 4000, 6000, 9000, 12000]),
                target_power: Some(DEFAULT_TARGET_POWER),
                or_grid: Some(preset_or_grid()),
                replicates: None,
                covariate_file: None,
                out: None,
                format: None,
                threads: None,
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown scenario '{other}' (expected s1, s2 or s3)"
            )))
        }
    };
    RunConfig::from_raw(&raw, Some(lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "maf = 0.1\ncoding = \"dominant\"\nor_g = 1.5\nsampling = \"prospective\"\nprevalence = 0.2\n";
    const COV_BLOCK: &str = "[[covariate]]\nname = \"exposure\"\nkind = \"binary\"\nrate = 0.3\ngamma_g = -1.6094379124341003\nor_e = 2.5\n";

    // top-level keys must come before the covariate table in TOML
    fn sample_with(extra: &str) -> String {
        format!("{HEAD}{extra}\n{COV_BLOCK}")
    }

    #[test]
    fn parses_sample_config() {
        let cfg = RunConfig::from_toml_str(&sample_with("")).unwrap();
        assert_eq!(cfg.spec.covariates.len(), 1);
        assert!((cfg.spec.beta_g - 1.5f64.ln()).abs() < 1e-15);
        assert_eq!(cfg.b, DEFAULT_B);
        assert_eq!(cfg.alphas, vec![0.05]);
        assert_eq!(cfg.method, MethodSel::Auto);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_toml_str(&sample_with("not_a_key = 1")).is_err());
    }

    #[test]
    fn rejects_both_effect_forms() {
        assert!(RunConfig::from_toml_str(&sample_with("beta_g = 0.4")).is_err());
    }

    #[test]
    fn rejects_n_and_target_together() {
        assert!(RunConfig::from_toml_str(&sample_with("n = 100\ntarget_power = 0.8")).is_err());
    }

    #[test]
    fn alpha_accepts_scalar_or_list() {
        let one = RunConfig::from_toml_str(&sample_with("alpha = 0.01")).unwrap();
        assert_eq!(one.alphas, vec![0.01]);
        let many = RunConfig::from_toml_str(&sample_with("alpha = [0.05, 5e-8]")).unwrap();
        assert_eq!(many.alphas, vec![0.05, 5e-8]);
    }

    #[test]
    fn config_round_trips_through_serialization() {
        let text = sample_with("n_grid = [500, 1000]\nseed = 7");
        let raw: RawConfig = toml::from_str(&text).unwrap();
        let serialized = toml::to_string(&raw).unwrap();
        let again: RawConfig = toml::from_str(&serialized).unwrap();
        assert_eq!(raw, again);
    }

    #[test]
    fn presets_build() {
        for name in ["s1", "s2", "s3"] {
            let cfg = scenario_preset(name).unwrap();
            assert_eq!(cfg.scenario.as_deref(), Some(name));
            assert!(!cfg.n_grid.is_empty());
            assert_eq!(cfg.or_grid.len(), 8);
            assert_eq!(cfg.target_power, Some(0.8));
        }
        assert!(scenario_preset("s4").is_err());
        // s1 is retrospective 1:1
        let s1 = scenario_preset("s1").unwrap();
        assert!(s1.spec.design.is_retrospective());
        // s3's covariate is conditionally standard normal
        let s3 = scenario_preset("s3").unwrap();
        match s3.spec.covariates[0].dist {
            CovariateDist::Continuous { sd, .. } => {
                assert!((sd - 1.036_311_593_509_409_4).abs() < 1e-12)
            }
            _ => panic!("s3 covariate must be continuous"),
        }
    }

    #[test]
    fn retrospective_needs_case_fraction() {
        let bad = sample_with("").replace("\"prospective\"", "\"retrospective\"");
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }
}
