//! Drives full computations from a `RunConfig`: power, sample size,
//! sweeps, oracle verification and conditional (observed-covariate) mode.

use std::time::Instant;

use serde::Serialize;

use crate::config::{MethodSel, RunConfig, DEFAULT_TARGET_POWER};
use crate::error::{Error, Result};
use crate::fisher::{conditional_info, estimate_info_exact, estimate_info_ss};
use crate::model::{ModelSpec, SolvedModel};
use crate::oracle::empirical_power;
use crate::power::{
    compute_power, power_value, required_sample_size, Method, SampleSizeResult, DEFAULT_N_MAX,
};
use crate::repdata::{build_representative, power_variance_rd};
use crate::space::{build_space, CovariateSample, CovariateSpace};

/// One output row; the CSV column set in order.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub scenario: String,
    pub method: String,
    pub design: String,
    pub maf: f64,
    pub coding: String,
    pub or_g: f64,
    /// JSON array of the per-covariate trait effects beta_E.
    pub beta_e_json: String,
    pub n: Option<u64>,
    pub alpha: f64,
    pub power: Option<f64>,
    pub n_required: Option<u64>,
    pub v1: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<u64>,
    pub seed: Option<u64>,
    pub mc_se: Option<f64>,
    pub runtime_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ResultRow {
    fn template(cfg: &RunConfig, spec: &ModelSpec) -> ResultRow {
        ResultRow {
            scenario: cfg.scenario.clone().unwrap_or_else(|| "custom".into()),
            method: String::new(),
            design: if spec.design.is_retrospective() {
                "retrospective".into()
            } else {
                "prospective".into()
            },
            maf: spec.genotype.maf(),
            coding: spec.genotype.coding().to_string(),
            or_g: spec.beta_g.exp(),
            beta_e_json: beta_e_json(spec),
            n: None,
            alpha: cfg.alphas[0],
            power: None,
            n_required: None,
            v1: None,
            b: None,
            seed: None,
            mc_se: None,
            runtime_ms: 0.0,
            error: None,
        }
    }
}

fn beta_e_json(spec: &ModelSpec) -> String {
    let betas: Vec<f64> = spec.covariates.iter().map(|c| c.beta_e).collect();
    serde_json::to_string(&betas).expect("serializing a float vector cannot fail")
}

/// Variance factor resolved for one method at one grid point.
#[derive(Debug, Clone)]
pub struct VarianceFactor {
    pub v1: f64,
    pub method: Method,
    pub mc_se: Option<f64>,
    /// B actually consumed (semi-simulation only).
    pub b: Option<u64>,
}

/// Resolve `auto` to exact when the space supports deterministic
/// evaluation, semi-simulation otherwise.
pub fn resolve_method(sel: MethodSel, space: &CovariateSpace) -> Method {
    match sel {
        MethodSel::Auto => {
            if space.supports_exact() {
                Method::Exact
            } else {
                Method::Ss
            }
        }
        MethodSel::Ss => Method::Ss,
        MethodSel::Rd => Method::Rd,
        MethodSel::Exact => Method::Exact,
    }
}

/// Per-observation variance factor v1 for a method. The representative
/// dataset needs the target sample size n (its variance is n-specific and
/// is rescaled by n to a per-observation factor).
pub fn variance_factor(
    solved: &SolvedModel,
    space: &CovariateSpace,
    method: Method,
    b: u64,
    seed: u64,
    n_for_rd: Option<u64>,
) -> Result<VarianceFactor> {
    match method {
        Method::Exact => {
            let est = estimate_info_exact(solved, space)?;
            Ok(VarianceFactor {
                v1: est.v1()?,
                method,
                mc_se: None,
                b: None,
            })
        }
        Method::Ss => {
            let est = estimate_info_ss(solved, space, b, seed)?;
            Ok(VarianceFactor {
                v1: est.v1()?,
                method,
                mc_se: est.mc_se_of_vg,
                b: Some(b),
            })
        }
        Method::Rd => {
            let n = n_for_rd.ok_or_else(|| {
                Error::InvalidParameter(
                    "representative-dataset variance needs a target sample size".into(),
                )
            })?;
            let rd = build_representative(solved, space, n)?;
            for w in &rd.warnings {
                eprintln!("warning: {w}");
            }
            let (v_g_n, _) = power_variance_rd(&rd, solved)?;
            Ok(VarianceFactor {
                v1: v_g_n * n as f64,
                method,
                mc_se: None,
                b: None,
            })
        }
        Method::Conditional => Err(Error::InvalidParameter(
            "conditional variance comes from run_conditional".into(),
        )),
    }
}

/// Sample size for the representative-dataset method. V_{G,n} depends on
/// n through the construction, so iterate: invert with v1 from the
/// current reference n, rebuild at the answer, and stop when stable.
pub fn required_n_rd(
    solved: &SolvedModel,
    space: &CovariateSpace,
    target_power: f64,
    alpha: f64,
) -> Result<SampleSizeResult> {
    let min_n = (space.discrete_strata().len() as u64).max(2 + solved.covariates.len() as u64 + 1);
    let mut n_ref = 1000u64.max(min_n);
    let mut result: Option<SampleSizeResult> = None;
    for _ in 0..6 {
        let rd = build_representative(solved, space, n_ref)?;
        let (v_g_n, _) = power_variance_rd(&rd, solved)?;
        let v1 = v_g_n * n_ref as f64;
        let res = required_sample_size(
            v1,
            solved.spec.beta_g,
            target_power,
            alpha,
            DEFAULT_N_MAX,
            Method::Rd,
        )?;
        let stable = result
            .as_ref()
            .map(|prev| prev.n_required == res.n_required)
            .unwrap_or(false);
        let next = res.n_required.max(min_n);
        result = Some(res);
        if stable {
            break;
        }
        n_ref = next;
    }
    Ok(result.expect("at least one iteration ran"))
}

fn solve_config_model(cfg: &RunConfig) -> Result<(SolvedModel, CovariateSpace)> {
    let solved = SolvedModel::solve(cfg.spec.clone())?;
    for w in &solved.warnings {
        eprintln!("warning: {w}");
    }
    let space = build_space(&solved);
    Ok((solved, space))
}

/// Power at the configured sample size(s), one row per (n, alpha).
pub fn run_power(cfg: &RunConfig) -> Result<Vec<ResultRow>> {
    let ns: Vec<u64> = match (cfg.n, cfg.n_grid.is_empty()) {
        (Some(n), _) => vec![n],
        (None, false) => cfg.n_grid.clone(),
        (None, true) => {
            return Err(Error::Config(
                "power computation needs n or n_grid".into(),
            ))
        }
    };
    let (solved, space) = solve_config_model(cfg)?;
    let method = resolve_method(cfg.method, &space);

    let mut rows = Vec::new();
    // ss/exact variance is n-independent: compute once
    let shared = if method != Method::Rd {
        Some(variance_factor(&solved, &space, method, cfg.b, cfg.seed, None)?)
    } else {
        None
    };
    for &n in &ns {
        let start = Instant::now();
        let vf = match &shared {
            Some(vf) => vf.clone(),
            None => variance_factor(&solved, &space, method, cfg.b, cfg.seed, Some(n))?,
        };
        for &alpha in &cfg.alphas {
            let pr = compute_power(vf.v1, solved.spec.beta_g, n, alpha, vf.method)?;
            let mut row = ResultRow::template(cfg, &solved.spec);
            row.method = vf.method.to_string();
            row.n = Some(n);
            row.alpha = alpha;
            row.power = Some(pr.power);
            row.v1 = Some(vf.v1);
            row.b = vf.b;
            row.seed = Some(cfg.seed);
            row.mc_se = vf.mc_se;
            row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Minimal sample size for the configured target power, per alpha.
pub fn run_samplesize(cfg: &RunConfig) -> Result<Vec<ResultRow>> {
    let target = cfg
        .target_power
        .ok_or_else(|| Error::Config("sample size computation needs target_power".into()))?;
    let (solved, space) = solve_config_model(cfg)?;
    let method = resolve_method(cfg.method, &space);

    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        if target <= alpha {
            return Err(Error::Config(format!(
                "target_power ({target}) must exceed alpha ({alpha})"
            )));
        }
        let start = Instant::now();
        let res = if method == Method::Rd {
            required_n_rd(&solved, &space, target, alpha)?
        } else {
            let vf = variance_factor(&solved, &space, method, cfg.b, cfg.seed, None)?;
            required_sample_size(
                vf.v1,
                solved.spec.beta_g,
                target,
                alpha,
                DEFAULT_N_MAX,
                vf.method,
            )?
        };
        let mut row = ResultRow::template(cfg, &solved.spec);
        row.method = res.method.to_string();
        row.alpha = alpha;
        row.power = Some(res.achieved_power);
        row.n_required = Some(res.n_required);
        row.v1 = Some(res.v1);
        row.b = (res.method == Method::Ss).then_some(cfg.b);
        row.seed = Some(cfg.seed);
        row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    PowerVsN,
    NVsOr,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power-vs-n" => Ok(SweepMode::PowerVsN),
            "n-vs-or" => Ok(SweepMode::NVsOr),
            other => Err(Error::Config(format!(
                "sweep mode must be power-vs-n or n-vs-or, got '{other}'"
            ))),
        }
    }
}

/// Grid sweep: power across n at fixed effect, or required n across the
/// odds-ratio grid at the target power. Per-point failures are recorded
/// on the row and the sweep continues.
pub fn run_sweep(cfg: &RunConfig, mode: SweepMode) -> Result<Vec<ResultRow>> {
    match mode {
        SweepMode::PowerVsN => run_power(cfg),
        SweepMode::NVsOr => {
            if cfg.or_grid.is_empty() {
                return Err(Error::Config("n-vs-or sweep needs or_grid".into()));
            }
            let target = cfg.target_power.unwrap_or(DEFAULT_TARGET_POWER);
            let mut rows = Vec::new();
            for &or in &cfg.or_grid {
                let mut spec = cfg.spec.clone();
                spec.beta_g = crate::model::or_to_beta(or).map_err(|e| Error::Config(e.to_string()))?;
                let start = Instant::now();
                let point = (|| -> Result<(SolvedModel, SampleSizeResult)> {
                    let solved = SolvedModel::solve(spec.clone())?;
                    let space = build_space(&solved);
                    let method = resolve_method(cfg.method, &space);
                    let res = if method == Method::Rd {
                        required_n_rd(&solved, &space, target, cfg.alphas[0])?
                    } else {
                        let vf =
                            variance_factor(&solved, &space, method, cfg.b, cfg.seed, None)?;
                        required_sample_size(
                            vf.v1,
                            solved.spec.beta_g,
                            target,
                            cfg.alphas[0],
                            DEFAULT_N_MAX,
                            vf.method,
                        )?
                    };
                    Ok((solved, res))
                })();
                let mut row = ResultRow::template(cfg, &spec);
                row.or_g = or;
                row.seed = Some(cfg.seed);
                row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
                match point {
                    Ok((_, res)) => {
                        row.method = res.method.to_string();
                        row.alpha = res.alpha;
                        row.power = Some(res.achieved_power);
                        row.n_required = Some(res.n_required);
                        row.v1 = Some(res.v1);
                        row.b = (res.method == Method::Ss).then_some(cfg.b);
                    }
                    Err(e) => {
                        eprintln!("warning: sweep point or_g={or} failed: {e}");
                        row.error = Some(e.to_string());
                    }
                }
                rows.push(row);
            }
            Ok(rows)
        }
    }
}

/// One verification row: a method's computed power against the empirical
/// oracle at the same grid point.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub scenario: String,
    pub design: String,
    pub or_g: f64,
    pub n: u64,
    pub alpha: f64,
    pub method: String,
    pub power: f64,
    pub oracle_power: f64,
    pub abs_error: f64,
    pub oracle_se: f64,
    pub replicates: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub method: String,
    pub mean_ae: f64,
    pub max_ae: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub summaries: Vec<VerifySummary>,
}

/// Benchmark the selected method(s) against the Monte Carlo oracle across
/// the power-vs-n grid. `auto` verifies both proposed methods.
pub fn run_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    if cfg.replicates < 100 {
        return Err(Error::Config(format!(
            "verification needs at least 100 replicates, got {}",
            cfg.replicates
        )));
    }
    let ns: Vec<u64> = match (cfg.n, cfg.n_grid.is_empty()) {
        (Some(n), _) => vec![n],
        (None, false) => cfg.n_grid.clone(),
        (None, true) => return Err(Error::Config("verification needs n or n_grid".into())),
    };
    let (solved, space) = solve_config_model(cfg)?;
    let methods: Vec<Method> = match cfg.method {
        MethodSel::Auto => vec![Method::Ss, Method::Rd],
        sel => vec![resolve_method(sel, &space)],
    };
    let alpha = cfg.alphas[0];

    let mut rows = Vec::new();
    for &n in &ns {
        let oracle = empirical_power(&solved, n as usize, alpha, cfg.replicates, cfg.seed)?;
        for &method in &methods {
            let vf = variance_factor(&solved, &space, method, cfg.b, cfg.seed, Some(n))?;
            let power = power_value(vf.v1, solved.spec.beta_g, n, alpha);
            rows.push(VerifyRow {
                scenario: cfg.scenario.clone().unwrap_or_else(|| "custom".into()),
                design: if solved.spec.design.is_retrospective() {
                    "retrospective".into()
                } else {
                    "prospective".into()
                },
                or_g: solved.spec.beta_g.exp(),
                n,
                alpha,
                method: method.to_string(),
                power,
                oracle_power: oracle.empirical_power,
                abs_error: (power - oracle.empirical_power).abs(),
                oracle_se: oracle.mc_se,
                replicates: cfg.replicates,
                seed: cfg.seed,
            });
        }
    }

    let mut summaries = Vec::new();
    for &method in &methods {
        let errs: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == method.to_string())
            .map(|r| r.abs_error)
            .collect();
        summaries.push(VerifySummary {
            method: method.to_string(),
            mean_ae: errs.iter().sum::<f64>() / errs.len() as f64,
            max_ae: errs.iter().copied().fold(0.0, f64::max),
        });
    }
    Ok(VerifyReport { rows, summaries })
}

/// Parse an observed-covariate file: a header row naming `G` followed by
/// the covariate names, one individual per line. The delimiter is
/// sniffed: tab, comma, or any whitespace.
pub fn parse_covariate_file(text: &str, spec: &ModelSpec) -> Result<Vec<CovariateSample>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("covariate file is empty".into()))?;
    let split = |line: &str| -> Vec<String> {
        if line.contains('\t') {
            line.split('\t').map(|s| s.trim().to_string()).collect()
        } else if line.contains(',') {
            line.split(',').map(|s| s.trim().to_string()).collect()
        } else {
            line.split_whitespace().map(|s| s.to_string()).collect()
        }
    };
    let names = split(header);
    let g_col = names
        .iter()
        .position(|n| n == "G" || n == "g")
        .ok_or_else(|| Error::Config("covariate file header needs a 'G' column".into()))?;
    let mut cov_cols = Vec::with_capacity(spec.covariates.len());
    for c in &spec.covariates {
        let idx = names.iter().position(|n| *n == c.name).ok_or_else(|| {
            Error::Config(format!("covariate file is missing column '{}'", c.name))
        })?;
        cov_cols.push(idx);
    }

    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields = split(line);
        if fields.len() != names.len() {
            return Err(Error::Config(format!(
                "covariate file line {}: expected {} fields, got {}",
                lineno + 2,
                names.len(),
                fields.len()
            )));
        }
        let parse = |idx: usize| -> Result<f64> {
            fields[idx].parse::<f64>().map_err(|_| {
                Error::Config(format!(
                    "covariate file line {}: '{}' is not a number",
                    lineno + 2,
                    fields[idx]
                ))
            })
        };
        let g = parse(g_col)?;
        if !spec.genotype.support_contains(g) {
            return Err(Error::Config(format!(
                "covariate file line {}: genotype {} outside the {} coding support",
                lineno + 2,
                g,
                spec.genotype.coding()
            )));
        }
        let mut e = Vec::with_capacity(spec.covariates.len());
        for (c, &idx) in spec.covariates.iter().zip(cov_cols.iter()) {
            let v = parse(idx)?;
            if c.is_binary() && v != 0.0 && v != 1.0 {
                return Err(Error::Config(format!(
                    "covariate file line {}: binary covariate '{}' must be 0 or 1, got {v}",
                    lineno + 2,
                    c.name
                )));
            }
            e.push(v);
        }
        out.push(CovariateSample { g, e });
    }
    Ok(out)
}

/// Conditional power on observed covariates. Power is evaluated at the
/// observed row count unless the config requests another n; with a
/// target_power set, the minimal n is computed from the conditional
/// variance factor instead.
pub fn run_conditional(cfg: &RunConfig) -> Result<Vec<ResultRow>> {
    let path = cfg
        .covariate_file
        .as_ref()
        .ok_or_else(|| Error::Config("conditional mode needs covariate_file".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let (solved, _) = solve_config_model(cfg)?;
    let observed = parse_covariate_file(&text, &solved.spec)?;
    let start = Instant::now();
    let est = conditional_info(&observed, &solved)?;
    let v1 = est.v1()?;

    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        let mut row = ResultRow::template(cfg, &solved.spec);
        row.method = Method::Conditional.to_string();
        row.alpha = alpha;
        row.v1 = Some(v1);
        row.seed = Some(cfg.seed);
        if let Some(target) = cfg.target_power {
            let res = required_sample_size(
                v1,
                solved.spec.beta_g,
                target,
                alpha,
                DEFAULT_N_MAX,
                Method::Conditional,
            )?;
            row.n_required = Some(res.n_required);
            row.power = Some(res.achieved_power);
        } else {
            let n = cfg.n.unwrap_or(observed.len() as u64);
            let pr = compute_power(v1, solved.spec.beta_g, n, alpha, Method::Conditional)?;
            row.n = Some(n);
            row.power = Some(pr.power);
        }
        row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        rows.push(row);
    }
    Ok(rows)
}
