//! Python bindings: the solved model with its power / sample size
//! operations, plus the bare power formula helpers.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use assocpower::config::{scenario_preset, MethodSel, RunConfig};
use assocpower::error::Error;
use assocpower::power::{self, Method, DEFAULT_N_MAX};
use assocpower::runner::{required_n_rd, resolve_method, variance_factor};
use assocpower::space::{build_space, CovariateSpace};
use assocpower::{empirical_power, SolvedModel};

fn to_py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_method(method: &str) -> PyResult<MethodSel> {
    method.parse::<MethodSel>().map_err(to_py_err)
}

/// A solved trait/genotype/covariate model bound to its covariate space.
#[pyclass(name = "Model")]
struct PyModel {
    solved: SolvedModel,
    space: CovariateSpace,
}

impl PyModel {
    fn from_config(cfg: RunConfig) -> PyResult<Self> {
        let solved = SolvedModel::solve(cfg.spec).map_err(to_py_err)?;
        let space = build_space(&solved);
        Ok(PyModel { solved, space })
    }

    fn factor(&self, method: &str, b: u64, seed: u64, n_for_rd: Option<u64>) -> PyResult<(f64, Method)> {
        let sel = parse_method(method)?;
        let resolved = resolve_method(sel, &self.space);
        let vf = variance_factor(&self.solved, &self.space, resolved, b, seed, n_for_rd)
            .map_err(to_py_err)?;
        Ok((vf.v1, vf.method))
    }
}

#[pymethods]
impl PyModel {
    /// Build a model from a TOML configuration string.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        PyModel::from_config(RunConfig::from_toml_str(text).map_err(to_py_err)?)
    }

    /// Built-in scenario preset: "s1", "s2" or "s3".
    #[staticmethod]
    fn scenario(name: &str) -> PyResult<Self> {
        PyModel::from_config(scenario_preset(name).map_err(to_py_err)?)
    }

    /// Solved intercept beta_0.
    #[getter]
    fn beta0(&self) -> f64 {
        self.solved.beta_0
    }

    /// Coefficient vector [beta_0, beta_G, beta_E...].
    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.solved.coefficients()
    }

    /// Per-covariate solved second-stage intercepts gamma_0.
    #[getter]
    fn gamma0(&self) -> Vec<f64> {
        self.solved.covariates.iter().map(|c| c.gamma_0).collect()
    }

    /// Per-observation variance factor v1 for a method
    /// ("auto" | "ss" | "rd" | "exact").
    #[pyo3(signature = (method = "auto", b = 10_000, seed = 42, n = None))]
    fn v1(&self, method: &str, b: u64, seed: u64, n: Option<u64>) -> PyResult<f64> {
        Ok(self.factor(method, b, seed, n)?.0)
    }

    /// Wald-test power at sample size n.
    #[pyo3(signature = (n, alpha = 0.05, method = "auto", b = 10_000, seed = 42))]
    fn power(&self, n: u64, alpha: f64, method: &str, b: u64, seed: u64) -> PyResult<f64> {
        let (v1, resolved) = self.factor(method, b, seed, Some(n))?;
        let result = power::compute_power(v1, self.solved.spec.beta_g, n, alpha, resolved)
            .map_err(to_py_err)?;
        Ok(result.power)
    }

    /// Minimal n with power >= target_power.
    #[pyo3(signature = (target_power = 0.8, alpha = 0.05, method = "auto", b = 10_000, seed = 42))]
    fn sample_size(
        &self,
        target_power: f64,
        alpha: f64,
        method: &str,
        b: u64,
        seed: u64,
    ) -> PyResult<u64> {
        let sel = parse_method(method)?;
        let resolved = resolve_method(sel, &self.space);
        let result = if resolved == Method::Rd {
            required_n_rd(&self.solved, &self.space, target_power, alpha).map_err(to_py_err)?
        } else {
            let (v1, method) = self.factor(method, b, seed, None)?;
            power::required_sample_size(
                v1,
                self.solved.spec.beta_g,
                target_power,
                alpha,
                DEFAULT_N_MAX,
                method,
            )
            .map_err(to_py_err)?
        };
        Ok(result.n_required)
    }

    /// Empirical power from the Monte Carlo oracle.
    #[pyo3(signature = (n, alpha = 0.05, replicates = 1000, seed = 42))]
    fn oracle_power(&self, n: u64, alpha: f64, replicates: u64, seed: u64) -> PyResult<f64> {
        let result = empirical_power(&self.solved, n as usize, alpha, replicates, seed)
            .map_err(to_py_err)?;
        Ok(result.empirical_power)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(beta_0={:.6}, beta_g={:.6}, covariates={}, prevalence={})",
            self.solved.beta_0,
            self.solved.spec.beta_g,
            self.solved.covariates.len(),
            self.solved.effective_prevalence
        )
    }
}

/// ln(odds ratio); rejects non-positive input.
#[pyfunction]
fn or_to_beta(odds_ratio: f64) -> PyResult<f64> {
    assocpower::or_to_beta(odds_ratio).map_err(to_py_err)
}

/// Wald power from a per-observation variance factor.
#[pyfunction]
#[pyo3(signature = (v1, beta_g, n, alpha = 0.05))]
fn compute_power(v1: f64, beta_g: f64, n: u64, alpha: f64) -> PyResult<f64> {
    Ok(power::compute_power(v1, beta_g, n, alpha, Method::Exact)
        .map_err(to_py_err)?
        .power)
}

/// Minimal n with power >= target_power for a variance factor.
#[pyfunction]
#[pyo3(signature = (v1, beta_g, target_power = 0.8, alpha = 0.05))]
fn required_sample_size(v1: f64, beta_g: f64, target_power: f64, alpha: f64) -> PyResult<u64> {
    Ok(
        power::required_sample_size(v1, beta_g, target_power, alpha, DEFAULT_N_MAX, Method::Exact)
            .map_err(to_py_err)?
            .n_required,
    )
}

/// Linear-regression (continuous trait) power: covariates enter only
/// through the residual variance.
#[pyfunction]
#[pyo3(signature = (beta_g, var_g, residual_sd, n, alpha = 0.05))]
fn linear_trait_power(beta_g: f64, var_g: f64, residual_sd: f64, n: u64, alpha: f64) -> PyResult<f64> {
    Ok(power::linear_trait_power(beta_g, var_g, residual_sd, n, alpha)
        .map_err(to_py_err)?
        .power)
}

#[pymodule]
fn assocpower_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(or_to_beta, m)?)?;
    m.add_function(wrap_pyfunction!(compute_power, m)?)?;
    m.add_function(wrap_pyfunction!(required_sample_size, m)?)?;
    m.add_function(wrap_pyfunction!(linear_trait_power, m)?)?;
    Ok(())
}
