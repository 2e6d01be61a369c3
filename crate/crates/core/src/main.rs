//! Command-line front end: power / samplesize / sweep / verify /
//! conditional over a TOML config or a built-in scenario preset.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use assocpower::config::{scenario_preset, MethodSel, OutFormat, RunConfig};
use assocpower::error::{Error, Result};
use assocpower::report;
use assocpower::runner::{self, SweepMode};

#[derive(Parser)]
#[command(
    name = "assocpower",
    version,
    about = "Power and sample size for binary-trait genetic association tests under logistic regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML configuration file (see README for the schema)
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario preset: s1, s2 or s3
    #[arg(long)]
    scenario: Option<String>,
    /// Variance estimator: auto | ss | rd | exact
    #[arg(long)]
    method: Option<String>,
    /// Draws for the semi-simulation estimator
    #[arg(long = "B")]
    b: Option<u64>,
    /// RNG seed (all randomness is derived from it)
    #[arg(long)]
    seed: Option<u64>,
    /// Significance level; repeat for several levels
    #[arg(long)]
    alpha: Vec<f64>,
    /// Sample size (power/conditional mode)
    #[arg(long)]
    n: Option<u64>,
    /// Target power (samplesize/sweep mode)
    #[arg(long)]
    target_power: Option<f64>,
    /// Oracle replicates (verify mode)
    #[arg(long)]
    replicates: Option<u64>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (0 = all cores); results do not depend on this
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Power at the configured sample size(s)
    Power(CommonArgs),
    /// Minimal sample size reaching the target power
    Samplesize(CommonArgs),
    /// Grid sweep: power-vs-n or n-vs-or curves
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// power-vs-n | n-vs-or
        #[arg(long, default_value = "power-vs-n")]
        mode: String,
    },
    /// Compare computed power against the Monte Carlo oracle
    Verify(CommonArgs),
    /// Conditional power on observed covariates
    Conditional {
        #[command(flatten)]
        common: CommonArgs,
        /// Observed-covariate file: header G,<covariate names>; one row
        /// per individual; tab, comma or whitespace separated
        #[arg(long)]
        covariates: Option<PathBuf>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match (&common.config, &common.scenario) {
        (Some(path), None) => RunConfig::from_toml_file(path)?,
        (None, Some(name)) => scenario_preset(name)?,
        (None, None) => {
            return Err(Error::Config(
                "give --config <file> or --scenario s1|s2|s3".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if let Some(m) = &common.method {
        cfg.method = m.parse::<MethodSel>()?;
    }
    if let Some(b) = common.b {
        if b < 100 {
            return Err(Error::Config(format!("B must be >= 100, got {b}")));
        }
        cfg.b = b;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if !common.alpha.is_empty() {
        for a in &common.alpha {
            if !(*a > 0.0 && *a < 1.0) {
                return Err(Error::Config(format!("alpha must lie in (0,1), got {a}")));
            }
        }
        cfg.alphas = common.alpha.clone();
    }
    if let Some(n) = common.n {
        cfg.n = Some(n);
        cfg.n_grid.clear();
    }
    if let Some(t) = common.target_power {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!(
                "target_power must lie in (0,1), got {t}"
            )));
        }
        cfg.target_power = Some(t);
    }
    if let Some(r) = common.replicates {
        cfg.replicates = r;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if let Some(f) = &common.format {
        cfg.format = f.parse::<OutFormat>()?;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn init_threads(cfg: &RunConfig) {
    if cfg.threads > 0 {
        // ignore failure: the pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
}

fn emit(cfg: &RunConfig, table: String, summary: String) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            file.write_all(table.as_bytes())?;
            eprint!("{summary}");
            eprintln!("wrote {}", path.display());
        }
        None => {
            print!("{table}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Power(common) => {
            let cfg = load_config(&common)?;
            init_threads(&cfg);
            let rows = runner::run_power(&cfg)?;
            let table = match cfg.format {
                OutFormat::Csv => report::rows_to_csv(&rows),
                OutFormat::Json => report::rows_to_json(&rows),
            };
            emit(&cfg, table, report::human_summary(&rows))
        }
        Command::Samplesize(common) => {
            let mut cfg = load_config(&common)?;
            if cfg.target_power.is_none() {
                cfg.target_power = Some(assocpower::config::DEFAULT_TARGET_POWER);
            }
            init_threads(&cfg);
            let rows = runner::run_samplesize(&cfg)?;
            let table = match cfg.format {
                OutFormat::Csv => report::rows_to_csv(&rows),
                OutFormat::Json => report::rows_to_json(&rows),
            };
            emit(&cfg, table, report::human_summary(&rows))
        }
        Command::Sweep { common, mode } => {
            let cfg = load_config(&common)?;
            init_threads(&cfg);
            let mode = mode.parse::<SweepMode>()?;
            let rows = runner::run_sweep(&cfg, mode)?;
            let table = match cfg.format {
                OutFormat::Csv => report::rows_to_csv(&rows),
                OutFormat::Json => report::rows_to_json(&rows),
            };
            emit(&cfg, table, report::human_summary(&rows))
        }
        Command::Verify(common) => {
            let cfg = load_config(&common)?;
            init_threads(&cfg);
            let rep = runner::run_verify(&cfg)?;
            let table = match cfg.format {
                OutFormat::Csv => report::verify_to_csv(&rep),
                OutFormat::Json => report::verify_to_json(&rep),
            };
            emit(&cfg, table, report::verify_summary(&rep))
        }
        Command::Conditional { common, covariates } => {
            let mut cfg = load_config(&common)?;
            if let Some(path) = covariates {
                cfg.covariate_file = Some(path);
            }
            init_threads(&cfg);
            let rows = runner::run_conditional(&cfg)?;
            let table = match cfg.format {
                OutFormat::Csv => report::rows_to_csv(&rows),
                OutFormat::Json => report::rows_to_json(&rows),
            };
            emit(&cfg, table, report::human_summary(&rows))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
