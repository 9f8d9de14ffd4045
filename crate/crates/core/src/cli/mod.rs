//! Configuration parsing, scenario orchestration and CSV/JSON emission.

mod config;
mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use config::{parse_config, GridConfig, OutputConfig, PointSpec, Scenario, ScenarioConfig};
pub use scenario::{
    output_dir, read_summary, run_checks, run_scenario, sweep_angles, write_summary, CheckSummary, GridSummary,
    OracleSummary, Outcome, PointStatus, RunSummary, Summary, SweepReport, ALGEBRA_SAMPLES, FOOTBALL_TOL,
};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    CheckFailure = 1,
    ConfigError = 2,
    NumericFailure = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }

    /// How a library error ends the process.
    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Parameter { .. }
            | Error::Json(_)
            | Error::KTooLarge { .. }
            | Error::Inadmissible { .. } => Exit::ConfigError,
            _ => Exit::NumericFailure,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "conical-flow", version, about = "Regularized conical Kähler-Ricci flows on the sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Execute the scenario named in the config.
    Run(Common),
    /// Run an angle sweep and report the convergence frontier.
    Sweep(Common),
    /// Solve the stationary equation for every (gamma, epsilon) of the config.
    Oracle(Common),
    /// Execute the scenario with all checks enabled.
    Check(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and check suites.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn execute(verb: &Verb) -> Exit {
    let (Verb::Run(c) | Verb::Sweep(c) | Verb::Oracle(c) | Verb::Check(c)) = verb;
    let mut cfg = match parse_config(&c.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::ConfigError;
        }
    };
    match verb {
        Verb::Sweep(_) if cfg.scenario != Scenario::AngleSweep => {
            eprintln!("error: sweep needs scenario \"angle-sweep\", got {:?}", cfg.scenario);
            return Exit::ConfigError;
        }
        Verb::Oracle(_) => {
            cfg.scenario = Scenario::Oracle;
            if let Err(e) = cfg.validate(None) {
                eprintln!("error: {e}");
                return Exit::ConfigError;
            }
        }
        _ => {}
    }
    let out = output_dir(c.out.as_deref(), &cfg);
    let force = matches!(verb, Verb::Check(_));
    let job = || run_scenario(&cfg, &out, force);
    let result = match c.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(job),
            Err(e) => {
                eprintln!("error: cannot start {n} threads: {e}");
                return Exit::ConfigError;
            }
        },
        None => job(),
    };
    match result {
        Err(e) => {
            eprintln!("error: {e}");
            Exit::for_error(&e)
        }
        Ok(o) => {
            for chk in &o.checks {
                println!("{}", chk.summary_line());
            }
            if let Some(msg) = &o.numeric_failure {
                eprintln!("numeric failure: {msg}");
                Exit::NumericFailure
            } else if !o.checks_pass() {
                Exit::CheckFailure
            } else {
                Exit::Success
            }
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli.verb).code(),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                Exit::ConfigError.code()
            } else {
                Exit::Success.code()
            }
        }
    }
}
