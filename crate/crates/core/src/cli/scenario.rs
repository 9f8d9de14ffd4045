use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Scenario, ScenarioConfig};
#[cfg(test)]
use super::config::parse_config;
use crate::discretization::{GridMode, SphereGrid};
use crate::error::{Error, Result};
use crate::flow::{
    beta_twisted_params, newton_stationary, parse_snapshot, potential_text, run_flow, shift_constant, write_snapshot,
    InitialData, Problem, RunResult, RunStatus, TwistData,
};
use crate::functionals::{mabuchi_with_forcing, write_csv, FunctionalReport};
use crate::geometry::{select_k, DivisorData, FlowParams};
use crate::validation::{
    check_energy_dissipation, check_energy_identities, check_football, check_functional_algebra, check_jensen,
    check_minimizer, check_monotonicity, check_run_agreement, check_scalar_lower_bound, check_shifted_alpha,
    check_stationary_agreement, check_uniform_bounds, football_error, suite_passes, write_check_report,
    CheckOutcome, FootballEntry, Monotone, MONOTONE_SLACK, SCALAR_SLACK,
};

/// Largest football density error accepted at the end of an ε-sequence.
pub const FOOTBALL_TOL: f64 = 0.02;
/// Random potentials drawn by the check suite's functional-algebra check.
pub const ALGEBRA_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStatus {
    Converged,
    MaxTime,
    Diverged,
    /// The run stopped with an error before producing a result.
    Failed,
}

impl From<RunStatus> for PointStatus {
    fn from(s: RunStatus) -> Self {
        match s {
            RunStatus::Converged => PointStatus::Converged,
            RunStatus::MaxTime => PointStatus::MaxTime,
            RunStatus::Diverged => PointStatus::Diverged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub gamma: f64,
    pub epsilon: f64,
    pub beta: Option<f64>,
    pub mu: f64,
    pub k: Option<f64>,
    pub status: PointStatus,
    pub note: Option<String>,
    pub t_final: Option<f64>,
    pub steps: Option<usize>,
    /// CSV path relative to the output directory.
    pub csv: Option<String>,
    pub final_report: Option<FunctionalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub epsilon: f64,
    pub warm_start: bool,
    pub points: Vec<RunSummary>,
    /// Largest γ of the longest converged prefix of the γ-grid.
    pub frontier: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub label: String,
    pub gamma: f64,
    pub epsilon: f64,
    pub mu: f64,
    pub residual: f64,
    pub iterations: usize,
    pub b: Option<f64>,
    pub mabuchi: f64,
    pub osc: f64,
    /// Relative density error against the football metric with angle `β`.
    pub football_error: Option<f64>,
    pub potential: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub file: String,
    pub total: usize,
    pub passed: bool,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub mode: GridMode,
    pub n_xi: usize,
    pub n_theta: usize,
}

/// Contents of the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub lambda: f64,
    pub grid: GridSummary,
    pub runs: Vec<RunSummary>,
    pub sweep: Option<SweepReport>,
    pub oracles: Vec<OracleSummary>,
    pub checks: Option<CheckSummary>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub checks: Vec<CheckOutcome>,
    /// Set when a run of a non-sweep scenario failed or diverged.
    pub numeric_failure: Option<String>,
}

impl Outcome {
    pub fn checks_pass(&self) -> bool {
        suite_passes(&self.checks)
    }
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    grid: SphereGrid,
    divisor: DivisorData,
    out: &'a Path,
    checks: bool,
}

impl Ctx<'_> {
    fn plain_problem(&self, gamma: f64, epsilon: f64) -> Result<Problem> {
        let k = match self.cfg.k {
            Some(k) => k,
            None if epsilon > 0.0 => select_k(&self.grid, &self.divisor, gamma, epsilon)?,
            None => 0.0,
        };
        let params = FlowParams::plain(self.divisor.lambda(), gamma, epsilon, k)?;
        Problem::new(self.grid.clone(), self.divisor.clone(), params)
    }

    fn twisted_problem(&self, twist: &mut TwistData, gamma: f64, epsilon: f64) -> Result<Problem> {
        let mut params = beta_twisted_params(&self.grid, &self.divisor, twist, gamma, epsilon)?;
        if let Some(k) = self.cfg.k {
            params.k = k;
        }
        Problem::new(self.grid.clone(), self.divisor.clone(), params)
    }

    fn initial_data(&self) -> Result<InitialData> {
        if let Some(path) = &self.cfg.init_file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            return Ok(InitialData::Field {
                field: parse_snapshot(&text, &self.grid)?,
            });
        }
        Ok(self.cfg.init.clone().unwrap_or(InitialData::Constant { value: 1.0 }))
    }

    /// Run one flow and write its CSV. Flow errors become a `Failed` entry;
    /// output errors propagate.
    fn execute(&self, problem: &Problem, init: &InitialData, label: &str) -> Result<(RunSummary, Option<RunResult>)> {
        let p = &problem.params;
        let beta = match &p.twist {
            crate::geometry::Twist::Beta(b) => Some(b.beta),
            crate::geometry::Twist::Plain => None,
        };
        let mut summary = RunSummary {
            label: label.into(),
            gamma: p.gamma,
            epsilon: p.epsilon,
            beta,
            mu: problem.mu(),
            k: Some(p.k),
            status: PointStatus::Failed,
            note: None,
            t_final: None,
            steps: None,
            csv: None,
            final_report: None,
        };
        let run = match run_flow(problem, init, &self.cfg.stepping) {
            Ok(r) => r,
            Err(e) => {
                summary.note = Some(e.to_string());
                return Ok((summary, None));
            }
        };
        let csv = format!("{label}.csv");
        write_csv(&self.out.join(&csv), &run.reports)?;
        if self.cfg.output.snapshots {
            write_snapshot(&self.out.join(format!("{label}_phi.txt")), problem, &run.final_state)?;
        }
        summary.status = run.status.into();
        summary.note = run.note.clone();
        summary.t_final = Some(run.final_state.t);
        summary.steps = Some(run.final_state.stats.steps);
        summary.csv = Some(csv);
        summary.final_report = run.reports.last().cloned();
        Ok((summary, Some(run)))
    }

    fn empty_summary(&self) -> Summary {
        Summary {
            scenario: self.cfg.scenario,
            lambda: self.divisor.lambda(),
            grid: GridSummary {
                mode: self.grid.mode,
                n_xi: self.grid.n_xi,
                n_theta: self.grid.n_theta,
            },
            runs: vec![],
            sweep: None,
            oracles: vec![],
            checks: None,
        }
    }
}

/// Prefix every check id with the run label.
fn tagged(label: &str, outcomes: Vec<CheckOutcome>) -> Vec<CheckOutcome> {
    outcomes
        .into_iter()
        .map(|mut o| {
            o.id = format!("{label}/{}", o.id);
            o
        })
        .collect()
}

/// Every check that applies to a single completed run, including the
/// comparison with the Newton oracle at the same parameters.
pub fn run_checks(problem: &Problem, run: &RunResult, cfg: &ScenarioConfig) -> Vec<CheckOutcome> {
    let mu = problem.mu();
    let mut out = vec![
        check_scalar_lower_bound(run, mu, SCALAR_SLACK),
        check_monotonicity(run, Monotone::Mabuchi, mu, 1e-8),
        check_jensen(run),
        check_energy_dissipation(run),
    ];
    if mu > 0.0 {
        out.push(check_monotonicity(run, Monotone::A, mu, MONOTONE_SLACK));
    }
    if cfg.stepping.dt_growth == 1.0 {
        out.push(check_energy_identities(run, mu, cfg.stepping.dt));
    }
    let tol = if problem.grid.mode == GridMode::Axisym1D { 1e-4 } else { 1e-3 };
    match newton_stationary(problem, None) {
        Ok(s) => {
            out.push(check_stationary_agreement(problem, run, &s, tol));
            match mabuchi_with_forcing(&problem.grid, &s.phi, mu, &problem.forcing) {
                Ok(m) => {
                    out.push(check_minimizer(run, m, 1e-6));
                    out.push(check_uniform_bounds(run, Some(m)));
                }
                Err(e) => {
                    out.push(CheckOutcome::inconclusive("mabuchi-minimizer", "oracle energy", e.to_string()));
                    out.push(check_uniform_bounds(run, None));
                }
            }
        }
        Err(e) => {
            out.push(CheckOutcome::inconclusive(
                "stationary-agreement",
                "flow converges to the twisted Kahler-Einstein potential",
                format!("newton oracle failed: {e}"),
            ));
            out.push(check_uniform_bounds(run, None));
        }
    }
    if mu > 0.0 && run.status == RunStatus::Converged {
        match shift_constant(mu, run) {
            Ok(s) => out.push(check_shifted_alpha(run, &s, 1e-8)),
            Err(e) => out.push(CheckOutcome::inconclusive(
                "shifted-alpha",
                "alpha of the shifted potential is nonnegative",
                e.to_string(),
            )),
        }
    }
    out
}

fn failure_note(s: &RunSummary) -> Option<String> {
    match s.status {
        PointStatus::Failed | PointStatus::Diverged => Some(format!(
            "{}: {}",
            s.label,
            s.note.as_deref().unwrap_or("diverged")
        )),
        _ => None,
    }
}

fn single_run(ctx: &Ctx<'_>, with_algebra: bool) -> Result<Outcome> {
    let gamma = ctx.cfg.single_gamma()?;
    let eps = ctx.cfg.single_epsilon()?;
    let problem = ctx.plain_problem(gamma, eps)?;
    let init = ctx.initial_data()?;
    let (run_part, algebra) = rayon::join(
        || -> Result<_> {
            let (summary, run) = ctx.execute(&problem, &init, "run")?;
            let checks = match (&run, ctx.checks) {
                (Some(r), true) => tagged("run", run_checks(&problem, r, ctx.cfg)),
                _ => vec![],
            };
            Ok((summary, checks))
        },
        || with_algebra.then(|| check_functional_algebra(&ctx.grid, ALGEBRA_SAMPLES, ctx.cfg.seed)),
    );
    let (summary, mut checks) = run_part?;
    if let Some(a) = algebra {
        checks.extend(a?);
    }
    if ctx.checks && summary.status == PointStatus::Failed {
        checks.push(CheckOutcome::inconclusive("run", "the run completes", summary.note.clone().unwrap_or_default()));
    }
    let numeric_failure = failure_note(&summary);
    let mut s = ctx.empty_summary();
    s.runs.push(summary);
    Ok(Outcome {
        summary: s,
        checks,
        numeric_failure,
    })
}

fn eps_sequence(ctx: &Ctx<'_>) -> Result<Outcome> {
    let gamma = ctx.cfg.single_gamma()?;
    let beta = ctx.cfg.beta.unwrap_or(gamma);
    let mut init = ctx.initial_data()?;
    let mut done: Vec<(f64, Problem, Option<RunResult>)> = vec![];
    let mut s = ctx.empty_summary();
    let mut checks = vec![];
    let mut numeric_failure = None;
    for (i, &eps) in ctx.cfg.epsilon.iter().enumerate() {
        let label = format!("eps_{i:02}");
        eprintln!("eps-sequence: eps = {eps}");
        let problem = ctx.plain_problem(gamma, eps)?;
        let (summary, run) = ctx.execute(&problem, &init, &label)?;
        if let Some(r) = &run {
            if ctx.checks {
                checks.extend(tagged(&label, run_checks(&problem, r, ctx.cfg)));
            }
            if ctx.cfg.warm_start && r.status == RunStatus::Converged {
                init = InitialData::Field {
                    field: r.final_state.potential(),
                };
            }
        }
        numeric_failure = numeric_failure.or(failure_note(&summary));
        s.runs.push(summary);
        done.push((eps, problem, run));
    }
    let football = ctx.divisor.lambda() == 1.0 && ctx.divisor.is_axisymmetric() && gamma == beta;
    if football {
        let entries: Option<Vec<FootballEntry<'_>>> = done
            .iter()
            .map(|(e, p, r)| r.as_ref().map(|run| FootballEntry { epsilon: *e, problem: p, run }))
            .collect();
        checks.push(match entries {
            Some(en) => check_football(&en, beta, FOOTBALL_TOL),
            None => CheckOutcome::inconclusive(
                "football",
                "conical limit on two antipodal points is the football metric",
                "a run of the sequence failed",
            ),
        });
    }
    Ok(Outcome {
        summary: s,
        checks,
        numeric_failure,
    })
}

/// Run every γ of the grid at fixed ε. With `warm_start` each point starts
/// from the previous converged potential (sequentially); otherwise the
/// points run cold and in parallel. A failure never aborts other points.
pub fn sweep_angles(cfg: &ScenarioConfig, out: &Path) -> Result<SweepReport> {
    let ctx = Ctx {
        cfg,
        grid: cfg.grid.build()?,
        divisor: cfg.divisor_data()?,
        out,
        checks: false,
    };
    sweep_with(&ctx)
}

fn sweep_point(ctx: &Ctx<'_>, i: usize, gamma: f64, eps: f64, init: &InitialData) -> Result<(RunSummary, Option<RunResult>)> {
    let label = format!("gamma_{i:02}");
    eprintln!("angle-sweep: gamma = {gamma}");
    match ctx.plain_problem(gamma, eps) {
        Ok(p) => ctx.execute(&p, init, &label),
        Err(e) => Ok((
            RunSummary {
                label,
                gamma,
                epsilon: eps,
                beta: None,
                mu: crate::geometry::mu_of(ctx.divisor.lambda(), gamma),
                k: None,
                status: PointStatus::Failed,
                note: Some(e.to_string()),
                t_final: None,
                steps: None,
                csv: None,
                final_report: None,
            },
            None,
        )),
    }
}

fn sweep_with(ctx: &Ctx<'_>) -> Result<SweepReport> {
    let eps = ctx.cfg.single_epsilon()?;
    let base = ctx.initial_data()?;
    let gammas = &ctx.cfg.gamma;
    let points: Vec<RunSummary> = if ctx.cfg.warm_start {
        let mut init = base;
        let mut v = vec![];
        for (i, &g) in gammas.iter().enumerate() {
            let (summary, run) = sweep_point(ctx, i, g, eps, &init)?;
            if let Some(r) = run.filter(|r| r.status == RunStatus::Converged) {
                init = InitialData::Field {
                    field: r.final_state.potential(),
                };
            }
            v.push(summary);
        }
        v
    } else {
        gammas
            .par_iter()
            .enumerate()
            .map(|(i, &g)| sweep_point(ctx, i, g, eps, &base).map(|(s, _)| s))
            .collect::<Result<_>>()?
    };
    let frontier = points
        .iter()
        .take_while(|p| p.status == PointStatus::Converged)
        .last()
        .map(|p| p.gamma);
    Ok(SweepReport {
        epsilon: eps,
        warm_start: ctx.cfg.warm_start,
        points,
        frontier,
    })
}

fn beta_twisted(ctx: &Ctx<'_>) -> Result<Outcome> {
    let gamma = ctx.cfg.single_gamma()?;
    let eps = ctx.cfg.single_epsilon()?;
    let beta = ctx
        .cfg
        .beta
        .ok_or_else(|| Error::Config("beta: required for beta-twisted".into()))?;
    let mut twist = TwistData::solve(&ctx.grid, &ctx.divisor, beta)?;
    let problem = ctx.twisted_problem(&mut twist, gamma, eps)?;
    let init = ctx.initial_data()?;
    let (summary, run) = ctx.execute(&problem, &init, "twisted")?;
    let mut checks = vec![];
    let mut s = ctx.empty_summary();
    if let (Some(r), true) = (&run, ctx.checks) {
        checks.extend(tagged("twisted", run_checks(&problem, r, ctx.cfg)));
        if gamma == beta {
            let plain = ctx.plain_problem(gamma, eps)?;
            let (ps, pr) = ctx.execute(&plain, &init, "plain")?;
            let o = match &pr {
                Some(pr) => check_run_agreement(&r.final_state, &pr.final_state, 1e-8).unwrap_or_else(|e| {
                    CheckOutcome::inconclusive("run-agreement", "twisted and plain flows coincide", e.to_string())
                }),
                None => CheckOutcome::inconclusive("run-agreement", "twisted and plain flows coincide", "plain run failed"),
            };
            checks.push(o);
            s.runs.push(ps);
        }
    }
    let numeric_failure = failure_note(&summary);
    s.runs.insert(0, summary);
    Ok(Outcome {
        summary: s,
        checks,
        numeric_failure,
    })
}

fn oracles(ctx: &Ctx<'_>) -> Result<Outcome> {
    let mut s = ctx.empty_summary();
    let mut i = 0;
    for &gamma in &ctx.cfg.gammas() {
        for &eps in &ctx.cfg.epsilon {
            let label = format!("oracle_{i:02}");
            i += 1;
            eprintln!("oracle: gamma = {gamma}, eps = {eps}");
            let problem = ctx.plain_problem(gamma, eps)?;
            let sol = newton_stationary(&problem, None)?;
            let file = format!("{label}.txt");
            let path = ctx.out.join(&file);
            std::fs::write(&path, potential_text(&problem, f64::INFINITY, &sol.phi)?).map_err(|e| Error::io(&path, e))?;
            let football = match ctx.cfg.beta {
                Some(b) if b == gamma && ctx.divisor.lambda() == 1.0 && ctx.divisor.is_axisymmetric() => {
                    Some(football_error(&problem, &problem.density_ratio(&sol.phi.values), b, 0.05).0)
                }
                _ => None,
            };
            s.oracles.push(OracleSummary {
                label,
                gamma,
                epsilon: eps,
                mu: problem.mu(),
                residual: sol.residual,
                iterations: sol.iterations,
                b: sol.b,
                mabuchi: mabuchi_with_forcing(&problem.grid, &sol.phi, problem.mu(), &problem.forcing)?,
                osc: sol.phi.osc(),
                football_error: football,
                potential: file,
            });
        }
    }
    Ok(Outcome {
        summary: s,
        checks: vec![],
        numeric_failure: None,
    })
}

/// Execute a validated config, writing all artifacts under `out`.
///
/// `force_checks` turns the check report on regardless of the config.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path, force_checks: bool) -> Result<Outcome> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let ctx = Ctx {
        cfg,
        grid: cfg.grid.build()?,
        divisor: cfg.divisor_data()?,
        out,
        checks: force_checks || cfg.checks || cfg.scenario == Scenario::CheckSuite,
    };
    let mut outcome = match cfg.scenario {
        Scenario::Run => single_run(&ctx, false)?,
        Scenario::CheckSuite => single_run(&ctx, true)?,
        Scenario::EpsSequence => eps_sequence(&ctx)?,
        Scenario::BetaTwisted => beta_twisted(&ctx)?,
        Scenario::Oracle => oracles(&ctx)?,
        Scenario::AngleSweep => {
            let mut s = ctx.empty_summary();
            s.sweep = Some(sweep_with(&ctx)?);
            Outcome {
                summary: s,
                checks: vec![],
                numeric_failure: None,
            }
        }
    };
    if !outcome.checks.is_empty() || ctx.checks {
        let file = cfg.output.checks.clone();
        write_check_report(&out.join(&file), &outcome.checks)?;
        outcome.summary.checks = Some(CheckSummary {
            file,
            total: outcome.checks.len(),
            passed: outcome.checks_pass(),
            failed: outcome
                .checks
                .iter()
                .filter(|o| !o.pass && !o.informational)
                .map(|o| o.id.clone())
                .collect(),
        });
    }
    write_summary(&out.join(&cfg.output.summary), &outcome.summary)?;
    Ok(outcome)
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut s = serde_json::to_string_pretty(summary)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Output directory: `--out` first, then the config, then `out`.
pub fn output_dir(cli: Option<&Path>, cfg: &ScenarioConfig) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
