//! Acceptance gate: one line per criterion, nonzero exit on any failure.

use std::time::Instant;

use conical_flow::discretization::SphereGrid;
use conical_flow::flow::{
    beta_twisted_params, newton_stationary, run_flow, shift_constant, InitialData, Problem, RunResult, RunStatus,
    StepConfig, TwistData,
};
use conical_flow::functionals::mabuchi_with_forcing;
use conical_flow::geometry::{select_k, DivisorData, DivisorPoint, FlowParams};
use conical_flow::validation::{
    check_energy_dissipation, check_energy_identities, check_football, check_functional_algebra, check_jensen,
    check_minimizer, check_monotonicity, check_pair_ordering, check_run_agreement, check_scalar_lower_bound,
    check_shifted_alpha, check_stationary_agreement, check_uniform_bounds, suite_passes, write_check_report,
    CheckOutcome, FootballEntry, Location, Monotone, PairKind, MONOTONE_SLACK, PAIR_SLACK, SCALAR_SLACK,
};
use conical_flow::Result;

const N: usize = 256;

fn one() -> InitialData {
    InitialData::Constant { value: 1.0 }
}

fn plain(grid: &SphereGrid, divisor: &DivisorData, gamma: f64, eps: f64) -> Result<Problem> {
    let k = select_k(grid, divisor, gamma, eps)?;
    Problem::new(grid.clone(), divisor.clone(), FlowParams::plain(divisor.lambda(), gamma, eps, k)?)
}

fn poles_problem(gamma: f64, eps: f64) -> Result<Problem> {
    plain(&SphereGrid::axisym(N)?, &DivisorData::poles(), gamma, eps)
}

fn steps(dt: f64, t_max: f64, stride: usize) -> StepConfig {
    StepConfig {
        dt,
        t_max,
        report_stride: stride,
        ..StepConfig::default()
    }
}

/// Growing steps for runs where only the limit matters.
fn fast_steps(stride: usize) -> StepConfig {
    StepConfig {
        dt_growth: 1.02,
        dt_max: Some(0.05),
        ..steps(1e-3, 200.0, stride)
    }
}

fn converged(id: &str, anchor: &str, run: &RunResult, t_max: f64) -> CheckOutcome {
    let t = run.final_state.t;
    CheckOutcome::measured(
        id,
        anchor,
        if run.status == RunStatus::Converged { t_max - t } else { -1.0 },
        0.0,
        Location::at(t),
        format!("status {:?} at t = {t:.3}", run.status),
    )
}

/// Newton oracle, its Mabuchi energy, and the agreement and minimizer checks.
fn oracle_checks(p: &Problem, run: &RunResult, tol: f64) -> Result<(Vec<CheckOutcome>, f64)> {
    let s = newton_stationary(p, None)?;
    let m = mabuchi_with_forcing(&p.grid, &s.phi, p.mu(), &p.forcing)?;
    Ok((vec![check_stationary_agreement(p, run, &s, tol)], m))
}

struct Shared {
    main: Problem,
    main_run: RunResult,
    main_m: f64,
    main_agreement: Vec<CheckOutcome>,
    flat_run: RunResult,
    flat_m: f64,
    flat_agreement: Vec<CheckOutcome>,
}

fn shared() -> Result<Shared> {
    // λ = 1, γ = 0.5, ε = 0.1 with every step reported
    let main = poles_problem(0.5, 0.1)?;
    let main_run = run_flow(&main, &one(), &steps(1e-3, 200.0, 1))?;
    let (main_agreement, main_m) = oracle_checks(&main, &main_run, 1e-4)?;
    // μ = 0: four points on a full grid
    let grid = SphereGrid::full(128, 256)?;
    let pts = vec![
        DivisorPoint::finite(0.0, 0.0),
        DivisorPoint::Infinity,
        DivisorPoint::finite(1.0, 0.0),
        DivisorPoint::finite(-1.0, 0.0),
    ];
    let flat = plain(&grid, &DivisorData::new(pts, None)?, 0.5, 0.05)?;
    let flat_run = run_flow(&flat, &one(), &fast_steps(100))?;
    let (flat_agreement, flat_m) = oracle_checks(&flat, &flat_run, 1e-3)?;
    Ok(Shared {
        main,
        main_run,
        main_m,
        main_agreement,
        flat_run,
        flat_m,
        flat_agreement,
    })
}

fn c1() -> Result<Vec<CheckOutcome>> {
    let mut out = vec![];
    for gamma in [0.3, 0.6, 0.9] {
        for eps in [0.5, 0.1, 0.02] {
            let p = poles_problem(gamma, eps)?;
            let run = run_flow(&p, &one(), &steps(1e-3, 3.0, 10))?;
            let mut o = check_scalar_lower_bound(&run, p.mu(), SCALAR_SLACK);
            o.id = format!("{} gamma={gamma} eps={eps}", o.id);
            out.push(o);
        }
    }
    Ok(out)
}

fn c2(s: &Shared) -> Vec<CheckOutcome> {
    vec![
        check_monotonicity(&s.main_run, Monotone::Mabuchi, s.main.mu(), 1e-8),
        check_energy_dissipation(&s.main_run),
    ]
}

fn c3(s: &Shared) -> Vec<CheckOutcome> {
    vec![
        check_monotonicity(&s.main_run, Monotone::A, s.main.mu(), MONOTONE_SLACK),
        check_jensen(&s.main_run),
    ]
}

fn c4(s: &Shared) -> Vec<CheckOutcome> {
    s.main_agreement.iter().chain(&s.flat_agreement).cloned().collect()
}

fn c5() -> Result<Vec<CheckOutcome>> {
    let grid = SphereGrid::axisym(512)?;
    let beta = 0.5;
    let eps_list = [0.1, 0.05, 0.025, 0.0125];
    let mut problems = vec![];
    let mut runs = vec![];
    let mut init = one();
    for &eps in &eps_list {
        let p = plain(&grid, &DivisorData::poles(), beta, eps)?;
        let run = run_flow(&p, &init, &fast_steps(100))?;
        init = InitialData::Field {
            field: run.final_state.potential(),
        };
        problems.push(p);
        runs.push(run);
    }
    let entries: Vec<FootballEntry<'_>> = eps_list
        .iter()
        .zip(problems.iter().zip(&runs))
        .map(|(&epsilon, (problem, run))| FootballEntry { epsilon, problem, run })
        .collect();
    Ok(vec![check_football(&entries, beta, 0.02)])
}

fn c6() -> Result<Vec<CheckOutcome>> {
    let init = one();
    let eps = check_pair_ordering(
        PairKind::Eps,
        &poles_problem(0.5, 0.1)?,
        &poles_problem(0.5, 0.2)?,
        &init,
        1e-3,
        3.0,
        3.0,
        PAIR_SLACK,
    )?;
    let gamma = check_pair_ordering(
        PairKind::Gamma,
        &poles_problem(0.4, 0.1)?,
        &poles_problem(0.6, 0.1)?,
        &init,
        1e-3,
        0.1,
        1.0,
        PAIR_SLACK,
    )?;
    Ok(vec![eps, gamma])
}

fn c7(s: &Shared) -> Vec<CheckOutcome> {
    let run = &s.flat_run;
    let a_end = run.reports.last().map_or(f64::NAN, |r| r.a);
    vec![
        converged("mu0-converged", "the mu = 0 flow converges", run, 200.0),
        CheckOutcome::measured(
            "mu0-a-limit",
            "A-functional tends to zero",
            1e-3 - a_end.abs(),
            0.0,
            Location::at(run.final_state.t),
            format!("|A(T)| = {:.3e}", a_end.abs()),
        ),
        check_uniform_bounds(run, Some(s.flat_m)),
    ]
}

fn c8() -> Result<Vec<CheckOutcome>> {
    let eps = 0.05;
    let base = poles_problem(0.5, eps)?;
    let base_run = run_flow(&base, &one(), &fast_steps(100))?;
    let mut out = vec![converged("base-converged", "the beta = 0.5 flow converges", &base_run, 200.0)];
    let warm = InitialData::Field {
        field: base_run.final_state.potential(),
    };
    for beta in [0.45, 0.55] {
        let p = poles_problem(beta, eps)?;
        let run = run_flow(&p, &warm, &fast_steps(100))?;
        let mut c = converged("perturbed-converged", "nearby angles converge within t <= 200", &run, 200.0);
        c.id = format!("{} beta={beta}", c.id);
        out.push(c);
        let (mut a, _) = oracle_checks(&p, &run, 1e-4)?;
        a[0].id = format!("{} beta={beta}", a[0].id);
        out.extend(a);
    }
    Ok(out)
}

fn c9() -> Result<Vec<CheckOutcome>> {
    let grid = SphereGrid::axisym(N)?;
    let div = DivisorData::poles();
    let (beta, eps) = (0.5, 0.1);
    let mut twist = TwistData::solve(&grid, &div, beta)?;
    let cfg = steps(1e-3, 200.0, 10);
    let same = Problem::new(grid.clone(), div.clone(), beta_twisted_params(&grid, &div, &mut twist, beta, eps)?)?;
    let plain_p = plain(&grid, &div, beta, eps)?;
    let a = run_flow(&same, &one(), &cfg)?;
    let b = run_flow(&plain_p, &one(), &cfg)?;
    let mut out = vec![check_run_agreement(&a.final_state, &b.final_state, 1e-8)?];
    let low = Problem::new(grid.clone(), div.clone(), beta_twisted_params(&grid, &div, &mut twist, 0.3, eps)?)?;
    let run = run_flow(&low, &one(), &cfg)?;
    out.push(check_monotonicity(&run, Monotone::A, low.mu(), MONOTONE_SLACK));
    let (agree, _) = oracle_checks(&low, &run, 1e-4)?;
    out.extend(agree);
    Ok(out)
}

fn c10() -> Result<Vec<CheckOutcome>> {
    let p = poles_problem(0.5, 0.1)?;
    let dt = 1e-4;
    let run = run_flow(&p, &one(), &steps(dt, 200.0, 10))?;
    let shift = shift_constant(p.mu(), &run)?;
    Ok(vec![check_energy_identities(&run, p.mu(), dt), check_shifted_alpha(&run, &shift, 1e-8)])
}

fn c11() -> Result<Vec<CheckOutcome>> {
    let mut out = check_functional_algebra(&SphereGrid::axisym(N)?, 20, 2024)?;
    for mut o in check_functional_algebra(&SphereGrid::full(64, 128)?, 20, 2025)? {
        o.id = format!("{} full2d", o.id);
        out.push(o);
    }
    Ok(out)
}

fn c12(s: &Shared) -> Vec<CheckOutcome> {
    let mut a = check_minimizer(&s.main_run, s.main_m, 1e-6);
    a.id = format!("{} mu>0", a.id);
    let mut b = check_minimizer(&s.flat_run, s.flat_m, 1e-6);
    b.id = format!("{} mu=0", b.id);
    vec![a, b]
}

fn report(n: usize, title: &str, started: Instant, result: Result<Vec<CheckOutcome>>, all: &mut Vec<CheckOutcome>) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match result {
        Ok(outcomes) => {
            let pass = suite_passes(&outcomes);
            println!("criterion {n:>2} [{}] {title} ({secs:.1} s)", if pass { "PASS" } else { "FAIL" });
            for o in &outcomes {
                println!("      {}", o.summary_line());
            }
            all.extend(outcomes);
            pass
        }
        Err(e) => {
            println!("criterion {n:>2} [FAIL] {title} ({secs:.1} s): error: {e}");
            false
        }
    }
}

fn main() {
    let mut all = vec![];
    let mut ok = true;
    let t0 = Instant::now();
    let shared = shared();
    let setup = t0.elapsed().as_secs_f64();
    println!("shared runs ready ({setup:.1} s)");
    type Job<'a> = Box<dyn Fn() -> Result<Vec<CheckOutcome>> + 'a>;
    let with_shared = |f: fn(&Shared) -> Vec<CheckOutcome>| -> Job<'_> {
        let s = &shared;
        Box::new(move || match s {
            Ok(s) => Ok(f(s)),
            Err(e) => Err(conical_flow::Error::Undefined(format!("shared runs failed: {e}"))),
        })
    };
    let jobs: Vec<(usize, &str, Job<'_>)> = vec![
        (1, "twisted scalar curvature floor", Box::new(c1)),
        (2, "Mabuchi energy dissipation", with_shared(c2)),
        (3, "A-functional monotonicity and Jensen bound", with_shared(c3)),
        (4, "flow limit equals the Newton oracle", with_shared(c4)),
        (5, "football limit of the eps-sequence", Box::new(c5)),
        (6, "eps and gamma orderings", Box::new(c6)),
        (7, "mu = 0 convergence with uniform bounds", with_shared(c7)),
        (8, "stability under nearby cone angles", Box::new(c8)),
        (9, "beta-twisted consistency", Box::new(c9)),
        (10, "alpha identity and shifted alpha", Box::new(c10)),
        (11, "Aubin chain and J path independence", Box::new(c11)),
        (12, "Kahler-Einstein potential minimizes Mabuchi", with_shared(c12)),
    ];
    for (n, title, job) in jobs {
        let started = Instant::now();
        ok &= report(n, title, started, job(), &mut all);
    }
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance/checks.json");
    if let Err(e) = write_check_report(&path, &all) {
        println!("could not write {}: {e}", path.display());
    }
    println!("total {:.1} s; report at {}", t0.elapsed().as_secs_f64(), path.display());
    if !ok {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass");
}
