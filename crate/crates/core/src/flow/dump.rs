use std::fmt::Write as _;
use std::path::Path;

use super::problem::Problem;
use super::state::FlowState;
use crate::discretization::{Field, GridMode, SphereGrid};
use crate::error::{Error, Result};

/// Text snapshot of the full potential: `#`-prefixed header lines with the
/// grid shape, time and parameters, then one value per line in row-major
/// `ξ`-then-`θ` order.
pub fn snapshot_text(problem: &Problem, state: &FlowState) -> Result<String> {
    potential_text(problem, state.t, &state.potential())
}

/// The snapshot format for an arbitrary potential at time `t`.
pub fn potential_text(problem: &Problem, t: f64, phi: &Field) -> Result<String> {
    problem.grid.check(phi)?;
    let mode = match problem.grid.mode {
        GridMode::Axisym1D => "axisym1d",
        GridMode::Full2D => "full2d",
    };
    let mut s = String::new();
    let params = serde_json::json!({
        "lambda": problem.params.lambda,
        "gamma": problem.params.gamma,
        "mu_gamma": problem.params.mu_gamma,
        "epsilon": problem.params.epsilon,
        "k": problem.params.k,
    });
    let _ = writeln!(s, "# mode {mode}");
    let _ = writeln!(s, "# n_xi {}", problem.grid.n_xi);
    let _ = writeln!(s, "# n_theta {}", problem.grid.n_theta);
    let _ = writeln!(s, "# t {t}");
    let _ = writeln!(s, "# params {}", serde_json::to_string(&params)?);
    for v in &phi.values {
        let _ = writeln!(s, "{v}");
    }
    Ok(s)
}

pub fn write_snapshot(path: &Path, problem: &Problem, state: &FlowState) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, snapshot_text(problem, state)?).map_err(|e| Error::io(path, e))
}

/// Read the potential back from snapshot text, checking the grid shape.
pub fn parse_snapshot(text: &str, grid: &SphereGrid) -> Result<Field> {
    let mut values = Vec::with_capacity(grid.nodes());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(header) = line.strip_prefix('#') {
            let mut it = header.split_whitespace();
            let (key, val) = (it.next(), it.next());
            let expect = match key {
                Some("n_xi") => Some(grid.n_xi),
                Some("n_theta") => Some(grid.n_theta),
                _ => None,
            };
            if let (Some(e), Some(v)) = (expect, val) {
                if v.parse::<usize>().ok() != Some(e) {
                    return Err(Error::Config(format!(
                        "snapshot header {} = {v} does not match the grid ({e})",
                        key.unwrap_or_default()
                    )));
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Config(format!("snapshot line {}: not a number: {line}", i + 1)))?;
        values.push(v);
    }
    if values.len() != grid.nodes() {
        return Err(Error::Shape {
            expected: grid.nodes(),
            got: values.len(),
        });
    }
    Field::new(grid.n_xi, grid.n_theta, values)
}
