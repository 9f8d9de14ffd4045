//! Executable checks of the qualitative statements the flows are expected to
//! satisfy. Each check reports its worst margin and where it occurred.

mod algebra;
mod football;
mod ordering;
mod runs;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use algebra::{check_functional_algebra, random_admissible_potential, AlgebraSample};
pub use football::{check_football, football_density, football_error, FootballEntry};
pub use ordering::{check_pair_ordering, PairKind};
pub use runs::{
    check_energy_dissipation, check_energy_identities, check_jensen, check_minimizer, check_monotonicity,
    check_run_agreement, check_scalar_lower_bound, check_shifted_alpha, check_stationary_agreement,
    check_uniform_bounds, Monotone,
};

/// Per-step slack of the A and Mabuchi monotonicity checks.
pub const MONOTONE_SLACK: f64 = 1e-7;
/// Pointwise slack of the ε and γ ordering checks.
pub const PAIR_SLACK: f64 = 1e-8;
/// Absolute slack of the scalar curvature floor.
pub const SCALAR_SLACK: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub t: Option<f64>,
    pub node: Option<usize>,
}

impl Location {
    pub fn at(t: f64) -> Self {
        Location { t: Some(t), node: None }
    }

    pub fn node(t: f64, node: usize) -> Self {
        Location {
            t: Some(t),
            node: Some(node),
        }
    }
}

/// Result of one check.
///
/// When `margin` is present, `pass ⇔ margin ≥ −slack`. A missing margin
/// means there was nothing to measure: vacuous passes and inconclusive
/// outcomes both carry an explanation in `notes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: String,
    pub anchor: String,
    pub pass: bool,
    pub margin: Option<f64>,
    pub slack: f64,
    pub location: Location,
    pub notes: String,
    #[serde(default)]
    pub informational: bool,
}

impl CheckOutcome {
    pub fn measured(
        id: &str,
        anchor: &str,
        margin: f64,
        slack: f64,
        location: Location,
        notes: impl Into<String>,
    ) -> Self {
        CheckOutcome {
            id: id.into(),
            anchor: anchor.into(),
            pass: margin >= -slack,
            margin: Some(margin),
            slack,
            location,
            notes: notes.into(),
            informational: false,
        }
    }

    pub fn vacuous(id: &str, anchor: &str, notes: impl Into<String>) -> Self {
        CheckOutcome {
            id: id.into(),
            anchor: anchor.into(),
            pass: true,
            margin: None,
            slack: 0.0,
            location: Location::default(),
            notes: notes.into(),
            informational: false,
        }
    }

    pub fn inconclusive(id: &str, anchor: &str, notes: impl Into<String>) -> Self {
        CheckOutcome {
            pass: false,
            ..Self::vacuous(id, anchor, notes)
        }
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    pub fn is_inconclusive(&self) -> bool {
        self.margin.is_none() && !self.pass
    }

    /// `[PASS]`/`[FAIL]` line for terminals.
    pub fn summary_line(&self) -> String {
        let tag = match (self.pass, self.is_inconclusive()) {
            (_, true) => "INCONCLUSIVE",
            (true, _) => "PASS",
            (false, _) => "FAIL",
        };
        let margin = self.margin.map_or("-".to_string(), |m| format!("{m:.3e}"));
        format!("[{tag}] {} margin {margin}: {}", self.id, self.notes)
    }
}

/// True when every non-informational outcome passes.
pub fn suite_passes(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.informational || o.pass)
}

pub fn check_report_json(outcomes: &[CheckOutcome]) -> Result<String> {
    Ok(serde_json::to_string_pretty(outcomes)?)
}

pub fn write_check_report(path: &Path, outcomes: &[CheckOutcome]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut s = check_report_json(outcomes)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
