use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::discretization::{GridMode, SphereGrid};
use crate::error::{Error, Result};
use crate::flow::{InitialData, StepConfig};
use crate::geometry::{DivisorData, DivisorPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Run,
    EpsSequence,
    AngleSweep,
    BetaTwisted,
    Oracle,
    CheckSuite,
}

impl Scenario {
    pub fn is_time_stepped(self) -> bool {
        self != Scenario::Oracle
    }
}

/// A divisor point: `"0"`, `"inf"`, a real number as a string, or `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Token(String),
    Pair([f64; 2]),
}

impl PointSpec {
    fn resolve(&self, i: usize) -> Result<DivisorPoint> {
        match self {
            PointSpec::Pair([re, im]) => Ok(DivisorPoint::finite(*re, *im)),
            PointSpec::Token(t) => match t.trim() {
                "inf" | "infinity" | "∞" => Ok(DivisorPoint::Infinity),
                s => s.parse::<f64>().map(|re| DivisorPoint::finite(re, 0.0)).map_err(|_| {
                    Error::Config(format!(
                        "divisor[{i}]: unknown token {s:?}; use \"inf\", a real number or [re, im]"
                    ))
                }),
            },
        }
    }
}

fn default_divisor() -> Vec<PointSpec> {
    vec![PointSpec::Token("0".into()), PointSpec::Token("inf".into())]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_mode")]
    pub mode: GridMode,
    /// Defaults to 256 (axisymmetric) or 128 (full).
    #[serde(default)]
    pub n_xi: Option<usize>,
    /// Defaults to 256 on full grids; ignored on axisymmetric ones.
    #[serde(default)]
    pub n_theta: Option<usize>,
}

fn default_mode() -> GridMode {
    GridMode::Axisym1D
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            mode: default_mode(),
            n_xi: None,
            n_theta: None,
        }
    }
}

impl GridConfig {
    pub fn sizes(&self) -> (usize, usize) {
        match self.mode {
            GridMode::Axisym1D => (self.n_xi.unwrap_or(256), 1),
            GridMode::Full2D => (self.n_xi.unwrap_or(128), self.n_theta.unwrap_or(256)),
        }
    }

    pub fn build(&self) -> Result<SphereGrid> {
        let (n, m) = self.sizes();
        SphereGrid::build(self.mode, n, m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Overridden by `--out`.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default = "default_checks")]
    pub checks: String,
    /// Also write the final potential of every run.
    #[serde(default)]
    pub snapshots: bool,
}

fn default_summary() -> String {
    "summary.json".into()
}

fn default_checks() -> String {
    "checks.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            summary: default_summary(),
            checks: default_checks(),
            snapshots: false,
        }
    }
}

fn default_stepping() -> StepConfig {
    StepConfig::default()
}

fn default_true() -> bool {
    true
}

/// One experiment, read from a strict JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default = "default_divisor")]
    pub divisor: Vec<PointSpec>,
    /// Scale of `|s|²_h`; automatic when absent.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default, deserialize_with = "gamma_values")]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default, deserialize_with = "epsilon_values")]
    pub epsilon: Vec<f64>,
    /// Reference-metric constant; selected automatically when absent.
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_stepping")]
    pub stepping: StepConfig,
    #[serde(default)]
    pub init: Option<InitialData>,
    /// Snapshot file holding the initial potential, relative to the config.
    #[serde(default)]
    pub init_file: Option<PathBuf>,
    /// Continue each sweep or sequence point from the previous limit.
    #[serde(default = "default_true")]
    pub warm_start: bool,
    /// Emit the check report for time-stepped scenarios.
    #[serde(default)]
    pub checks: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn number_list<'de, D: Deserializer<'de>>(d: D, key: &str) -> std::result::Result<Vec<f64>, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    let bad = || D::Error::custom(format!("{key}: expected a number or a list of numbers"));
    match v {
        serde_json::Value::Number(n) => Ok(vec![n.as_f64().ok_or_else(bad)?]),
        serde_json::Value::Array(a) => a.iter().map(|x| x.as_f64().ok_or_else(bad)).collect(),
        _ => Err(bad()),
    }
}

fn gamma_values<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    number_list(d, "gamma")
}

fn epsilon_values<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    number_list(d, "epsilon")
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn in_unit_interval(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(config_err(format!("{key} = {v} out of range: must lie in (0, 1]")))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))?;
        cfg.validate(None)?;
        Ok(cfg)
    }

    pub fn divisor_data(&self) -> Result<DivisorData> {
        let pts = self
            .divisor
            .iter()
            .enumerate()
            .map(|(i, p)| p.resolve(i))
            .collect::<Result<Vec<_>>>()?;
        DivisorData::new(pts, self.c)
    }

    pub fn lambda(&self) -> f64 {
        self.divisor.len() as f64 / 2.0
    }

    /// The single γ of non-sweep scenarios; `β` stands in when γ is absent.
    pub fn single_gamma(&self) -> Result<f64> {
        match self.gamma.as_slice() {
            [g] => Ok(*g),
            [] => self
                .beta
                .ok_or_else(|| config_err("gamma: required for this scenario")),
            _ => Err(config_err(format!(
                "gamma: scenario {:?} takes a single value, got {}",
                self.scenario,
                self.gamma.len()
            ))),
        }
    }

    /// The γ list, or `[β]` when only β is given.
    pub fn gammas(&self) -> Vec<f64> {
        if self.gamma.is_empty() {
            self.beta.into_iter().collect()
        } else {
            self.gamma.clone()
        }
    }

    pub fn single_epsilon(&self) -> Result<f64> {
        match self.epsilon.as_slice() {
            [e] => Ok(*e),
            [] => Err(config_err("epsilon: required for this scenario")),
            _ => Err(config_err(format!(
                "epsilon: scenario {:?} takes a single value; use \"eps-sequence\" for lists",
                self.scenario
            ))),
        }
    }

    /// Check ranges and cross-field rules. `base` resolves `init_file`.
    pub fn validate(&self, base: Option<&Path>) -> Result<()> {
        let d = self.divisor_data()?;
        self.grid.build()?;
        if self.grid.mode == GridMode::Axisym1D && !d.is_axisymmetric() {
            return Err(config_err(
                "divisor: points other than 0 and inf need grid.mode = \"full2d\"",
            ));
        }
        for &g in &self.gamma {
            in_unit_interval("gamma", g)?;
        }
        if let Some(b) = self.beta {
            in_unit_interval("beta", b)?;
        }
        for &e in &self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(config_err(format!("epsilon = {e} out of range: must be nonnegative")));
            }
            if e == 0.0 && self.scenario.is_time_stepped() {
                let hint = if self.scenario == Scenario::Run {
                    "; to approach the conical limit use scenario \"eps-sequence\" with decreasing epsilon > 0"
                } else {
                    ""
                };
                return Err(config_err(format!(
                    "epsilon = 0 is not allowed for time-stepped scenarios{hint}"
                )));
            }
        }
        if let Some(k) = self.k {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(config_err(format!("k = {k} out of range: must be nonnegative")));
            }
        }
        if self.init.is_some() && self.init_file.is_some() {
            return Err(config_err("init and init_file are mutually exclusive"));
        }
        if self.scenario.is_time_stepped() {
            self.stepping.validate().map_err(|e| config_err(format!("stepping: {e}")))?;
        }
        match self.scenario {
            Scenario::Oracle => {
                if self.gammas().is_empty() || self.epsilon.is_empty() {
                    return Err(config_err("oracle needs gamma (or beta) and epsilon"));
                }
            }
            Scenario::Run | Scenario::CheckSuite => {
                self.single_gamma()?;
                self.single_epsilon()?;
            }
            Scenario::BetaTwisted => {
                let beta = self.beta.ok_or_else(|| config_err("beta: required for beta-twisted"))?;
                let g = self.single_gamma()?;
                let (mg, mb) = (crate::geometry::mu_of(d.lambda(), g), crate::geometry::mu_of(d.lambda(), beta));
                if !(mg >= 0.0 && mg <= mb) {
                    return Err(config_err(format!(
                        "gamma = {g} out of range: beta-twisted mode needs 0 <= mu_gamma <= mu_beta (beta = {beta})"
                    )));
                }
                if !(mb > 0.0) {
                    return Err(config_err(format!("beta = {beta} out of range: needs mu_beta > 0")));
                }
                self.single_epsilon()?;
            }
            Scenario::EpsSequence => {
                self.single_gamma()?;
                if self.epsilon.is_empty() {
                    return Err(config_err("epsilon: eps-sequence needs a list"));
                }
                if self.epsilon.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(config_err("epsilon: eps-sequence needs strictly decreasing values"));
                }
            }
            Scenario::AngleSweep => {
                self.single_epsilon()?;
                if self.gamma.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(config_err("gamma: angle-sweep needs strictly increasing values"));
                }
            }
        }
        if let (Some(f), Some(base)) = (&self.init_file, base) {
            let p = base.join(f);
            if !p.is_file() {
                return Err(config_err(format!("init_file: {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// Read, parse and validate a config file; relative `init_file` paths are
/// resolved against the file's directory.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: ScenarioConfig =
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    cfg.validate(Some(base))?;
    if let Some(f) = &cfg.init_file {
        cfg.init_file = Some(base.join(f));
    }
    Ok(cfg)
}
