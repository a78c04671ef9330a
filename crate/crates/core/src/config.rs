//! TOML run configuration.

use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::{Bounds, CoefficientSet, NoiseMode, Separable, SpatialProfile};
use crate::mcf::{mcf_coefficients, McfConfig};
use crate::nonlinearity::{Family, Nonlinearity, NonlinearityError, RegularizedNonlinearity};
use crate::solver::SolverConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Carries the parser's line and column.
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Pme,
    Mcf,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Contraction,
    Moments,
    Entropy,
    Fracreg,
    Phistab,
    InitialContinuity,
    McfConsistency,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Contraction => "contraction",
            ExperimentKind::Moments => "moments",
            ExperimentKind::Entropy => "entropy",
            ExperimentKind::Fracreg => "fracreg",
            ExperimentKind::Phistab => "phistab",
            ExperimentKind::InitialContinuity => "initial-continuity",
            ExperimentKind::McfConsistency => "mcf-consistency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    PowerLaw,
    Arctan,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    #[serde(default = "default_family")]
    pub family: FamilyName,
    /// Exponent; power law only.
    pub m: Option<f64>,
    /// Structure constant.
    pub k: Option<f64>,
    /// Regularization index.
    pub n: u32,
}

fn default_family() -> FamilyName {
    FamilyName::PowerLaw
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    #[serde(default)]
    pub modes: Vec<NoiseMode>,
    pub flux: Option<Vec<Separable>>,
    pub bounds: Option<Bounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McfSection {
    #[serde(default)]
    pub modes: Vec<SpatialProfile>,
    pub n0: f64,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "one")]
    pub dim: usize,
    pub m: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    /// Chosen from the CFL budget when absent.
    pub dt: Option<f64>,
    pub t_final: f64,
    /// `|u|` range the CFL budget is evaluated on.
    #[serde(default = "default_cfl_range")]
    pub cfl_range: f64,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    /// Snapshot count for time-resolved reports.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
}

fn default_cfl_range() -> f64 {
    2.0
}
fn default_cfl_safety() -> f64 {
    0.9
}
fn default_snapshots() -> usize {
    26
}

/// One additive term of an initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialTerm {
    Constant {
        value: f64,
    },
    /// `amplitude * cos(2 pi (k . x) + phase)`.
    Cosine {
        amplitude: f64,
        #[serde(default = "unit_k")]
        wavenumber: [f64; 2],
        #[serde(default)]
        phase: f64,
    },
    /// `height * max(0, 1 - |x - center|^2 / radius^2)`, periodized by
    /// nearest image.
    Bump {
        height: f64,
        radius: f64,
        #[serde(default = "centre")]
        center: [f64; 2],
    },
}

fn unit_k() -> [f64; 2] {
    [1.0, 0.0]
}
fn centre() -> [f64; 2] {
    [0.5, 0.5]
}

impl InitialTerm {
    pub fn eval(&self, x: [f64; 2], dim: usize) -> f64 {
        match *self {
            InitialTerm::Constant { value } => value,
            InitialTerm::Cosine {
                amplitude,
                wavenumber,
                phase,
            } => {
                let mut theta = phase;
                for l in 0..dim {
                    theta += TAU * wavenumber[l] * x[l];
                }
                amplitude * theta.cos()
            }
            InitialTerm::Bump { height, radius, center } => {
                let mut d2 = 0.0;
                for l in 0..dim {
                    let mut d = (x[l] - center[l]).abs();
                    d = d.min(1.0 - d);
                    d2 += d * d;
                }
                height * (1.0 - d2 / (radius * radius)).max(0.0)
            }
        }
    }
}

pub fn eval_initial(terms: &[InitialTerm], x: [f64; 2], dim: usize) -> f64 {
    terms.iter().map(|t| t.eval(x, dim)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_count() -> usize {
    64
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            seed_base: 0,
            count: default_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Also write one trajectory as CSV and binary dump.
    #[serde(default)]
    pub trajectories: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out(),
            trajectories: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractionSettings {
    pub c_max: f64,
}

impl Default for ContractionSettings {
    fn default() -> Self {
        ContractionSettings { c_max: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentSettings {
    /// Regularization indices; defaults to the configured `n`.
    pub ns: Vec<u32>,
    /// Resolutions; defaults to the configured `M`.
    pub ms: Vec<usize>,
    pub power: f64,
    pub max_spread: f64,
}

impl Default for MomentSettings {
    fn default() -> Self {
        MomentSettings {
            ns: Vec::new(),
            ms: Vec::new(),
            power: 2.0,
            max_spread: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropySettings {
    /// Regularization index; defaults to the configured `n`.
    pub n: Option<u32>,
    pub m0: usize,
    pub dt0: f64,
    pub delta0: f64,
    pub t_final: f64,
    pub levels: usize,
    pub det_tolerance: f64,
    pub shrink: f64,
}

impl Default for EntropySettings {
    fn default() -> Self {
        EntropySettings {
            n: None,
            m0: 32,
            dt0: 1e-4,
            delta0: 0.2,
            t_final: 0.05,
            levels: 3,
            det_tolerance: 1e-6,
            shrink: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FracSettings {
    pub m: Option<usize>,
    pub t_final: Option<f64>,
    /// Kernel radii in cells; each must be at least 2.
    pub radii: Vec<usize>,
    pub snapshots: usize,
}

impl Default for FracSettings {
    fn default() -> Self {
        FracSettings {
            m: None,
            t_final: None,
            radii: vec![4, 8, 16, 32],
            snapshots: 51,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiStabSettings {
    pub ns: Vec<u32>,
    pub factor: u32,
    pub snapshots: usize,
}

impl Default for PhiStabSettings {
    fn default() -> Self {
        PhiStabSettings {
            ns: vec![2, 4, 8],
            factor: 2,
            snapshots: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialContinuitySettings {
    pub h_max: f64,
}

impl Default for InitialContinuitySettings {
    fn default() -> Self {
        InitialContinuitySettings { h_max: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McfConsistencySettings {
    pub m: usize,
    pub dt: f64,
    pub steps: usize,
    /// Bound on the residual relative to `max |d_xx arctan(u)|`.
    pub tolerance: f64,
}

impl Default for McfConsistencySettings {
    fn default() -> Self {
        McfConsistencySettings {
            m: 512,
            dt: 1e-7,
            steps: 10,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub equation: Equation,
    #[serde(default)]
    pub experiments: Vec<ExperimentKind>,
    pub nonlinearity: Option<NonlinearitySection>,
    pub coefficients: Option<CoefficientSection>,
    pub mcf: Option<McfSection>,
    pub grid: GridSection,
    pub time: TimeSection,
    #[serde(default)]
    pub initial: Vec<InitialTerm>,
    /// Second datum for the contraction experiment; defaults to `initial`.
    pub initial_b: Option<Vec<InitialTerm>>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub contraction: ContractionSettings,
    #[serde(default)]
    pub moments: MomentSettings,
    #[serde(default)]
    pub entropy: EntropySettings,
    #[serde(default)]
    pub fracreg: FracSettings,
    #[serde(default)]
    pub phistab: PhiStabSettings,
    #[serde(default)]
    pub initial_continuity: InitialContinuitySettings,
    #[serde(default)]
    pub mcf_consistency: McfConsistencySettings,
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn family(&self) -> Result<Family, ConfigError> {
        if self.equation == Equation::Mcf {
            return Ok(Family::Curvature);
        }
        let sec = self
            .nonlinearity
            .as_ref()
            .ok_or_else(|| invalid("nonlinearity", "required unless equation = \"mcf\""))?;
        let base = match sec.family {
            FamilyName::PowerLaw => Nonlinearity::power_law(
                sec.m.ok_or_else(|| invalid("nonlinearity.m", "power law needs an exponent"))?,
                sec.k.unwrap_or(1.0),
            )?,
            FamilyName::Arctan => Nonlinearity::arctan(sec.k.unwrap_or(1.0))?,
            FamilyName::Linear => Nonlinearity::Linear { k: sec.k.unwrap_or(1.0) },
        };
        Ok(Family::Base(base))
    }

    /// Regularization index of the main run.
    pub fn n(&self) -> Result<u32, ConfigError> {
        match self.equation {
            Equation::Mcf => Ok(self.mcf_section()?.n),
            _ => self
                .nonlinearity
                .as_ref()
                .map(|s| s.n)
                .ok_or_else(|| invalid("nonlinearity", "required unless equation = \"mcf\"")),
        }
    }

    fn mcf_section(&self) -> Result<&McfSection, ConfigError> {
        self.mcf
            .as_ref()
            .ok_or_else(|| invalid("mcf", "required when equation = \"mcf\""))
    }

    pub fn mcf_config(&self) -> Result<McfConfig, ConfigError> {
        let sec = self.mcf_section()?;
        Ok(McfConfig {
            modes: sec.modes.clone(),
            n0: sec.n0,
            n: sec.n,
            m: self.grid.m,
            dt: self.time.dt.unwrap_or(1.0),
            t_final: self.time.t_final,
        })
    }

    pub fn coefficient_set(&self) -> Result<CoefficientSet, ConfigError> {
        let dim = self.grid.dim;
        if self.equation == Equation::Mcf {
            return Ok(mcf_coefficients(&self.mcf_config()?));
        }
        let Some(sec) = &self.coefficients else {
            return Ok(CoefficientSet::zero(dim));
        };
        let flux = sec.flux.clone().unwrap_or_else(|| vec![Separable::zero(); dim]);
        let set = CoefficientSet::new(dim, sec.modes.clone(), flux).map_err(|e| invalid("coefficients", e.to_string()))?;
        Ok(set.with_bounds(sec.bounds.unwrap_or_default()))
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.ensemble.count as u64).map(|i| self.ensemble.seed_base + i).collect()
    }

    pub fn initial_b_terms(&self) -> &[InitialTerm] {
        self.initial_b.as_deref().unwrap_or(&self.initial)
    }

    /// Solver configuration for regularization `nl` at resolution `m` over
    /// `[0, t_final]`; `dt` is the configured one or the largest
    /// CFL-admissible divisor of `t_final`.
    pub fn solver_for(&self, nl: RegularizedNonlinearity, m: usize, t_final: f64) -> Result<SolverConfig, ConfigError> {
        let mut cfg = SolverConfig::new(nl, self.coefficient_set()?, m, 1.0, t_final);
        cfg.cfl_safety = self.time.cfl_safety;
        let budget = cfg.cfl_budget(self.time.cfl_range);
        cfg.dt = match self.time.dt {
            Some(dt) => {
                if dt > budget {
                    return Err(invalid(
                        "time.dt",
                        format!(
                            "dt = {dt:e} exceeds the CFL budget {budget:e} for n = {}, M = {m}, |u| <= {}",
                            cfg.nonlinearity.n(),
                            self.time.cfl_range
                        ),
                    ));
                }
                dt
            }
            None => cfg.auto_dt(self.time.cfl_range),
        };
        cfg.validate().map_err(|e| invalid("time", e.to_string()))?;
        Ok(cfg)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, ConfigError> {
        let nl = self.family()?.regularize(self.n()?)?;
        self.solver_for(nl, self.grid.m, self.time.t_final)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=2).contains(&self.grid.dim) {
            return Err(invalid("grid.dim", format!("must be 1 or 2, got {}", self.grid.dim)));
        }
        if self.grid.m < 3 {
            return Err(invalid("grid.m", "must be at least 3"));
        }
        if !(self.time.t_final >= 0.0 && self.time.t_final.is_finite()) {
            return Err(invalid("time.t_final", "must be finite and nonnegative"));
        }
        if !(self.time.cfl_range > 0.0) {
            return Err(invalid("time.cfl_range", "must be positive"));
        }
        match self.equation {
            Equation::Pme => {
                let sec = self
                    .nonlinearity
                    .as_ref()
                    .ok_or_else(|| invalid("nonlinearity", "required for equation = \"pme\""))?;
                if sec.family != FamilyName::PowerLaw {
                    return Err(invalid("nonlinearity.family", "equation = \"pme\" needs power_law"));
                }
            }
            Equation::Mcf => {
                if self.grid.dim != 1 {
                    return Err(invalid("grid.dim", "curve-shortening runs are one-dimensional"));
                }
                if self.coefficients.is_some() {
                    return Err(invalid("coefficients", "set the noise through [mcf] for equation = \"mcf\""));
                }
                let report = self.mcf_config()?.check_c3(512);
                if !report.passed {
                    return Err(invalid(
                        "mcf.n0",
                        format!("declared {} but sampled C^3 norms are {:?}", report.n0, report.sups),
                    ));
                }
            }
            Equation::Custom => {}
        }
        if self.ensemble.count == 0 && !self.experiments.is_empty() {
            return Err(invalid("ensemble.count", "must be positive"));
        }
        if self.experiments.contains(&ExperimentKind::McfConsistency) && self.equation != Equation::Mcf {
            return Err(invalid("experiments", "mcf-consistency needs equation = \"mcf\""));
        }
        if let Some(r) = self.fracreg.radii.iter().find(|&&r| r < 2) {
            return Err(invalid("fracreg.radii", format!("radius {r} is below two cells")));
        }
        if self.phistab.factor < 1 {
            return Err(invalid("phistab.factor", "must be at least 1"));
        }
        self.solver_config()?;
        Ok(())
    }
}
