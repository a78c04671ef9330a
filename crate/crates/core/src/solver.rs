//! Explicit Euler–Maruyama time stepping of
//!
//! `du = (Lap Phi_n(u) + div(a(x,u) grad u + G(x,u) + b(x,u)/2)) dt + div sigma^k(x,u) dW^k`
//!
//! in flux form on the periodic grid. Every term is a difference of face
//! fluxes, so the cell sum is conserved up to rounding.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::coefficients::{CoeffError, CoefficientSet, GridCoefficients};
use crate::grid::{shift, truncate_initial, GridError, GridFunction};
use crate::noise::NoisePath;
use crate::nonlinearity::RegularizedNonlinearity;

/// Runs abort once `max |u|` exceeds this.
pub const BLOWUP_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("step {step}: dt = {dt:e} exceeds the CFL budget {budget:e} for |u| <= {range}; reduce dt")]
    Cfl {
        step: usize,
        dt: f64,
        budget: f64,
        range: f64,
    },
    #[error("step {step}: blow-up, max |u| = {max_abs:e}")]
    Blowup { step: usize, max_abs: f64 },
    #[error("T_final / dt = {ratio} is not an integer step count")]
    TimeGrid { ratio: f64 },
    #[error("noise path has dt = {path:e}, solver uses {solver:e}")]
    PathTimeStep { path: f64, solver: f64 },
    #[error("noise path has {got} steps, run needs {needed}")]
    PathTooShort { needed: usize, got: usize },
    #[error("noise path has {path} modes, coefficients have {coeffs}")]
    PathModes { path: usize, coeffs: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Coefficients(#[from] CoeffError),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub nonlinearity: Arc<RegularizedNonlinearity>,
    pub coeffs: CoefficientSet,
    /// Cells per axis.
    pub m: usize,
    pub dt: f64,
    pub t_final: f64,
    pub cfl_safety: f64,
    /// Initial data are clamped to `[-truncation, truncation]`.
    pub truncation: f64,
    /// Record norms after every step (costs roughly one extra table sweep).
    pub diagnostics: bool,
}

impl SolverConfig {
    pub fn new(
        nonlinearity: RegularizedNonlinearity,
        coeffs: CoefficientSet,
        m: usize,
        dt: f64,
        t_final: f64,
    ) -> Self {
        let truncation = nonlinearity.n() as f64;
        SolverConfig {
            nonlinearity: Arc::new(nonlinearity),
            coeffs,
            m,
            dt,
            t_final,
            cfl_safety: 0.9,
            truncation,
            diagnostics: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// `safety h^2 / (2d sup_{|r|<=range} Phi_n' + d^2 sup_{|r|<=range} |a|)`.
    pub fn cfl_budget(&self, range: f64) -> f64 {
        let d = self.dim() as f64;
        let h = self.spacing();
        let denom = 2.0 * d * self.nonlinearity.sup_phi_prime(range) + d * d * self.coeffs.a_bound(range);
        self.cfl_safety * h * h / denom
    }

    /// Largest `dt <= cfl_budget(range)` that divides `t_final` evenly.
    pub fn auto_dt(&self, range: f64) -> f64 {
        if self.t_final <= 0.0 {
            return self.cfl_budget(range);
        }
        let steps = (self.t_final / self.cfl_budget(range)).ceil().max(1.0);
        self.t_final / steps
    }

    pub fn steps(&self) -> Result<usize, SolverError> {
        if self.t_final == 0.0 {
            return Ok(0);
        }
        let ratio = self.t_final / self.dt;
        let n = ratio.round();
        if !ratio.is_finite() || (ratio - n).abs() > 1e-6 * n.max(1.0) {
            return Err(SolverError::TimeGrid { ratio });
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.coeffs.validate()?;
        if self.m < 3 {
            return Err(GridError::Resolution(self.m).into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolverError::Parameter(format!("dt = {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(SolverError::Parameter(format!("t_final = {}", self.t_final)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(SolverError::Parameter(format!("cfl_safety = {} not in (0,1)", self.cfl_safety)));
        }
        self.steps()?;
        Ok(())
    }
}

/// Which solution states a run keeps.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshots {
    /// Initial and final states.
    Final,
    /// Every `n`-th step, plus the initial and final states.
    Every(usize),
    /// Nearest steps to the given times, plus the initial state.
    Times(Vec<f64>),
    /// Every step.
    Dense,
}

impl Snapshots {
    fn wants(&self, step: usize, last: usize, marks: &[usize]) -> bool {
        if step == 0 || step == last {
            return true;
        }
        match self {
            Snapshots::Final => false,
            Snapshots::Every(n) => step % (*n).max(1) == 0,
            Snapshots::Times(_) => marks.binary_search(&step).is_ok(),
            Snapshots::Dense => true,
        }
    }

    fn marks(&self, dt: f64, last: usize) -> Vec<usize> {
        match self {
            Snapshots::Times(ts) => {
                let mut v: Vec<usize> = ts
                    .iter()
                    .map(|t| ((t / dt).round().max(0.0) as usize).min(last))
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            _ => Vec::new(),
        }
    }
}

/// Scalars recorded after every step when diagnostics are on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub t: f64,
    /// `sum_cells u`.
    pub cell_sum: f64,
    /// `int u`.
    pub mass: f64,
    /// `||u||_{L2}^2`.
    pub l2_sq: f64,
    /// `||u||_{L_{m+1}}^{m+1}`.
    pub lm1: f64,
    /// `||grad_h [a_n](u)||_{L2}^2`.
    pub grad_bracket_sq: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub steps: usize,
    /// Step index of each snapshot.
    pub snapshot_steps: Vec<usize>,
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    /// Empty unless diagnostics were requested; otherwise `steps + 1` rows.
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn initial(&self) -> &GridFunction {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }

    /// True when every step was kept.
    pub fn is_dense(&self) -> bool {
        self.snapshots.len() == self.steps + 1
    }

    /// Largest per-step change of the cell sum, and the whole-run change.
    pub fn mass_defects(&self) -> Option<(f64, f64)> {
        let first = self.diagnostics.first()?.cell_sum;
        let last = self.diagnostics.last()?.cell_sum;
        let per_step = self
            .diagnostics
            .windows(2)
            .map(|w| (w[1].cell_sum - w[0].cell_sum).abs())
            .fold(0.0, f64::max);
        Some((per_step, (last - first).abs()))
    }
}

/// Reusable buffers and cached coefficients for one configuration.
pub struct Stepper {
    cfg: SolverConfig,
    grid: GridCoefficients,
    cells: usize,
    kd: usize,
    phi: Vec<f64>,
    a: Vec<[[f64; 2]; 2]>,
    e: Vec<[f64; 2]>,
    sigma: Vec<f64>,
    flux: Vec<f64>,
    flux_y: Vec<f64>,
}

impl Stepper {
    pub fn new(cfg: &SolverConfig) -> Result<Self, SolverError> {
        cfg.validate()?;
        let grid = GridCoefficients::new(&cfg.coeffs, cfg.m);
        let cells = cfg.m.pow(cfg.dim() as u32);
        let kd = cfg.coeffs.mode_count() * cfg.dim();
        Ok(Stepper {
            cfg: cfg.clone(),
            grid,
            cells,
            kd,
            phi: vec![0.0; cells],
            a: vec![[[0.0; 2]; 2]; cells],
            e: vec![[0.0; 2]; cells],
            sigma: vec![0.0; cells * kd],
            flux: vec![0.0; cells],
            flux_y: vec![0.0; cells],
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Advances `u` by one step with increments `dw` (one per mode).
    pub fn advance(&mut self, u: &mut GridFunction, dw: &[f64], step: usize) -> Result<(), SolverError> {
        let range = u.max_abs();
        let budget = self.cfg.cfl_budget(range);
        if self.cfg.dt > budget {
            return Err(SolverError::Cfl {
                step,
                dt: self.cfg.dt,
                budget,
                range,
            });
        }
        if dw.len() != self.cfg.coeffs.mode_count() {
            return Err(SolverError::PathModes {
                path: dw.len(),
                coeffs: self.cfg.coeffs.mode_count(),
            });
        }
        let nl = &*self.cfg.nonlinearity;
        let values = u.values_mut();
        let coeff_terms = self.grid.is_noisy() || self.grid.has_flux();
        for c in 0..self.cells {
            let r = values[c];
            self.phi[c] = nl.phi(r);
            if coeff_terms {
                let (a, e) = self
                    .grid
                    .flux_terms(c, r, &mut self.sigma[c * self.kd..(c + 1) * self.kd]);
                self.a[c] = a;
                self.e[c] = e;
            }
        }
        if self.cfg.dim() == 1 {
            self.advance_1d(values, dw, coeff_terms);
        } else {
            self.advance_2d(values, dw, coeff_terms);
        }
        let max_abs = values.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        if !(max_abs <= BLOWUP_LIMIT) {
            return Err(SolverError::Blowup { step, max_abs });
        }
        Ok(())
    }

    fn advance_1d(&mut self, u: &mut [f64], dw: &[f64], coeff_terms: bool) {
        let m = self.cfg.m;
        let inv_h = self.cfg.m as f64;
        let dt = self.cfg.dt;
        let k = self.kd;
        for c in 0..m {
            let c1 = if c + 1 == m { 0 } else { c + 1 };
            let mut drift = (self.phi[c1] - self.phi[c]) * inv_h;
            let mut noise = 0.0;
            if coeff_terms {
                drift += 0.5 * (self.a[c][0][0] + self.a[c1][0][0]) * (u[c1] - u[c]) * inv_h
                    + 0.5 * (self.e[c][0] + self.e[c1][0]);
                for (q, w) in dw.iter().enumerate() {
                    noise += w * 0.5 * (self.sigma[c * k + q] + self.sigma[c1 * k + q]);
                }
            }
            self.flux[c] = dt * drift + noise;
        }
        let mut left = self.flux[m - 1];
        for c in 0..m {
            let right = self.flux[c];
            u[c] += (right - left) * inv_h;
            left = right;
        }
    }

    fn advance_2d(&mut self, u: &mut [f64], dw: &[f64], coeff_terms: bool) {
        let m = self.cfg.m;
        let inv_h = m as f64;
        let dt = self.cfg.dt;
        let kd = self.kd;
        for c in 0..self.cells {
            for axis in 0..2 {
                let n = shift(m, c, axis, 1);
                let mut drift = (self.phi[n] - self.phi[c]) * inv_h;
                let mut noise = 0.0;
                if coeff_terms {
                    let other = 1 - axis;
                    // Normal derivative at the face, plus the tangential one
                    // averaged from the two adjacent centred differences.
                    let du_n = (u[n] - u[c]) * inv_h;
                    let du_t = 0.25
                        * inv_h
                        * (u[shift(m, c, other, 1)] - u[shift(m, c, other, -1)] + u[shift(m, n, other, 1)]
                            - u[shift(m, n, other, -1)]);
                    drift += 0.5 * (self.a[c][axis][axis] + self.a[n][axis][axis]) * du_n
                        + 0.5 * (self.a[c][axis][other] + self.a[n][axis][other]) * du_t
                        + 0.5 * (self.e[c][axis] + self.e[n][axis]);
                    for (q, w) in dw.iter().enumerate() {
                        let idx = q * 2 + axis;
                        noise += w * 0.5 * (self.sigma[c * kd + idx] + self.sigma[n * kd + idx]);
                    }
                }
                let f = dt * drift + noise;
                if axis == 0 {
                    self.flux[c] = f;
                } else {
                    self.flux_y[c] = f;
                }
            }
        }
        for c in 0..self.cells {
            let w = shift(m, c, 0, -1);
            let s = shift(m, c, 1, -1);
            u[c] += ((self.flux[c] - self.flux[w]) + (self.flux_y[c] - self.flux_y[s])) * inv_h;
        }
    }

    fn diagnostics(&self, u: &GridFunction, t: f64) -> StepDiagnostics {
        let nl = &*self.cfg.nonlinearity;
        StepDiagnostics {
            t,
            cell_sum: u.cell_sum(),
            mass: u.mass(),
            l2_sq: u.l2_sq(),
            lm1: u.lp_pow(nl.exponent() + 1.0),
            grad_bracket_sq: u.forward_gradient_sq(|r| nl.bracket_a(r)),
            max_abs: u.max_abs(),
        }
    }

    /// Runs from `xi` (truncated to `[-n, n]`) over `[0, t_final]`.
    pub fn run(&mut self, xi: &GridFunction, path: &NoisePath, snapshots: &Snapshots) -> Result<Trajectory, SolverError> {
        let cfg = &self.cfg;
        if xi.dim() != cfg.dim() || xi.resolution() != cfg.m {
            return Err(GridError::Mismatch((xi.dim(), xi.resolution()), (cfg.dim(), cfg.m)).into());
        }
        let steps = cfg.steps()?;
        let modes = cfg.coeffs.mode_count();
        if steps > 0 && modes > 0 {
            if path.modes() != modes {
                return Err(SolverError::PathModes {
                    path: path.modes(),
                    coeffs: modes,
                });
            }
            if (path.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
                return Err(SolverError::PathTimeStep {
                    path: path.dt(),
                    solver: cfg.dt,
                });
            }
            if path.steps() < steps {
                return Err(SolverError::PathTooShort {
                    needed: steps,
                    got: path.steps(),
                });
            }
        }
        let dt = cfg.dt;
        let marks = snapshots.marks(dt, steps);
        let record = cfg.diagnostics;
        let mut u = truncate_initial(xi, cfg.truncation);
        let mut traj = Trajectory {
            dt,
            steps,
            snapshot_steps: vec![0],
            times: vec![0.0],
            snapshots: vec![u.clone()],
            diagnostics: Vec::new(),
        };
        if record {
            traj.diagnostics.reserve(steps + 1);
            traj.diagnostics.push(self.diagnostics(&u, 0.0));
        }
        let silent: [f64; 0] = [];
        for n in 0..steps {
            let dw = if modes > 0 { path.step(n) } else { &silent[..] };
            self.advance(&mut u, dw, n)?;
            let t = (n + 1) as f64 * dt;
            if record {
                traj.diagnostics.push(self.diagnostics(&u, t));
            }
            if snapshots.wants(n + 1, steps, &marks) {
                traj.snapshot_steps.push(n + 1);
                traj.times.push(t);
                traj.snapshots.push(u.clone());
            }
        }
        Ok(traj)
    }
}

/// One explicit step of `cfg` from `u`.
pub fn step(u: &GridFunction, cfg: &SolverConfig, dw: &[f64]) -> Result<GridFunction, SolverError> {
    let mut stepper = Stepper::new(cfg)?;
    let mut next = u.clone();
    stepper.advance(&mut next, dw, 0)?;
    Ok(next)
}

/// Runs `cfg` from `xi` driven by `path`.
pub fn run(xi: &GridFunction, cfg: &SolverConfig, path: &NoisePath, snapshots: &Snapshots) -> Result<Trajectory, SolverError> {
    Stepper::new(cfg)?.run(xi, path, snapshots)
}

/// Two runs driven by the same increments.
pub fn run_coupled(
    xi_a: &GridFunction,
    xi_b: &GridFunction,
    cfg: &SolverConfig,
    path: &NoisePath,
    snapshots: &Snapshots,
) -> Result<(Trajectory, Trajectory), SolverError> {
    xi_a.same_grid(xi_b)?;
    let mut stepper = Stepper::new(cfg)?;
    let a = stepper.run(xi_a, path, snapshots)?;
    let b = stepper.run(xi_b, path, snapshots)?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{regularize, Nonlinearity};

    fn heat(m: usize, dt: f64, t: f64) -> SolverConfig {
        let nl = regularize(&Nonlinearity::linear(), 4).unwrap();
        SolverConfig::new(nl, CoefficientSet::zero(1), m, dt, t)
    }

    #[test]
    fn constants_are_fixed_points() {
        let cfg = heat(16, 1e-4, 1e-3);
        let u = GridFunction::constant(1, 16, 0.7).unwrap();
        let v = step(&u, &cfg, &[]).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let cfg = heat(64, 1e-3, 1e-2);
        let u = GridFunction::constant(1, 64, 0.0).unwrap();
        assert!(matches!(step(&u, &cfg, &[]), Err(SolverError::Cfl { .. })));
    }

    #[test]
    fn zero_final_time_keeps_truncated_data() {
        let cfg = heat(8, 1e-4, 0.0);
        let xi = GridFunction::constant(1, 8, 9.0).unwrap();
        let traj = run(&xi, &cfg, &NoisePath::silent(1e-4, 1), &Snapshots::Dense).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0].values()[0], 4.0);
    }
}
