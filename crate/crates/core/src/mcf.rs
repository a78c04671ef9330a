//! Stochastic curve-shortening flow in graph form, simulated through the
//! slope `u = v_x`, which solves the divergence-form equation with
//! `Phi = arctan` and `sigma^k(x, r) = h^k(x) sqrt(1 + r^2)`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{Amplitude, Bounds, CoefficientSet, NoiseMode, Separable, SpatialProfile};
use crate::grid::GridFunction;
use crate::noise::NoisePath;
use crate::nonlinearity::{mcf_regularize, NonlinearityError};
use crate::solver::{SolverConfig, SolverError, Snapshots, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McfConfig {
    /// `h^k`, one per noise mode.
    pub modes: Vec<SpatialProfile>,
    /// Declared bound on `||h||_{C^3}`.
    pub n0: f64,
    /// Regularization index.
    pub n: u32,
    pub m: usize,
    pub dt: f64,
    pub t_final: f64,
}

/// Observed `sup_x |(h^k)^{(j)}|_{l2}` for `j = 0..=3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct C3Report {
    pub sups: [f64; 4],
    pub n0: f64,
    pub passed: bool,
}

impl McfConfig {
    /// Samples the modes on `samples` points and compares each derivative's
    /// `l2`-norm across modes with `n0`.
    pub fn check_c3(&self, samples: usize) -> C3Report {
        let mut sups = [0.0f64; 4];
        for s in 0..samples.max(1) {
            let x = s as f64 / samples.max(1) as f64;
            let mut sq = [0.0; 4];
            for h in &self.modes {
                let jet = h.jet(&[x]);
                let v = [jet.v, jet.d1[0], jet.d2[0][0], h.third(x)];
                for j in 0..4 {
                    sq[j] += v[j] * v[j];
                }
            }
            for j in 0..4 {
                sups[j] = sups[j].max(sq[j].sqrt());
            }
        }
        C3Report {
            sups,
            n0: self.n0,
            passed: sups.iter().all(|&s| s <= self.n0),
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig, NonlinearityError> {
        let nl = mcf_regularize(self.n)?;
        Ok(SolverConfig::new(nl, mcf_coefficients(self), self.m, self.dt, self.t_final))
    }
}

/// `sigma^{1k} = h^k(x) sqrt(1 + r^2)`, `G = 0`; the growth exponents are
/// `kappa_bar = beta = beta_tilde = 1`.
pub fn mcf_coefficients(mc: &McfConfig) -> CoefficientSet {
    let modes = mc
        .modes
        .iter()
        .map(|h| NoiseMode {
            components: vec![Separable::new(*h, Amplitude::Sqrt1pSq)],
        })
        .collect();
    CoefficientSet {
        dim: 1,
        modes,
        flux: vec![Separable::zero()],
        bounds: Bounds {
            n0: mc.n0,
            kappa_bar: 1.0,
            beta: 1.0,
            beta_tilde: 1.0,
            ..Bounds::default()
        },
    }
}

/// Runs the slope equation from `xi_u`.
pub fn run_mcf_u(mc: &McfConfig, xi_u: &GridFunction, path: &NoisePath, snapshots: &Snapshots) -> Result<Trajectory, SolverError> {
    let cfg = mc
        .solver_config()
        .map_err(|e| SolverError::Parameter(e.to_string()))?;
    if xi_u.dim() != 1 {
        return Err(SolverError::Parameter("curve-shortening runs are one-dimensional".into()));
    }
    crate::solver::run(xi_u, &cfg, path, snapshots)
}

/// Graph heights reconstructed from slope snapshots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTrajectory {
    pub times: Vec<f64>,
    /// Face points `x_i + h/2` where `v` is sampled.
    pub x: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
    /// `|int u|` per snapshot.
    pub periodicity_defect: Vec<f64>,
    /// Set when some defect exceeds `1e-8`: `v` then drifts linearly and is
    /// not a closed graph.
    pub non_periodic: bool,
}

/// Largest tolerated `|int u|` for a periodic reconstruction.
pub const PERIODICITY_TOL: f64 = 1e-8;

/// Heights at cell faces from `v_{i+1/2} = v_{i-1/2} + h u_i`, shifted to mean
/// `v0_mean`. The forward difference of the result returns `u` exactly up to
/// rounding.
pub fn reconstruct_heights(u: &GridFunction, v0_mean: f64) -> Vec<f64> {
    let h = u.spacing();
    let mut v = Vec::with_capacity(u.len());
    let mut acc = 0.0;
    for &ui in u.values() {
        acc += h * ui;
        v.push(acc);
    }
    let mean = crate::quad::pairwise_sum(&v) / v.len() as f64;
    v.iter().map(|vi| vi - mean + v0_mean).collect()
}

pub fn reconstruct_curve(traj: &Trajectory, v0_mean: f64) -> Result<CurveTrajectory, SolverError> {
    let first = traj.initial();
    if first.dim() != 1 {
        return Err(SolverError::Parameter("curve reconstruction needs a one-dimensional run".into()));
    }
    let h = first.spacing();
    let x = (0..first.len()).map(|i| (i as f64 + 0.5) * h).collect();
    let curves: Vec<Vec<f64>> = traj.snapshots.iter().map(|u| reconstruct_heights(u, v0_mean)).collect();
    let periodicity_defect: Vec<f64> = traj.snapshots.iter().map(|u| u.mass().abs()).collect();
    let non_periodic = periodicity_defect.iter().any(|&d| d > PERIODICITY_TOL);
    Ok(CurveTrajectory {
        times: traj.times.clone(),
        x,
        curves,
        periodicity_defect,
        non_periodic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub pairs: usize,
    /// `max |(u^{n+1} - u^n)/dt - d_xx arctan(u^n)|` over consecutive pairs.
    pub max_residual: f64,
    /// `max |d_xx arctan(u^n)|` over the same pairs.
    pub scale: f64,
    pub relative_residual: f64,
    /// `max_residual / (h^2 + dt)`.
    pub fitted_constant: f64,
}

/// Compares discrete time differences of a deterministic run with a
/// fourth-order evaluation of `d_xx arctan(u)`.
pub fn curvature_consistency(traj: &Trajectory) -> Result<CurvatureReport, SolverError> {
    let first = traj.initial();
    if first.dim() != 1 {
        return Err(SolverError::Parameter("curvature check needs a one-dimensional run".into()));
    }
    let m = first.resolution();
    let h = first.spacing();
    let dt = traj.dt;
    let mut max_residual = 0.0f64;
    let mut scale = 0.0f64;
    let mut pairs = 0;
    for w in 0..traj.snapshots.len().saturating_sub(1) {
        if traj.snapshot_steps[w + 1] != traj.snapshot_steps[w] + 1 {
            continue;
        }
        pairs += 1;
        let u = traj.snapshots[w].values();
        let next = traj.snapshots[w + 1].values();
        let f: Vec<f64> = u.iter().map(|r| r.atan()).collect();
        for i in 0..m {
            let at = |o: isize| f[(i as isize + o).rem_euclid(m as isize) as usize];
            let fxx = (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * h * h);
            let ut = (next[i] - u[i]) / dt;
            max_residual = max_residual.max((ut - fxx).abs());
            scale = scale.max(fxx.abs());
        }
    }
    if pairs == 0 {
        return Err(SolverError::Parameter("no consecutive snapshot pairs".into()));
    }
    Ok(CurvatureReport {
        pairs,
        max_residual,
        scale,
        relative_residual: if scale > 0.0 { max_residual / scale } else { max_residual },
        fitted_constant: max_residual / (h * h + dt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heights_differentiate_back() {
        let u = GridFunction::from_fn(1, 64, |x| (std::f64::consts::TAU * x[0]).sin()).unwrap();
        let v = reconstruct_heights(&u, 0.3);
        let h = u.spacing();
        for i in 1..64 {
            assert!(((v[i] - v[i - 1]) / h - u.values()[i]).abs() < 1e-10);
        }
    }
}
