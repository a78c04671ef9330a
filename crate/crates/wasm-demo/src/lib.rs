//! Browser bindings for three small demos: a stochastic porous-medium run, a
//! curve-shortening run with transport noise, and the regularized diffusion
//! profile. Each binding is a thin wrapper over a plain Rust function so the
//! logic can be tested natively.

use std::f64::consts::TAU;

use wasm_bindgen::prelude::*;

use gradnoise::analysis::path_for;
use gradnoise::coefficients::{Amplitude, CoefficientSet, SpatialProfile};
use gradnoise::grid::GridFunction;
use gradnoise::mcf::{reconstruct_heights, run_mcf_u, McfConfig};
use gradnoise::nonlinearity::{regularize, Nonlinearity};
use gradnoise::solver::{run, SolverConfig, Snapshots};

/// Largest grid the demo accepts; keeps a browser frame under a second.
pub const MAX_CELLS: usize = 512;
/// Upper bound on explicit steps per call.
pub const MAX_STEPS: usize = 2_000_000;

fn frames_to_snapshots(steps: usize, frames: usize) -> Snapshots {
    Snapshots::Every((steps / frames.max(1)).max(1))
}

fn check_grid(m: usize) -> Result<(), String> {
    if !(8..=MAX_CELLS).contains(&m) {
        return Err(format!("grid size {m} outside 8..={MAX_CELLS}"));
    }
    Ok(())
}

fn check_steps(cfg: &SolverConfig) -> Result<usize, String> {
    let steps = cfg.steps().map_err(|e| e.to_string())?;
    if steps > MAX_STEPS {
        return Err(format!("{steps} steps requested; shorten the run or coarsen the grid"));
    }
    Ok(steps)
}

/// Porous-medium run from `1 + 0.8 cos(2 pi x)` with noise
/// `noise cos(2 pi x) sqrt(1 + u^2)`. Returns the kept snapshots
/// row-major, `m` values each.
pub fn pme_frames(m: usize, exponent: f64, n: u32, noise: f64, t_final: f64, seed: u64, frames: usize) -> Result<Vec<f64>, String> {
    check_grid(m)?;
    let fam = Nonlinearity::power_law(exponent, exponent).map_err(|e| e.to_string())?;
    let nl = regularize(&fam, n).map_err(|e| e.to_string())?;
    let coeffs = CoefficientSet::single_mode(SpatialProfile::cosine(noise, 1.0), Amplitude::Sqrt1pSq);
    let mut cfg = SolverConfig::new(nl, coeffs, m, 1.0, t_final);
    cfg.dt = cfg.auto_dt(2.0);
    let steps = check_steps(&cfg)?;
    let xi = GridFunction::from_fn(1, m, |x| 1.0 + 0.8 * (TAU * x[0]).cos()).map_err(|e| e.to_string())?;
    let path = path_for(&cfg, seed).map_err(|e| e.to_string())?;
    let traj = run(&xi, &cfg, &path, &frames_to_snapshots(steps, frames)).map_err(|e| e.to_string())?;
    Ok(traj.snapshots.into_iter().flat_map(GridFunction::into_values).collect())
}

/// Curve-shortening run of the graph `v = 0.1 sin(2 pi x)` with two
/// transport modes of size `noise`. Returns heights at `(i + 1/2)/m`,
/// row-major, `m` values per kept snapshot.
pub fn mcf_frames(m: usize, noise: f64, n: u32, t_final: f64, seed: u64, frames: usize) -> Result<Vec<f64>, String> {
    check_grid(m)?;
    let mut mc = McfConfig {
        modes: vec![
            SpatialProfile::cosine(noise, 1.0),
            SpatialProfile::Cosine {
                amplitude: noise,
                wavenumber: [1.0, 0.0],
                phase: -0.25 * TAU,
            },
        ],
        // only read by the assumption checks, which the demo skips
        n0: f64::INFINITY,
        n,
        m,
        dt: 1.0,
        t_final,
    };
    let mut cfg = mc.solver_config().map_err(|e| e.to_string())?;
    mc.dt = cfg.auto_dt(2.0);
    cfg.dt = mc.dt;
    let steps = check_steps(&cfg)?;
    // slope of the initial graph
    let xi = GridFunction::from_fn(1, m, |x| 0.1 * TAU * (TAU * x[0]).cos()).map_err(|e| e.to_string())?;
    let path = path_for(&cfg, seed).map_err(|e| e.to_string())?;
    let traj = run_mcf_u(&mc, &xi, &path, &frames_to_snapshots(steps, frames)).map_err(|e| e.to_string())?;
    Ok(traj.snapshots.iter().flat_map(|u| reconstruct_heights(u, 0.0)).collect())
}

/// Samples `a(r)` and `a_n(r)` for the power law of the given exponent at
/// `points` values of `r` spread over `[-range, range]`. Returns
/// `[r..., a..., a_n...]`.
pub fn regularization_samples(exponent: f64, n: u32, range: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || !(range > 0.0) {
        return Err("need at least two points on a positive range".into());
    }
    let fam = Nonlinearity::power_law(exponent, exponent).map_err(|e| e.to_string())?;
    let reg = regularize(&fam, n).map_err(|e| e.to_string())?;
    let rs: Vec<f64> = (0..points)
        .map(|i| -range + 2.0 * range * i as f64 / (points - 1) as f64)
        .collect();
    let mut out = rs.clone();
    out.extend(rs.iter().map(|&r| fam.a_frak(r)));
    out.extend(rs.iter().map(|&r| reg.a_frak(r)));
    Ok(out)
}

#[wasm_bindgen]
pub fn simulate_pme(m: usize, exponent: f64, n: u32, noise: f64, t_final: f64, seed: u64, frames: usize) -> Result<Vec<f64>, JsError> {
    pme_frames(m, exponent, n, noise, t_final, seed, frames).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate_mcf_curve(m: usize, noise: f64, n: u32, t_final: f64, seed: u64, frames: usize) -> Result<Vec<f64>, JsError> {
    mcf_frames(m, noise, n, t_final, seed, frames).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn regularization_profile(exponent: f64, n: u32, range: f64, points: usize) -> Result<Vec<f64>, JsError> {
    regularization_samples(exponent, n, range, points).map_err(|e| JsError::new(&e))
}
