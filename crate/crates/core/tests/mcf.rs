use std::f64::consts::TAU;

use gradnoise::analysis::path_for;
use gradnoise::coefficients::SpatialProfile;
use gradnoise::grid::GridFunction;
use gradnoise::mcf::{curvature_consistency, reconstruct_curve, reconstruct_heights, run_mcf_u, McfConfig};
use gradnoise::noise::NoisePath;
use gradnoise::solver::Snapshots;

fn config(m: usize, dt: f64, t: f64) -> McfConfig {
    McfConfig {
        modes: vec![SpatialProfile::cosine(0.05, 1.0)],
        n0: 13.0,
        n: 16,
        m,
        dt,
        t_final: t,
    }
}

#[test]
fn zero_slope_with_zero_modes_stays_zero() {
    let mut mc = config(64, 1e-5, 1e-3);
    mc.modes.clear();
    let xi = GridFunction::constant(1, 64, 0.0).unwrap();
    let traj = run_mcf_u(&mc, &xi, &NoisePath::silent(1e-5, 100), &Snapshots::Final).unwrap();
    assert!(traj.last().values().iter().all(|&v| v == 0.0));
}

#[test]
fn heights_of_sine_slope() {
    let m = 512;
    let u = GridFunction::from_fn(1, m, |x| (TAU * x[0]).sin()).unwrap();
    let v = reconstruct_heights(&u, 0.25);
    let h = 1.0 / m as f64;
    for (i, vi) in v.iter().enumerate() {
        let x = (i as f64 + 0.5) * h;
        let exact = -(TAU * x).cos() / TAU + 0.25;
        assert!((vi - exact).abs() < 1e-6, "{i}: {vi} vs {exact}");
    }
}

#[test]
fn flat_slope_gives_flat_curve() {
    let u = GridFunction::constant(1, 32, 0.0).unwrap();
    assert!(reconstruct_heights(&u, -1.5).iter().all(|&v| v == -1.5));
}

#[test]
fn flat_slope_has_zero_curvature_residual() {
    let mut mc = config(64, 1e-6, 1e-5);
    mc.modes.clear();
    let xi = GridFunction::constant(1, 64, 0.0).unwrap();
    let traj = run_mcf_u(&mc, &xi, &NoisePath::silent(1e-6, 10), &Snapshots::Dense).unwrap();
    assert_eq!(curvature_consistency(&traj).unwrap().max_residual, 0.0);
}

#[test]
fn curvature_residual_is_second_order() {
    let residual = |m: usize| {
        let mut mc = config(m, 1e-7, 1e-6);
        mc.modes.clear();
        let xi = GridFunction::from_fn(1, m, |x| 0.5 * (TAU * x[0]).sin()).unwrap();
        let traj = run_mcf_u(&mc, &xi, &NoisePath::silent(1e-7, 10), &Snapshots::Dense).unwrap();
        curvature_consistency(&traj).unwrap().max_residual
    };
    let ratio = residual(256) / residual(512);
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn stochastic_curve_stays_periodic() {
    let mut mc = config(128, 1.0, 0.01);
    let mut cfg = mc.solver_config().unwrap();
    mc.dt = cfg.auto_dt(2.0);
    cfg.dt = mc.dt;
    let xi = GridFunction::from_fn(1, 128, |x| 0.5 * (TAU * x[0]).sin()).unwrap();
    let traj = run_mcf_u(&mc, &xi, &path_for(&cfg, 2).unwrap(), &Snapshots::Every(20)).unwrap();
    let curve = reconstruct_curve(&traj, 0.0).unwrap();
    assert!(!curve.non_periodic);
    assert_eq!(curve.curves.len(), traj.snapshots.len());
}
