use std::f64::consts::{PI, TAU};

use gradnoise::analysis::{
    contraction_experiment, entropy_residual, frac_regularity_check, initial_time_continuity, moment_experiment,
    path_for, r_lambda_pair, EntropyPair, TestFunction,
};
use gradnoise::coefficients::{Amplitude, CoefficientSet, SpatialProfile};
use gradnoise::grid::{l1_distance, GridFunction};
use gradnoise::noise::NoisePath;
use gradnoise::quad::integrate;
use gradnoise::nonlinearity::{regularize, Nonlinearity};
use gradnoise::solver::{run, SolverConfig, Snapshots};

fn heat_cfg(m: usize, dt: f64, t: f64) -> SolverConfig {
    SolverConfig::new(regularize(&Nonlinearity::linear(), 2).unwrap(), CoefficientSet::zero(1), m, dt, t)
}

#[test]
fn l1_distance_examples() {
    let m = 256;
    let zero = GridFunction::constant(1, m, 0.0).unwrap();
    let one = GridFunction::constant(1, m, 1.0).unwrap();
    let s = GridFunction::from_fn(1, m, |x| (TAU * x[0]).sin()).unwrap();
    assert_eq!(l1_distance(&s, &s).unwrap(), 0.0);
    assert!((l1_distance(&one, &zero).unwrap() - 1.0).abs() < 1e-15);
    assert!((l1_distance(&s, &zero).unwrap() - 2.0 / PI).abs() < 1e-4);
}

#[test]
fn contraction_of_equal_data_is_zero() {
    let coeffs = CoefficientSet::single_mode(SpatialProfile::cosine(0.2, 1.0), Amplitude::Sqrt1pSq);
    let mut cfg = SolverConfig::new(regularize(&Nonlinearity::power_law(2.0, 2.0).unwrap(), 4).unwrap(), coeffs, 32, 1.0, 0.01);
    cfg.dt = cfg.auto_dt(2.0);
    let xi = GridFunction::from_fn(1, 32, |x| (TAU * x[0]).cos()).unwrap();
    let rep = contraction_experiment(&xi, &xi, &cfg, &[0, 1, 2, 3], 5, 5.0).unwrap();
    assert!(rep.ratio.iter().all(|&r| r == 0.0), "{:?}", rep.ratio);
    assert!(rep.passed);
}

#[test]
fn heat_energy_never_exceeds_initial() {
    let cfg = heat_cfg(64, 1e-4, 0.05);
    let xi = GridFunction::from_fn(1, 64, |x| (TAU * x[0]).cos()).unwrap();
    let rep = moment_experiment(&xi, &cfg, &[0, 1], 2.0).unwrap();
    assert!(rep.energy_ratio <= 1.0, "{rep:?}");
}

#[test]
fn entropy_residual_of_zero_solution() {
    let coeffs = CoefficientSet::single_mode(SpatialProfile::cosine(0.2, 1.0), Amplitude::Linear);
    let cfg = SolverConfig::new(regularize(&Nonlinearity::power_law(2.0, 2.0).unwrap(), 4).unwrap(), coeffs, 32, 1e-4, 0.01);
    let xi = GridFunction::constant(1, 32, 0.0).unwrap();
    let path = path_for(&cfg, 3).unwrap();
    let traj = run(&xi, &cfg, &path, &Snapshots::Dense).unwrap();
    let r = entropy_residual(&cfg, &xi, &traj, &path, &EntropyPair::new(0.1).unwrap(), &TestFunction::new(0.01)).unwrap();
    assert_eq!(r.residual, 0.0);
}

#[test]
fn entropy_residual_rejects_sparse_snapshots() {
    let cfg = heat_cfg(32, 1e-4, 0.01);
    let xi = GridFunction::constant(1, 32, 0.5).unwrap();
    let path = NoisePath::silent(1e-4, 100);
    let traj = run(&xi, &cfg, &path, &Snapshots::Final).unwrap();
    assert!(entropy_residual(&cfg, &xi, &traj, &path, &EntropyPair::new(0.1).unwrap(), &TestFunction::new(0.01)).is_err());
}

#[test]
fn deterministic_entropy_residual_is_small() {
    let m = 128;
    let dt = 6.25e-6;
    let cfg = SolverConfig::new(regularize(&Nonlinearity::power_law(2.0, 2.0).unwrap(), 4).unwrap(), CoefficientSet::zero(1), m, dt, 0.05);
    let xi = GridFunction::from_fn(1, m, |x| 0.8 * (TAU * x[0]).cos()).unwrap();
    let path = NoisePath::silent(dt, cfg.steps().unwrap());
    let traj = run(&xi, &cfg, &path, &Snapshots::Dense).unwrap();
    let r = entropy_residual(&cfg, &xi, &traj, &path, &EntropyPair::new(0.05).unwrap(), &TestFunction::new(0.05)).unwrap();
    assert!(r.residual.abs() <= 1e-6, "{r:?}");
}

#[test]
fn constant_solution_has_zero_modulus() {
    let cfg = heat_cfg(64, 1e-4, 0.01);
    let xi = GridFunction::constant(1, 64, 0.3).unwrap();
    let traj = run(&xi, &cfg, &NoisePath::silent(1e-4, 100), &Snapshots::Every(10)).unwrap();
    let h = 1.0 / 64.0;
    let rep = frac_regularity_check(&[traj], &cfg.nonlinearity, &[2.0 * h, 4.0 * h]).unwrap();
    assert!(rep.modulus.iter().all(|&v| v.abs() < 1e-15), "{rep:?}");
}

#[test]
fn equal_regularizations_have_unbounded_radius() {
    let nl = regularize(&Nonlinearity::power_law(2.0, 2.0).unwrap(), 4).unwrap();
    assert_eq!(r_lambda_pair(&nl, &nl, 0.5), None);
}

#[test]
fn fixed_point_has_zero_initial_drift() {
    let cfg = heat_cfg(32, 1e-5, 0.01);
    let xi = GridFunction::constant(1, 32, 0.7).unwrap();
    let traj = run(&xi, &cfg, &NoisePath::silent(1e-5, 1000), &Snapshots::Dense).unwrap();
    let rep = initial_time_continuity(&[traj], &xi).unwrap();
    assert!(rep.g.iter().all(|&g| g.abs() < 1e-20), "{rep:?}");
}

#[test]
fn heat_initial_drift_matches_closed_form() {
    let cfg = heat_cfg(64, 1e-5, 0.01);
    let xi = GridFunction::from_fn(1, 64, |x| (TAU * x[0]).cos()).unwrap();
    let traj = run(&xi, &cfg, &NoisePath::silent(1e-5, 1000), &Snapshots::Dense).unwrap();
    let rep = initial_time_continuity(&[traj], &xi).unwrap();
    // ||heat(t) cos - cos||^2 = (1 - exp(-4 pi^2 t))^2 / 2, so g(h) ~ h^2
    let c = TAU * TAU;
    for (h, g) in rep.hs.iter().zip(&rep.g) {
        let exact = integrate(|t| 0.5 * (1.0 - (-c * t).exp()).powi(2), 0.0, *h, 1e-14).unwrap() / h;
        assert!((g / exact - 1.0).abs() < 0.02, "h {h}: {g} vs {exact}");
    }
    assert!(rep.passed);
}
