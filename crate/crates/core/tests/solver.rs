use std::f64::consts::TAU;

use gradnoise::analysis::path_for;
use gradnoise::coefficients::{Amplitude, CoefficientSet, SpatialProfile};
use gradnoise::grid::{l1_distance, truncate_initial, GridFunction};
use gradnoise::noise::NoisePath;
use gradnoise::nonlinearity::{regularize, Nonlinearity};
use gradnoise::solver::{run, run_coupled, step, SolverConfig, SolverError, Snapshots};

fn pme(n: u32) -> gradnoise::nonlinearity::RegularizedNonlinearity {
    regularize(&Nonlinearity::power_law(2.0, 2.0).unwrap(), n).unwrap()
}

fn noisy(m: usize, t: f64) -> SolverConfig {
    let coeffs = CoefficientSet::single_mode(SpatialProfile::cosine(0.2, 1.0), Amplitude::Sqrt1pSq);
    let mut cfg = SolverConfig::new(pme(4), coeffs, m, 1.0, t);
    cfg.dt = cfg.auto_dt(2.0);
    cfg
}

#[test]
fn truncation_examples() {
    let five = GridFunction::constant(1, 8, 5.0).unwrap();
    assert!(truncate_initial(&five, 3.0).values().iter().all(|&v| v == 3.0));
    let small = GridFunction::from_fn(1, 16, |x| 0.5 * (TAU * x[0]).cos()).unwrap();
    assert_eq!(truncate_initial(&small, 1.0), small);
    let big = GridFunction::from_fn(1, 64, |x| 10.0 * (TAU * x[0]).sin()).unwrap();
    let t = truncate_initial(&big, 2.0);
    for (a, b) in big.values().iter().zip(t.values()) {
        assert!(b.abs() <= 2.0);
        if a.abs() <= 2.0 {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn heat_step_keeps_constants() {
    let cfg = SolverConfig::new(regularize(&Nonlinearity::linear(), 2).unwrap(), CoefficientSet::zero(1), 32, 1e-4, 1e-3);
    let u = GridFunction::constant(1, 32, 1.7).unwrap();
    let next = step(&u, &cfg, &[]).unwrap();
    assert!(next.values().iter().all(|&v| (v - 1.7).abs() < 1e-15));
}

#[test]
fn deterministic_bump_conserves_mass() {
    let m = 128;
    let mut cfg = SolverConfig::new(pme(8), CoefficientSet::zero(1), m, 1.0, 0.02);
    cfg.dt = cfg.auto_dt(2.0);
    cfg.diagnostics = true;
    let xi = GridFunction::from_fn(1, m, |x| (1.0 - ((x[0] - 0.5) / 0.2).powi(2)).max(0.0)).unwrap();
    let traj = run(&xi, &cfg, &NoisePath::silent(cfg.dt, cfg.steps().unwrap()), &Snapshots::Final).unwrap();
    let m0 = traj.diagnostics[0].mass;
    assert!(traj.diagnostics.iter().all(|d| (d.mass - m0).abs() <= 1e-12));
}

#[test]
fn same_seed_gives_identical_trajectories() {
    let cfg = noisy(64, 0.01);
    let xi = GridFunction::from_fn(1, 64, |x| (TAU * x[0]).cos()).unwrap();
    let snaps = Snapshots::Every(50);
    let a = run(&xi, &cfg, &path_for(&cfg, 9).unwrap(), &snaps).unwrap();
    let b = run(&xi, &cfg, &path_for(&cfg, 9).unwrap(), &snaps).unwrap();
    assert_eq!(a, b);
}

#[test]
fn coupled_equal_data_stay_equal() {
    let cfg = noisy(64, 0.01);
    let xi = GridFunction::from_fn(1, 64, |x| (TAU * x[0]).cos()).unwrap();
    let (a, b) = run_coupled(&xi, &xi, &cfg, &path_for(&cfg, 1).unwrap(), &Snapshots::Final).unwrap();
    assert_eq!(a.snapshots, b.snapshots);
}

#[test]
fn zero_is_a_fixed_point_without_noise() {
    let mut cfg = noisy(32, 0.01);
    cfg.coeffs = CoefficientSet::zero(1);
    let zero = GridFunction::constant(1, 32, 0.0).unwrap();
    let traj = run(&zero, &cfg, &path_for(&cfg, 0).unwrap(), &Snapshots::Final).unwrap();
    assert!(traj.last().values().iter().all(|&v| v == 0.0));
}

#[test]
fn ordered_data_contract_without_noise() {
    let m = 64;
    let mut cfg = noisy(m, 0.02);
    cfg.coeffs = CoefficientSet::zero(1);
    let lo = GridFunction::from_fn(1, m, |x| (TAU * x[0]).cos()).unwrap();
    let hi = lo.map(|v| v + 0.25);
    let (a, b) = run_coupled(&hi, &lo, &cfg, &path_for(&cfg, 0).unwrap(), &Snapshots::Final).unwrap();
    let d = l1_distance(a.last(), b.last()).unwrap();
    // order is preserved, so the distance equals the conserved mass gap
    assert!((d - 0.25).abs() < 1e-12, "{d}");
}

#[test]
fn explicit_dt_above_budget_is_rejected() {
    let mut cfg = noisy(128, 0.01);
    cfg.dt = 10.0 * cfg.cfl_budget(2.0);
    cfg.t_final = 4.0 * cfg.dt;
    let xi = GridFunction::from_fn(1, 128, |x| (TAU * x[0]).cos()).unwrap();
    let err = run(&xi, &cfg, &path_for(&cfg, 0).unwrap(), &Snapshots::Final).unwrap_err();
    assert!(matches!(err, SolverError::Cfl { .. }), "{err:?}");
}

#[test]
fn two_dimensional_run_conserves_mass() {
    let m = 32;
    let coeffs = CoefficientSet::new(
        2,
        vec![gradnoise::coefficients::NoiseMode {
            components: vec![
                gradnoise::coefficients::Separable::new(SpatialProfile::cosine(0.2, 1.0), Amplitude::Sqrt1pSq),
                gradnoise::coefficients::Separable::zero(),
            ],
        }],
        vec![gradnoise::coefficients::Separable::zero(); 2],
    )
    .unwrap();
    let mut cfg = SolverConfig::new(pme(4), coeffs, m, 1.0, 0.005);
    cfg.dt = cfg.auto_dt(2.0);
    cfg.diagnostics = true;
    let xi = GridFunction::from_fn(2, m, |x| (TAU * x[0]).cos() * (TAU * x[1]).sin()).unwrap();
    let traj = run(&xi, &cfg, &path_for(&cfg, 5).unwrap(), &Snapshots::Final).unwrap();
    let (per_step, whole) = traj.mass_defects().unwrap();
    assert!(per_step <= 1e-12 * (m * m) as f64 && whole <= 1e-9, "{per_step} {whole}");
}
