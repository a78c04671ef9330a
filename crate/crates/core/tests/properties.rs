use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use gradnoise::analysis::{path_for, EnsembleStats, EntropyPair};
use gradnoise::coefficients::{Amplitude, CoefficientSet, SpatialProfile};
use gradnoise::grid::{l1_distance, GridFunction};
use gradnoise::noise::{refine, sample_path};
use gradnoise::nonlinearity::{mcf_regularize, regularize, Nonlinearity};
use gradnoise::solver::{run, SolverConfig, Snapshots};

fn trig(m: usize, c: [f64; 3]) -> GridFunction {
    GridFunction::from_fn(1, m, |x| c[0] + c[1] * (TAU * x[0]).cos() + c[2] * (2.0 * TAU * x[0]).sin()).unwrap()
}

fn amplitude() -> impl Strategy<Value = Amplitude> {
    prop_oneof![
        Just(Amplitude::One),
        Just(Amplitude::Linear),
        Just(Amplitude::Sqrt1pSq),
        Just(Amplitude::Square),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn l1_is_a_metric(a in prop::array::uniform3(-2.0..2.0f64), b in prop::array::uniform3(-2.0..2.0f64), c in prop::array::uniform3(-2.0..2.0f64)) {
        let (u, v, w) = (trig(64, a), trig(64, b), trig(64, c));
        let uv = l1_distance(&u, &v).unwrap();
        prop_assert_eq!(l1_distance(&u, &u).unwrap(), 0.0);
        prop_assert!(uv >= 0.0);
        prop_assert_eq!(uv, l1_distance(&v, &u).unwrap());
        prop_assert!(uv <= l1_distance(&u, &w).unwrap() + l1_distance(&w, &v).unwrap() + 1e-12);
    }

    #[test]
    fn entropy_is_convex_and_close_to_abs(delta in 0.01..1.0f64, r in -5.0..5.0f64, s in -5.0..5.0f64, t in 0.0..1.0f64) {
        let p = EntropyPair::new(delta).unwrap();
        prop_assert!(p.eta_second(r) >= 0.0);
        prop_assert!((p.eta(r) - r.abs()).abs() <= delta + 1e-12);
        let mid = t * r + (1.0 - t) * s;
        prop_assert!(p.eta(mid) <= t * p.eta(r) + (1.0 - t) * p.eta(s) + 1e-12);
        prop_assert!(p.eta_prime(r).abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn regularized_phi_is_odd_and_floored(n in 1u32..20, r in -30.0..30.0f64, exponent in 2.0..4.0f64) {
        let reg = regularize(&Nonlinearity::power_law(exponent, exponent).unwrap(), n).unwrap();
        prop_assert!((reg.phi(r) + reg.phi(-r)).abs() <= 1e-12 * reg.phi(r).abs().max(1.0));
        prop_assert!(reg.a_frak(r) >= 2.0 / n as f64);
    }

    #[test]
    fn curvature_regularization_is_coercive(n in 1u32..64, r in -200.0..200.0f64) {
        let reg = mcf_regularize(n).unwrap();
        prop_assert!(2.0 * (1.0 + r.abs()) * reg.a_frak(r) >= 1.0);
        prop_assert!((reg.phi(r) + reg.phi(-r)).abs() <= 1e-12);
    }

    #[test]
    fn refinement_preserves_pair_sums(seed in any::<u64>(), modes in 1usize..4, steps in 1usize..64, dt in 1e-6..1e-2f64) {
        let p = sample_path(seed, modes, dt, steps).unwrap();
        let fine = refine(&refine(&p));
        let back = fine.coarsen().coarsen();
        prop_assert_eq!(back.increments(), p.increments());
    }

    #[test]
    fn ito_terms_follow_their_definitions(
        amp in amplitude(),
        flux_amp in amplitude(),
        scale in 0.05..0.5f64,
        x in 0.0..1.0f64,
        r in -3.0..3.0f64,
    ) {
        let set = CoefficientSet::single_mode(SpatialProfile::cosine(scale, 1.0), amp)
            .with_flux(vec![gradnoise::coefficients::Separable::new(SpatialProfile::cosine(0.3, 2.0), flux_amp)]);
        let p = set.ito(&[x], r);
        let sr = set.sigma_r(0, 0, &[x], r);
        let sx = set.sigma_x(0, 0, 0, &[x], r);
        let g = set.flux_value(0, &[x], r);
        prop_assert!((p.a[0][0] - 0.5 * sr * sr).abs() <= 1e-12);
        prop_assert!((p.b[0] - sr * sx).abs() <= 1e-12);
        prop_assert!((p.f[0] - (g - 0.5 * p.b[0])).abs() <= 1e-12);
        prop_assert!((p.drift_flux[0] - (g + 0.5 * p.b[0])).abs() <= 1e-12);
    }

    /// The Ito correction `1/2 d_x(sigma_r d_x[sigma(x, u(x))])` equals
    /// `d_x(a u_x + b/2)` for smooth `u`.
    #[test]
    fn stratonovich_correction_matches_ito_drift(
        amp in amplitude(),
        scale in 0.05..0.5f64,
        c in prop::array::uniform3(-1.0..1.0f64),
        x in 0.0..1.0f64,
    ) {
        let set = CoefficientSet::single_mode(SpatialProfile::cosine(scale, 1.0), amp);
        let u = |x: f64| c[0] + c[1] * (TAU * x).cos() + c[2] * (2.0 * TAU * x).sin();
        let du = |x: f64| -TAU * c[1] * (TAU * x).sin() + 2.0 * TAU * c[2] * (2.0 * TAU * x).cos();
        let e = 1e-4;
        let inner = |y: f64| {
            let dsigma = (set.sigma(0, 0, &[y + e], u(y + e)) - set.sigma(0, 0, &[y - e], u(y - e))) / (2.0 * e);
            0.5 * set.sigma_r(0, 0, &[y], u(y)) * dsigma
        };
        let strat = (inner(x + e) - inner(x - e)) / (2.0 * e);
        let ito_flux = |y: f64| {
            let p = set.ito(&[y], u(y));
            p.a[0][0] * du(y) + 0.5 * p.b[0]
        };
        let ito = (ito_flux(x + e) - ito_flux(x - e)) / (2.0 * e);
        prop_assert!((strat - ito).abs() <= 1e-4 * (1.0 + ito.abs()), "{} vs {}", strat, ito);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stochastic_runs_conserve_mass(seed in any::<u64>(), c in prop::array::uniform3(-1.0..1.0f64)) {
        let m = 48;
        let coeffs = CoefficientSet::single_mode(SpatialProfile::cosine(0.2, 1.0), Amplitude::Sqrt1pSq);
        let nl = regularize(&Nonlinearity::power_law(2.0, 2.0).unwrap(), 4).unwrap();
        let mut cfg = SolverConfig::new(nl, coeffs, m, 1.0, 0.005);
        cfg.dt = cfg.auto_dt(3.0);
        cfg.diagnostics = true;
        let traj = run(&trig(m, c), &cfg, &path_for(&cfg, seed).unwrap(), &Snapshots::Final).unwrap();
        let (per_step, whole) = traj.mass_defects().unwrap();
        prop_assert!(per_step <= 1e-12 * m as f64);
        prop_assert!(whole <= 1e-9);
    }
}

#[test]
fn confidence_half_width_halves_with_four_times_the_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut draw = |n: usize| -> Vec<Vec<f64>> {
        (0..n).map(|_| vec![StandardNormal.sample(&mut rng)]).collect()
    };
    let small = EnsembleStats::from_samples(&draw(400));
    let large = EnsembleStats::from_samples(&draw(1600));
    let ratio = small.half_width[0] / large.half_width[0];
    assert!((ratio - 2.0).abs() <= 0.6, "{ratio}");
}
