use std::f64::consts::{FRAC_PI_4, TAU};

use approx::assert_abs_diff_eq;
use gradnoise::coefficients::{
    check_assumption_sigma, sample_grid, Amplitude, Bounds, CoefficientSet, NoiseMode, Separable, SpatialProfile,
};

/// `cos(x)` with `x` in radians, as a profile on the unit torus.
fn cos_radians() -> SpatialProfile {
    SpatialProfile::cosine(1.0, 1.0 / TAU)
}

#[test]
fn a_for_sqrt_amplitude() {
    let set = CoefficientSet::single_mode(SpatialProfile::constant(1.0), Amplitude::Sqrt1pSq);
    let a = set.compute_a(&[0.0], 1.0).unwrap();
    assert_abs_diff_eq!(a[0][0], 0.25, epsilon = 1e-15);
}

#[test]
fn zero_noise_has_zero_corrections() {
    let set = CoefficientSet::zero(1);
    for r in [-3.0, 0.0, 2.5] {
        assert_eq!(set.compute_a(&[0.3], r).unwrap()[0][0], 0.0);
        assert_eq!(set.compute_b(&[0.3], r).unwrap()[0], 0.0);
    }
}

#[test]
fn linear_noise_has_constant_a() {
    let set = CoefficientSet::single_mode(SpatialProfile::constant(1.0), Amplitude::Linear);
    for (x, r) in [(0.1, -4.0), (0.7, 0.0), (0.5, 9.0)] {
        assert_abs_diff_eq!(set.compute_a(&[x], r).unwrap()[0][0], 0.5, epsilon = 1e-15);
    }
}

#[test]
fn b_for_cosine_profile() {
    let set = CoefficientSet::single_mode(cos_radians(), Amplitude::Sqrt1pSq);
    let b = set.compute_b(&[FRAC_PI_4], 1.0).unwrap();
    assert_abs_diff_eq!(b[0], -0.5, epsilon = 1e-12);
}

#[test]
fn b_vanishes_without_x_dependence() {
    let set = CoefficientSet::single_mode(SpatialProfile::constant(0.7), Amplitude::Square);
    for r in [-1.0, 0.5, 3.0] {
        assert_eq!(set.compute_b(&[0.2], r).unwrap()[0], 0.0);
    }
}

#[test]
fn f_is_minus_half_b_without_flux() {
    let set = CoefficientSet::single_mode(cos_radians(), Amplitude::Sqrt1pSq);
    let f = set.compute_f(&[FRAC_PI_4], 1.0).unwrap();
    assert_abs_diff_eq!(f[0], 0.25, epsilon = 1e-12);
    let b = set.compute_b(&[0.3], -2.0).unwrap();
    assert_abs_diff_eq!(set.compute_f(&[0.3], -2.0).unwrap()[0], -0.5 * b[0], epsilon = 1e-15);
}

#[test]
fn f_equals_flux_when_b_vanishes() {
    let set = CoefficientSet::single_mode(SpatialProfile::constant(1.0), Amplitude::Linear)
        .with_flux(vec![Separable::new(SpatialProfile::constant(1.0), Amplitude::Square)]);
    assert_abs_diff_eq!(set.compute_f(&[0.4], 2.0).unwrap()[0], 4.0, epsilon = 1e-15);
}

#[test]
fn sqrt_amplitude_respects_declared_bound() {
    let set = CoefficientSet::single_mode(SpatialProfile::constant(1.0), Amplitude::Sqrt1pSq).with_bounds(Bounds {
        n0: 2.0,
        ..Bounds::default()
    });
    let rep = check_assumption_sigma(&set, &sample_grid(1, 10.0, 101));
    assert!(rep.checks.iter().all(|c| !c.violated), "{rep:?}");
}

#[test]
fn square_amplitude_is_flagged() {
    let set = CoefficientSet::single_mode(SpatialProfile::constant(1.0), Amplitude::Square).with_bounds(Bounds {
        n0: 50.0,
        ..Bounds::default()
    });
    let rep = check_assumption_sigma(&set, &sample_grid(1, 100.0, 101));
    assert!(rep.checks.iter().any(|c| c.violated));
    assert!(!rep.passed);
}

#[test]
fn zero_noise_has_zero_suprema() {
    let rep = check_assumption_sigma(&CoefficientSet::zero(2), &sample_grid(2, 3.0, 11));
    assert!(rep.checks.iter().all(|c| c.observed == 0.0), "{rep:?}");
}

#[test]
fn two_dimensional_modes_are_accepted() {
    let comp = Separable::new(SpatialProfile::cosine(0.1, 1.0), Amplitude::One);
    let set = CoefficientSet::new(
        2,
        vec![NoiseMode {
            components: vec![comp, Separable::zero()],
        }],
        vec![Separable::zero(); 2],
    )
    .unwrap();
    assert_eq!(set.mode_count(), 1);
    assert!(set.compute_a(&[0.1, 0.2], 0.0).unwrap()[1][1] == 0.0);
}
