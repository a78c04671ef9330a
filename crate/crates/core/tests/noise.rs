use gradnoise::noise::{refine, sample_path, NoisePath};

#[test]
fn no_modes_gives_empty_increments() {
    let p = sample_path(3, 0, 0.01, 100).unwrap();
    assert!(p.increments().is_empty());
    assert_eq!(p.modes(), 0);
}

#[test]
fn same_seed_same_path() {
    let a = sample_path(42, 2, 1e-3, 500).unwrap();
    let b = sample_path(42, 2, 1e-3, 500).unwrap();
    assert_eq!(a.increments(), b.increments());
    let c = sample_path(43, 2, 1e-3, 500).unwrap();
    assert_ne!(a.increments(), c.increments());
}

#[test]
fn increment_variance_matches_dt() {
    let p = sample_path(7, 1, 0.01, 10_000).unwrap();
    let x: Vec<f64> = p.mode(0).collect();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
    assert!((0.0097..=0.0103).contains(&var), "variance {var}");
}

#[test]
fn refined_pairs_sum_to_parent() {
    let p = sample_path(11, 3, 4e-4, 64).unwrap();
    let fine = refine(&p);
    assert_eq!(fine.steps(), 2 * p.steps());
    assert_eq!(fine.dt(), p.dt() / 2.0);
    for s in 0..p.steps() {
        for k in 0..3 {
            assert_eq!(fine.step(2 * s)[k] + fine.step(2 * s + 1)[k], p.step(s)[k]);
        }
    }
    assert_eq!(fine.coarsen().increments(), p.increments());
}

#[test]
fn silent_path_is_all_zero() {
    let p = NoisePath::silent(0.1, 5);
    assert_eq!(p.steps(), 5);
    assert!(p.increments().iter().all(|&v| v == 0.0));
}

#[test]
fn modes_are_uncorrelated() {
    let steps = 10_000;
    let p = sample_path(11, 3, 1e-3, steps).unwrap();
    let col = |k: usize| -> Vec<f64> { p.increments().chunks(3).map(|row| row[k]).collect() };
    let cols = [col(0), col(1), col(2)];
    for i in 0..3 {
        for j in i + 1..3 {
            let rho = statrs::statistics::Statistics::covariance(&cols[i][..], &cols[j][..])
                / (statrs::statistics::Statistics::variance(&cols[i][..]) * statrs::statistics::Statistics::variance(&cols[j][..])).sqrt();
            assert!(rho.abs() <= 0.05, "modes {i},{j}: {rho}");
        }
    }
}

#[test]
fn scaled_increments_pass_ks() {
    use statrs::distribution::{ContinuousCDF, Normal};
    let dt = 4e-4;
    for p in [sample_path(5, 1, dt, 10_000).unwrap(), refine(&sample_path(6, 1, 2.0 * dt, 5_000).unwrap())] {
        let mut z: Vec<f64> = p.increments().iter().map(|v| v / dt.sqrt()).collect();
        z.sort_by(f64::total_cmp);
        let n = z.len() as f64;
        let std = Normal::standard();
        let d = z
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = std.cdf(x);
                (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
            })
            .fold(0.0, f64::max);
        // asymptotic 1% critical value
        assert!(d <= 1.628 / n.sqrt(), "{d}");
    }
}
