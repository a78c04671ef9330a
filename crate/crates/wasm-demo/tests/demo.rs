use gradnoise_wasm::{mcf_frames, pme_frames, regularization_samples};

#[test]
fn pme_frames_keep_mass_and_shape() {
    let m = 32;
    let out = pme_frames(m, 2.0, 4, 0.2, 0.01, 3, 4).unwrap();
    assert_eq!(out.len() % m, 0);
    let rows: Vec<&[f64]> = out.chunks(m).collect();
    assert!(rows.len() >= 2);
    let mass = |r: &[f64]| r.iter().sum::<f64>() / m as f64;
    for r in &rows {
        assert!((mass(r) - mass(rows[0])).abs() <= 1e-12);
    }
}

#[test]
fn pme_frames_are_seeded() {
    let a = pme_frames(16, 2.0, 2, 0.2, 0.005, 9, 2).unwrap();
    assert_eq!(a, pme_frames(16, 2.0, 2, 0.2, 0.005, 9, 2).unwrap());
    assert_ne!(a, pme_frames(16, 2.0, 2, 0.2, 0.005, 10, 2).unwrap());
}

#[test]
fn mcf_frames_start_from_the_sine_graph() {
    let m = 64;
    let out = mcf_frames(m, 0.05, 8, 0.002, 1, 3).unwrap();
    let h = 1.0 / m as f64;
    for (i, v) in out[..m].iter().enumerate() {
        let x = (i as f64 + 0.5) * h;
        assert!((v - 0.1 * (std::f64::consts::TAU * x).sin()).abs() <= 2e-3, "{i}: {v}");
    }
    let last = &out[out.len() - m..];
    let amp = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(amp(last) < amp(&out[..m]));
}

#[test]
fn profile_is_floored_and_matches_inside() {
    let n = 4;
    let out = regularization_samples(2.0, n, 3.0, 61).unwrap();
    let (rs, rest) = out.split_at(61);
    let (a, a_n) = rest.split_at(61);
    for i in 0..61 {
        assert!(a_n[i] >= 2.0 / n as f64);
        if rs[i].abs() <= n as f64 {
            assert!((a[i] - a_n[i]).abs() <= 4.0 / n as f64);
        }
    }
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(pme_frames(4, 2.0, 2, 0.2, 0.01, 0, 2).is_err());
    assert!(pme_frames(32, 0.5, 2, 0.2, 0.01, 0, 2).is_err());
    assert!(pme_frames(512, 2.0, 64, 0.2, 10.0, 0, 2).is_err());
    assert!(regularization_samples(2.0, 2, 1.0, 1).is_err());
}
