//! Smooth compactly supported bump and its running integrals.
//!
//! `bump` is `exp(-1/(1-y^2))` on `(-1, 1)`, normalized to unit mass. It is
//! used both as a symmetric mollifier and, shifted onto `(0, 1)`, as the
//! one-sided density behind the `eta_delta` entropies.

use std::sync::OnceLock;

use crate::quad::{gk15_composite, integrate};

fn raw(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

fn normalizer() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| integrate(raw, -1.0, 1.0, 1e-15).expect("bump is smooth"))
}

/// Unit-mass bump supported on `(-1, 1)`.
pub fn bump(y: f64) -> f64 {
    raw(y) / normalizer()
}

/// Unit-mass density on `(0, 1)`, bounded by 2 (peak value is about 1.66).
pub fn unit_density(s: f64) -> f64 {
    2.0 * bump(2.0 * s - 1.0)
}

const NODES: usize = 4096;

/// Tabulated `C(s) = int_0^s unit_density` and `E(s) = int_0^s C` on `[0, 1]`.
struct Cumulative {
    cdf: Vec<f64>,
    second: Vec<f64>,
}

fn cumulative() -> &'static Cumulative {
    static TABLE: OnceLock<Cumulative> = OnceLock::new();
    TABLE.get_or_init(|| {
        let step = 1.0 / NODES as f64;
        let mut cdf = vec![0.0; NODES + 1];
        for j in 0..NODES {
            let lo = j as f64 * step;
            cdf[j + 1] = cdf[j] + gk15_composite(&unit_density, lo, lo + step, 1);
        }
        // Remove the residual quadrature drift so C(1) = 1 exactly.
        let total = cdf[NODES];
        for c in cdf.iter_mut() {
            *c /= total;
        }
        let mut second = vec![0.0; NODES + 1];
        for j in 0..NODES {
            let lo = j as f64 * step;
            second[j + 1] = second[j] + gk15_composite(&|s| unit_cdf_interp(&cdf, s), lo, lo + step, 1);
        }
        Cumulative { cdf, second }
    })
}

fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, step: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * step * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * step * d1
}

fn unit_cdf_interp(cdf: &[f64], s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let step = 1.0 / NODES as f64;
    let x = s / step;
    let j = (x.floor() as usize).min(NODES - 1);
    let t = x - j as f64;
    let lo = j as f64 * step;
    hermite(cdf[j], cdf[j + 1], unit_density(lo), unit_density(lo + step), step, t)
}

/// `int_0^s unit_density`, clamped to `[0, 1]` outside the support.
pub fn unit_cdf(s: f64) -> f64 {
    unit_cdf_interp(&cumulative().cdf, s)
}

/// `int_0^s unit_cdf`; linear with slope 1 beyond `s = 1`.
pub fn unit_cdf_integral(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let table = cumulative();
    if s >= 1.0 {
        return table.second[NODES] + (s - 1.0);
    }
    let step = 1.0 / NODES as f64;
    let x = s / step;
    let j = (x.floor() as usize).min(NODES - 1);
    let t = x - j as f64;
    let lo = j as f64 * step;
    hermite(
        table.second[j],
        table.second[j + 1],
        unit_cdf(lo),
        unit_cdf(lo + step),
        step,
        t,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_has_unit_mass_and_compact_support() {
        let mass = integrate(bump, -1.0, 1.0, 1e-13).unwrap();
        assert!((mass - 1.0).abs() < 1e-12);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.5), 0.0);
    }

    #[test]
    fn unit_density_bounded_by_two() {
        let peak = (0..=1000)
            .map(|i| unit_density(i as f64 / 1000.0))
            .fold(0.0, f64::max);
        assert!(peak <= 2.0 && peak > 1.5);
    }

    #[test]
    fn cdf_matches_direct_quadrature() {
        for &s in &[0.1, 0.37, 0.5, 0.81, 0.999] {
            let direct = integrate(unit_density, 0.0, s, 1e-13).unwrap();
            assert!((unit_cdf(s) - direct).abs() < 1e-10, "s={s}");
        }
        assert_eq!(unit_cdf(1.0), 1.0);
        // Symmetric density: the second integral at 1 is 1/2.
        assert!((unit_cdf_integral(1.0) - 0.5).abs() < 1e-10);
    }
}
