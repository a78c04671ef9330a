//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) and a
//! fixed-panel variant for table construction.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("quadrature did not converge on [{lower}, {upper}]: achieved error {achieved:e}, requested {requested:e}")]
pub struct QuadError {
    pub lower: f64,
    pub upper: f64,
    pub achieved: f64,
    pub requested: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) plus the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Single G7/K15 panel. Returns the Kronrod estimate and |K15 - G7|.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Composite K15 rule over `panels` equal sub-intervals, no error control.
pub fn gk15_composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * width;
            gk15(f, lo, lo + width).0
        })
        .sum()
}

const MAX_PANELS: usize = 4000;

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
/// Reversed limits flip the sign.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let (v0, e0) = gk15(&f, a, b);
    // Panels kept as (lo, hi, value, error); the worst one is bisected.
    let mut panels = vec![(a, b, v0, e0)];
    loop {
        let (total, err) = panels
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.2, e + p.3));
        if err <= tol {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS || !err.is_finite() {
            return Err(QuadError {
                lower: a,
                upper: b,
                achieved: err,
                requested: tol,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval exhausted at machine resolution.
            return Err(QuadError {
                lower: a,
                upper: b,
                achieved: err,
                requested: tol,
            });
        }
        let (vl, el) = gk15(&f, lo, mid);
        let (vr, er) = gk15(&f, mid, hi);
        panels.push((lo, mid, vl, el));
        panels.push((mid, hi, vr, er));
    }
}

/// Pairwise (cascade) summation; order-deterministic for a fixed input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-13).unwrap();
        assert!((v - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let f = |x: f64| x.cos();
        let a = integrate(f, 0.0, 1.0, 1e-12).unwrap();
        let b = integrate(f, 1.0, 0.0, 1e-12).unwrap();
        assert_eq!(a, -b);
        assert!((a - 1f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn kinked_integrand_converges() {
        let v = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-10).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn non_integrable_reports_error() {
        let err = integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-10).unwrap_err();
        assert!(!(err.achieved <= err.requested));
    }

    #[test]
    fn pairwise_sum_matches_naive_for_small_inputs() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }
}
