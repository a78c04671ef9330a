//! Diffusion nonlinearities `Phi`, their square-root derivative
//! `a(r) = sqrt(Phi'(r))`, the structural predicates they must satisfy, and
//! the smooth non-degenerate approximations used by the solver.

mod regularized;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{integrate, QuadError};

pub use regularized::{mcf_regularize, regularize, RegularizedNonlinearity};

#[derive(Debug, Error)]
pub enum NonlinearityError {
    #[error("exponent m = {0} is not in the slow-diffusion range m > 1")]
    Exponent(f64),
    #[error("structure constant K = {0} must be >= 1")]
    Constant(f64),
    #[error("regularization index must be >= 1, got {0}")]
    Index(u32),
    #[error("family does not satisfy the structural predicates: {0}")]
    Structure(String),
    #[error("regularized construction violates `{bound}`: worst margin {margin:e}")]
    Construction { bound: String, margin: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Absolute tolerance for `[g](r)` quadrature.
pub const BRACKET_TOL: f64 = 1e-10;

/// `[g](r) = int_0^r g(s) ds`, with `int_0^r = -int_r^0` for negative `r`.
pub fn bracket<G: Fn(f64) -> f64>(g: G, r: f64) -> Result<f64, QuadError> {
    integrate(g, 0.0, r, BRACKET_TOL)
}

/// A family of approximations indexed by `n`: either the mollified
/// floor-and-clamp of a base nonlinearity or the curve-shortening family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Base(Nonlinearity),
    Curvature,
}

impl Family {
    pub fn regularize(&self, n: u32) -> Result<RegularizedNonlinearity, NonlinearityError> {
        match self {
            Family::Base(fam) => regularize(fam, n),
            Family::Curvature => mcf_regularize(n),
        }
    }

    /// Exponent `m` of the limit nonlinearity.
    pub fn exponent(&self) -> f64 {
        match self {
            Family::Base(fam) => fam.exponent(),
            Family::Curvature => 1.0,
        }
    }
}

/// A named diffusion nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `Phi(r) = |r|^(m-1) r`, `m > 1`.
    PowerLaw { m: f64, k: f64 },
    /// `Phi(r) = arctan(r)`; the curve-shortening limit. Exponent is taken as 1.
    Arctan { k: f64 },
    /// `Phi(r) = r`; the heat equation. Exponent is taken as 1.
    Linear { k: f64 },
}

impl Nonlinearity {
    pub fn power_law(m: f64, k: f64) -> Result<Self, NonlinearityError> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(NonlinearityError::Exponent(m));
        }
        if !(k >= 1.0) {
            return Err(NonlinearityError::Constant(k));
        }
        Ok(Nonlinearity::PowerLaw { m, k })
    }

    pub fn arctan(k: f64) -> Result<Self, NonlinearityError> {
        if !(k >= 1.0) {
            return Err(NonlinearityError::Constant(k));
        }
        Ok(Nonlinearity::Arctan { k })
    }

    pub fn linear() -> Self {
        Nonlinearity::Linear { k: 1.0 }
    }

    pub fn exponent(&self) -> f64 {
        match *self {
            Nonlinearity::PowerLaw { m, .. } => m,
            Nonlinearity::Arctan { .. } | Nonlinearity::Linear { .. } => 1.0,
        }
    }

    pub fn constant(&self) -> f64 {
        match *self {
            Nonlinearity::PowerLaw { k, .. }
            | Nonlinearity::Arctan { k }
            | Nonlinearity::Linear { k } => k,
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        match *self {
            Nonlinearity::PowerLaw { m, .. } => r.abs().powf(m - 1.0) * r,
            Nonlinearity::Arctan { .. } => r.atan(),
            Nonlinearity::Linear { .. } => r,
        }
    }

    pub fn a_frak(&self, r: f64) -> f64 {
        match *self {
            Nonlinearity::PowerLaw { m, .. } => m.sqrt() * r.abs().powf(0.5 * (m - 1.0)),
            Nonlinearity::Arctan { .. } => 1.0 / (1.0 + r * r).sqrt(),
            Nonlinearity::Linear { .. } => 1.0,
        }
    }

    /// Derivative of `a`, defined away from the origin.
    pub fn a_frak_prime(&self, r: f64) -> f64 {
        match *self {
            Nonlinearity::PowerLaw { m, .. } => {
                0.5 * (m - 1.0) * m.sqrt() * r.abs().powf(0.5 * (m - 3.0)) * r.signum()
            }
            Nonlinearity::Arctan { .. } => -r * (1.0 + r * r).powf(-1.5),
            Nonlinearity::Linear { .. } => 0.0,
        }
    }

    /// `[a](r)`, closed form where available.
    pub fn bracket_a(&self, r: f64) -> f64 {
        match *self {
            Nonlinearity::PowerLaw { m, .. } => {
                let e = 0.5 * (m + 1.0);
                m.sqrt() / e * r.abs().powf(e) * r.signum()
            }
            Nonlinearity::Arctan { .. } => r.asinh(),
            Nonlinearity::Linear { .. } => r,
        }
    }
}

/// Outcome of one sampled predicate: the smallest observed slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredicateCheck {
    pub name: String,
    pub worst_margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub exponent: f64,
    pub constant: f64,
    pub checks: Vec<PredicateCheck>,
    pub passed: bool,
}

impl StructureReport {
    pub fn check(&self, name: &str) -> Option<&PredicateCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn first_failure(&self) -> Option<&PredicateCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Slack allowed for roundoff in sampled comparisons.
const MARGIN_TOL: f64 = 1e-12;

/// Sampled evaluation of the structural predicates on `a`:
///
/// * `|a(0)| <= K`
/// * `|a'(r)| <= K |r|^((m-3)/2)` for `r > 0`
/// * `K a(r) >= 1` for `|r| >= 1`
/// * `K |[a](r) - [a](z)| >= |r - z|` if `|r| v |z| >= 1`,
///   `>= |r - z|^((m+1)/2)` otherwise, on all grid pairs.
pub(crate) fn check_profile(
    a: impl Fn(f64) -> f64,
    a_prime: impl Fn(f64) -> f64,
    bracket_values: &[f64],
    grid: &[f64],
    m: f64,
    k: f64,
) -> StructureReport {
    let mut checks = Vec::with_capacity(4);
    let mut push = |name: &str, worst: f64| {
        checks.push(PredicateCheck {
            name: name.to_string(),
            worst_margin: worst,
            passed: worst >= -MARGIN_TOL,
        });
    };

    push("a_at_zero", k - a(0.0).abs());

    let derivative = grid
        .iter()
        .filter(|&&r| r > 0.0)
        .map(|&r| k * r.powf(0.5 * (m - 3.0)) - a_prime(r).abs())
        .fold(f64::INFINITY, f64::min);
    push("a_prime_growth", derivative);

    let lower = grid
        .iter()
        .filter(|&&r| r.abs() >= 1.0)
        .map(|&r| k * a(r) - 1.0)
        .fold(f64::INFINITY, f64::min);
    push("a_lower_bound", lower);

    let mut pair = f64::INFINITY;
    for (i, &r) in grid.iter().enumerate() {
        for (j, &z) in grid.iter().enumerate().skip(i + 1) {
            let gap = (r - z).abs();
            let rhs = if r.abs().max(z.abs()) >= 1.0 {
                gap
            } else {
                gap.powf(0.5 * (m + 1.0))
            };
            let lhs = k * (bracket_values[i] - bracket_values[j]).abs();
            // Relative slack: both sides vanish as the pair collapses.
            pair = pair.min((lhs - rhs) / rhs.max(f64::MIN_POSITIVE));
        }
    }
    push("bracket_lower_bound", pair);

    let passed = checks.iter().all(|c| c.passed);
    StructureReport {
        exponent: m,
        constant: k,
        checks,
        passed,
    }
}

/// Checks the structural predicates for `fam` on `grid` (which should
/// straddle `+-1`). `[a]` is computed by quadrature, independently of the
/// closed form.
pub fn check_assumption_a(fam: &Nonlinearity, grid: &[f64]) -> Result<StructureReport, QuadError> {
    let brackets = grid
        .iter()
        .map(|&r| bracket(|s| fam.a_frak(s), r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(check_profile(
        |r| fam.a_frak(r),
        |r| fam.a_frak_prime(r),
        &brackets,
        grid,
        fam.exponent(),
        fam.constant(),
    ))
}

/// Symmetric sampling grid on `[-range, range]` with `points` nodes, also
/// containing `+-1` and `0`.
pub fn symmetric_grid(range: f64, points: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..points)
        .map(|i| -range + 2.0 * range * i as f64 / (points - 1).max(1) as f64)
        .collect();
    for extra in [-1.0f64, 0.0, 1.0] {
        if extra.abs() <= range {
            grid.push(extra);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_values() {
        let f = Nonlinearity::power_law(2.0, 1.0).unwrap();
        assert_eq!(f.phi(1.0), 1.0);
        assert!((f.a_frak(1.0) - 2f64.sqrt()).abs() < 1e-15);
        let g = Nonlinearity::power_law(3.0, 1.0).unwrap();
        assert_eq!(g.phi(-2.0), -8.0);
    }

    #[test]
    fn power_law_rejects_fast_diffusion() {
        assert!(matches!(
            Nonlinearity::power_law(1.0, 1.0),
            Err(NonlinearityError::Exponent(_))
        ));
        assert!(Nonlinearity::power_law(0.5, 1.0).is_err());
        assert!(Nonlinearity::power_law(2.0, 0.5).is_err());
    }

    #[test]
    fn a_prime_bound_for_m2_with_k1() {
        // |a'(r)| = (sqrt2/2) r^{-1/2} against K r^{-1/2}: ratio sqrt2/2 on the grid.
        let f = Nonlinearity::power_law(2.0, 1.0).unwrap();
        let worst = (1..=10_000)
            .map(|i| i as f64 * 1e-3)
            .map(|r| f.a_frak_prime(r).abs() / r.powf(-0.5))
            .fold(0.0, f64::max);
        assert!((worst - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(worst <= 1.0);
    }

    #[test]
    fn bracket_examples() {
        assert!((bracket(|_| 1.0, 2.0).unwrap() - 2.0).abs() < 1e-14);
        let v = bracket(|s| 1.0 / (1.0 + s * s).sqrt(), 1.0).unwrap();
        assert!((v - 1f64.asinh()).abs() < 1e-10);
        assert!((v - 0.881_373_587).abs() < 1e-8);
        assert_eq!(bracket(|s| s.exp(), 0.0).unwrap(), 0.0);
        let neg = bracket(|s| s * s, -1.0).unwrap();
        assert!((neg + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn assumption_a_power_law_passes() {
        let f = Nonlinearity::power_law(2.0, 2.0).unwrap();
        let report = check_assumption_a(&f, &symmetric_grid(5.0, 101)).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn assumption_a_arctan_fails_lower_bound() {
        let f = Nonlinearity::arctan(2.0).unwrap();
        let report = check_assumption_a(&f, &symmetric_grid(10.0, 81)).unwrap();
        assert!(!report.passed);
        assert!(!report.check("a_lower_bound").unwrap().passed);
    }

    #[test]
    fn assumption_a_linear_passes() {
        let report = check_assumption_a(&Nonlinearity::linear(), &symmetric_grid(5.0, 61)).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn closed_form_bracket_matches_quadrature() {
        for fam in [
            Nonlinearity::power_law(2.0, 1.0).unwrap(),
            Nonlinearity::power_law(3.0, 1.0).unwrap(),
            Nonlinearity::arctan(1.0).unwrap(),
        ] {
            for &r in &[-2.5, -0.3, 0.7, 4.0] {
                let q = bracket(|s| fam.a_frak(s), r).unwrap();
                assert!((q - fam.bracket_a(r)).abs() < 1e-9, "{fam:?} r={r}");
            }
        }
    }
}
