use serde::Serialize;

use super::table::ProfileTable;
use super::{check_profile, symmetric_grid, Nonlinearity, NonlinearityError, StructureReport};
use crate::kernel::bump;
use crate::quad::gk15_composite;

/// Node spacing of the lookup tables behind `Phi_n`, `a_n` and `[a_n]`.
pub const TABLE_STEP: f64 = 1e-3;

#[derive(Debug, Clone)]
enum Profile {
    /// `a_n = (max(a(clamp(r, -n, n)), 2/n)) * kernel_w`, kernel half-width `w`.
    Mollified {
        base: Nonlinearity,
        width: f64,
        floor: f64,
    },
    /// Curve-shortening profile `a_n = 1 + int_0^r b_n`.
    Curvature { cutoff: f64 },
}

/// Smooth, non-degenerate approximation `(Phi_n, a_n)` of a diffusion
/// nonlinearity with bounded `Phi_n'`.
///
/// Evaluation goes through lookup tables (spacing [`TABLE_STEP`]) because the
/// solver queries `Phi_n` once per cell per step; `a_frak_exact` evaluates the
/// defining formula directly.
#[derive(Debug, Clone)]
pub struct RegularizedNonlinearity {
    n: u32,
    exponent: f64,
    constant: f64,
    profile: Profile,
    table: ProfileTable,
}

/// Post-construction contract of [`regularize`].
#[derive(Debug, Clone, Serialize)]
pub struct RegularizationReport {
    pub n: u32,
    pub min_a: f64,
    pub floor: f64,
    pub floor_ok: bool,
    pub approx_sup: f64,
    pub approx_bound: f64,
    pub approx_ok: bool,
    /// `1/a_n <= 2(1+|r|)`; checked for the curvature profile only.
    pub coercivity_ok: bool,
    pub sup_phi_prime: f64,
    pub structure: StructureReport,
    pub passed: bool,
}

impl RegularizedNonlinearity {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Structure constant the approximation satisfies (`3K` for mollified families).
    pub fn constant(&self) -> f64 {
        self.constant
    }

    #[inline]
    pub fn phi(&self, r: f64) -> f64 {
        self.table.phi(r)
    }

    #[inline]
    pub fn a_frak(&self, r: f64) -> f64 {
        self.table.a(r)
    }

    /// `Phi_n'(r) = a_n(r)^2`.
    #[inline]
    pub fn phi_prime(&self, r: f64) -> f64 {
        let a = self.table.a(r);
        a * a
    }

    /// `[a_n](r)`.
    #[inline]
    pub fn bracket_a(&self, r: f64) -> f64 {
        self.table.bracket(r)
    }

    /// `sup_{|s| <= range} Phi_n'(s)`.
    pub fn sup_phi_prime(&self, range: f64) -> f64 {
        self.table.sup_a_sq(range)
    }

    /// Global bound on `Phi_n'`.
    pub fn phi_prime_bound(&self) -> f64 {
        self.table.sup_a_sq(f64::INFINITY)
    }

    /// Beyond this radius `a_n` is constant.
    pub fn flat_beyond(&self) -> f64 {
        self.table.end()
    }

    /// Direct evaluation of `a_n` from its definition (no table).
    pub fn a_frak_exact(&self, r: f64) -> f64 {
        match &self.profile {
            Profile::Mollified { base, width, floor } => mollified(base, self.n, *width, *floor, r),
            Profile::Curvature { cutoff } => curvature_a(self.n, *cutoff, r),
        }
    }

    /// `b_n` of the curve-shortening construction; `None` for mollified families.
    pub fn b_frak(&self, r: f64) -> Option<f64> {
        match &self.profile {
            Profile::Curvature { cutoff } => Some(curvature_b(self.n, *cutoff, r)),
            Profile::Mollified { .. } => None,
        }
    }

    /// `c_n` of the curve-shortening construction.
    pub fn cutoff(&self) -> Option<f64> {
        match &self.profile {
            Profile::Curvature { cutoff } => Some(*cutoff),
            Profile::Mollified { .. } => None,
        }
    }

    /// Half-width of the mollifier, for mollified families.
    pub fn mollifier_width(&self) -> Option<f64> {
        match &self.profile {
            Profile::Mollified { width, .. } => Some(*width),
            Profile::Curvature { .. } => None,
        }
    }

    /// The family this approximates, for mollified families.
    pub fn base(&self) -> Option<&Nonlinearity> {
        match &self.profile {
            Profile::Mollified { base, .. } => Some(base),
            Profile::Curvature { .. } => None,
        }
    }

    /// Derivative of the tabulated `a_n` by central differences.
    pub fn a_frak_prime(&self, r: f64) -> f64 {
        let h = 1e-6 * (1.0 + r.abs());
        (self.a_frak(r + h) - self.a_frak(r - h)) / (2.0 * h)
    }

    /// Re-evaluates the construction contract on a sampled grid.
    ///
    /// Mollified profiles: `a_n >= 2/n`, `sup_{|r|<=n} |a - a_n| <= 4/n` and
    /// the structural predicates. Curvature profiles: `a_n = a_inf` on
    /// `[-n, n]`, `a_n >= 1/(2 sqrt(1+n^2))` and `1/a_n <= 2(1+|r|)`; the
    /// structural predicates are reported but not required, since `arctan`
    /// degenerates at infinity.
    pub fn verify(&self) -> RegularizationReport {
        let n = self.n as f64;
        let (base, floor, approx_bound, curvature) = match &self.profile {
            Profile::Mollified { base, .. } => (*base, 2.0 / n, 4.0 / n, false),
            Profile::Curvature { .. } => (
                Nonlinearity::Arctan { k: 1.0 },
                0.5 / (1.0 + n * n).sqrt(),
                CURVATURE_MATCH_TOL,
                true,
            ),
        };
        let samples = contract_samples(n);

        let min_a = samples
            .iter()
            .map(|&r| self.a_frak(r))
            .fold(self.table.min_a(), f64::min);
        let approx_sup = samples
            .iter()
            .filter(|r| r.abs() <= n)
            .map(|&r| (base.a_frak(r) - self.a_frak(r)).abs())
            .fold(0.0, f64::max);
        let coercivity_ok = !curvature
            || samples
                .iter()
                .all(|&r| 2.0 * (1.0 + r.abs()) * self.a_frak(r) >= 1.0 - MATCH_SLACK);

        let grid = symmetric_grid(n + 1.0, 161);
        let brackets: Vec<f64> = grid.iter().map(|&r| self.bracket_a(r)).collect();
        let structure = check_profile(
            |r| self.a_frak(r),
            |r| self.a_frak_prime(r),
            &brackets,
            &grid,
            self.exponent,
            self.constant,
        );
        let sup_phi_prime = self.phi_prime_bound();
        let floor_ok = min_a >= floor - if curvature { MATCH_SLACK } else { 0.0 };
        let approx_ok = approx_sup <= approx_bound;
        let structure_ok = curvature || structure.passed;
        RegularizationReport {
            n: self.n,
            min_a,
            floor,
            floor_ok,
            approx_sup,
            approx_bound,
            approx_ok,
            coercivity_ok,
            sup_phi_prime,
            passed: floor_ok && approx_ok && coercivity_ok && structure_ok && sup_phi_prime.is_finite(),
            structure,
        }
    }
}

/// Table interpolation error allowed where the curvature profile should
/// reproduce `(1 + r^2)^{-1/2}` exactly.
const CURVATURE_MATCH_TOL: f64 = 1e-7;
const MATCH_SLACK: f64 = 1e-9;

/// Uniform samples on `[-(n+1), n+1]` plus a geometric cluster near 0.
fn contract_samples(n: f64) -> Vec<f64> {
    let range = n + 1.0;
    let mut s: Vec<f64> = (0..=8000).map(|i| -range + 2.0 * range * i as f64 / 8000.0).collect();
    for e in 0..60 {
        let r = 10f64.powf(-6.0 + e as f64 * 0.1);
        s.push(r);
        s.push(-r);
    }
    s
}

fn clamped_floor(base: &Nonlinearity, n: u32, floor: f64, r: f64) -> f64 {
    base.a_frak(r.abs().min(n as f64)).max(floor)
}

fn mollified(base: &Nonlinearity, n: u32, width: f64, floor: f64, r: f64) -> f64 {
    let x = r.abs();
    let nf = n as f64;
    if matches!(base, Nonlinearity::Linear { .. }) {
        return clamped_floor(base, n, floor, 0.0);
    }
    if x - width >= nf {
        return clamped_floor(base, n, floor, nf);
    }
    let integrand = |s: f64| clamped_floor(base, n, floor, x - s) * bump(s / width);
    // Dividing by the discrete kernel mass makes the rule a convex combination,
    // so the floor survives quadrature; max() only absorbs rounding.
    let mass = gk15_composite(&|s: f64| bump(s / width), -width, width, 8);
    (gk15_composite(&integrand, -width, width, 8) / mass).max(floor)
}

/// Builds `(Phi_n, a_n)`: `a_n` is the floor-and-clamp of `a` at level `2/n`
/// and radius `n`, mollified over half-width `1/n^2`; `Phi_n = int_0^r a_n^2`.
/// The construction is rejected if it breaks any of: `a_n >= 2/n`,
/// `sup_{|r|<=n} |a - a_n| <= 4/n`, the structural predicates with `3K`,
/// bounded `Phi_n'`.
pub fn regularize(fam: &Nonlinearity, n: u32) -> Result<RegularizedNonlinearity, NonlinearityError> {
    if n < 1 {
        return Err(NonlinearityError::Index(n));
    }
    let base_report = super::check_assumption_a(fam, &symmetric_grid((n as f64 + 1.0).max(2.0), 121))?;
    if let Some(failed) = base_report.first_failure() {
        return Err(NonlinearityError::Structure(format!(
            "{} (margin {:e})",
            failed.name, failed.worst_margin
        )));
    }
    let nf = n as f64;
    let width = 1.0 / (nf * nf);
    let floor = 2.0 / nf;
    let base = *fam;
    let table = ProfileTable::build(
        |r| mollified(&base, n, width, floor, r),
        nf + width + 2.0 * TABLE_STEP,
        TABLE_STEP,
    );
    let reg = RegularizedNonlinearity {
        n,
        exponent: fam.exponent(),
        constant: 3.0 * fam.constant(),
        profile: Profile::Mollified { base, width, floor },
        table,
    };
    let report = reg.verify();
    if !report.floor_ok {
        return Err(NonlinearityError::Construction {
            bound: "a_n >= 2/n".into(),
            margin: report.min_a - report.floor,
        });
    }
    if !report.approx_ok {
        return Err(NonlinearityError::Construction {
            bound: "sup_{|r|<=n} |a - a_n| <= 4/n".into(),
            margin: report.approx_bound - report.approx_sup,
        });
    }
    if let Some(failed) = report.structure.first_failure() {
        return Err(NonlinearityError::Construction {
            bound: format!("structure with 3K: {}", failed.name),
            margin: failed.worst_margin,
        });
    }
    Ok(reg)
}

fn curvature_b(n: u32, cutoff: f64, r: f64) -> f64 {
    let x = r.abs();
    let nf = n as f64;
    let v = if x <= nf {
        -x * (1.0 + x * x).powf(-1.5)
    } else if x < cutoff {
        let at_n = -nf * (1.0 + nf * nf).powf(-1.5);
        at_n * (cutoff - x) / (cutoff - nf)
    } else {
        0.0
    };
    if r < 0.0 {
        -v
    } else {
        v
    }
}

fn curvature_a(n: u32, cutoff: f64, r: f64) -> f64 {
    let x = r.abs();
    let nf = n as f64;
    if x <= nf {
        return 1.0 / (1.0 + x * x).sqrt();
    }
    let base = 1.0 / (1.0 + nf * nf).sqrt();
    let at_n = -nf * (1.0 + nf * nf).powf(-1.5);
    let len = cutoff - nf;
    let d = x.min(cutoff) - nf;
    base + at_n * (d - d * d / (2.0 * len))
}

/// Curve-shortening regularization: `b_n` is odd, equals `-r(1+r^2)^{-3/2}`
/// on `[0, n]`, is linear on `[n, c_n]` and vanishes beyond, with
/// `c_n = n + (1 + n^2)/n` so that `int_n^{c_n} b_n = -1/(2 sqrt(1+n^2))`.
/// Then `a_n = 1 + int_0^r b_n` and `Phi_n = int_0^r a_n^2`.
pub fn mcf_regularize(n: u32) -> Result<RegularizedNonlinearity, NonlinearityError> {
    if n < 1 {
        return Err(NonlinearityError::Index(n));
    }
    let nf = n as f64;
    let cutoff = nf + (1.0 + nf * nf) / nf;
    let table = ProfileTable::build(|r| curvature_a(n, cutoff, r), cutoff + 2.0 * TABLE_STEP, TABLE_STEP);
    Ok(RegularizedNonlinearity {
        n,
        exponent: 1.0,
        constant: 1.0,
        profile: Profile::Curvature { cutoff },
        table,
    })
}
