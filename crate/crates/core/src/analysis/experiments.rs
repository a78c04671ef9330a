//! Monte Carlo experiments over seeded ensembles.

use serde::Serialize;

use crate::grid::{l1_distance, truncate_initial, GridFunction};
use crate::noise::{sample_path, NoisePath};
use crate::nonlinearity::{Family, RegularizedNonlinearity};
use crate::solver::{run_coupled, SolverConfig, SolverError, Snapshots, Stepper, Trajectory};

use super::ensemble::{fit_slope, mean_and_half_width, par_map, trapezoid, EnsembleStats};

/// A seed dropped from an ensemble, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Excluded {
    pub seed: u64,
    pub reason: String,
}

/// Noise path for `cfg` keyed by `seed`; silent when the run has no modes.
pub fn path_for(cfg: &SolverConfig, seed: u64) -> Result<NoisePath, SolverError> {
    let steps = cfg.steps()?;
    let modes = cfg.coeffs.mode_count();
    if modes == 0 || steps == 0 {
        return Ok(NoisePath::silent(cfg.dt, steps.max(1)));
    }
    sample_path(seed, modes, cfg.dt, steps).map_err(|e| SolverError::Parameter(e.to_string()))
}

/// Runs `f` for every seed. CFL and blow-up failures exclude the seed; any
/// other error aborts. Results keep seed order.
pub fn run_seeds<R, F>(seeds: &[u64], f: F) -> Result<(Vec<(u64, R)>, Vec<Excluded>), SolverError>
where
    R: Send,
    F: Fn(u64) -> Result<R, SolverError> + Sync + Send,
{
    let outcomes = par_map(seeds, |&s| (s, f(s)));
    let mut kept = Vec::with_capacity(outcomes.len());
    let mut excluded = Vec::new();
    for (seed, out) in outcomes {
        match out {
            Ok(r) => kept.push((seed, r)),
            Err(e @ (SolverError::Cfl { .. } | SolverError::Blowup { .. })) => excluded.push(Excluded {
                seed,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok((kept, excluded))
}

fn exclusion_fraction(excluded: &[Excluded], total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        excluded.len() as f64 / total as f64
    }
}

/// Largest tolerated fraction of excluded seeds.
pub const MAX_EXCLUDED: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub seeds: usize,
    pub times: Vec<f64>,
    pub distance: EnsembleStats,
    pub initial_distance: f64,
    pub ratio: Vec<f64>,
    pub ratio_upper: Vec<f64>,
    pub sup_ratio_upper: f64,
    /// Least-squares fit of `log ratio = C t` through the origin.
    pub c_hat: f64,
    pub c_max: f64,
    pub bound: f64,
    /// A later ratio whose lower CI exceeds the earlier upper CI grown by
    /// `exp(c_max dt)`.
    pub blowup: bool,
    pub excluded: Vec<Excluded>,
    pub exclusion_fraction: f64,
    pub passed: bool,
}

/// Evenly spaced snapshot times on `[0, t_final]`.
pub fn snapshot_times(t_final: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count).map(|j| t_final * j as f64 / (count - 1) as f64).collect()
}

/// `E ||u(t) - u~(t)||_{L1}` for data `xi_a`, `xi_b` driven by common noise,
/// against the distance of the truncated data.
pub fn contraction_experiment(
    xi_a: &GridFunction,
    xi_b: &GridFunction,
    cfg: &SolverConfig,
    seeds: &[u64],
    points: usize,
    c_max: f64,
) -> Result<ContractionReport, SolverError> {
    let snaps = Snapshots::Times(snapshot_times(cfg.t_final, points));
    let (kept, excluded) = run_seeds(seeds, |s| {
        let path = path_for(cfg, s)?;
        let (a, b) = run_coupled(xi_a, xi_b, cfg, &path, &snaps)?;
        let d: Result<Vec<f64>, _> = a.snapshots.iter().zip(&b.snapshots).map(|(u, v)| l1_distance(u, v)).collect();
        Ok((a.times, d?))
    })?;
    let initial_distance = l1_distance(
        &truncate_initial(xi_a, cfg.truncation),
        &truncate_initial(xi_b, cfg.truncation),
    )?;
    let times = kept.first().map(|(_, (t, _))| t.clone()).unwrap_or_default();
    let samples: Vec<Vec<f64>> = kept.into_iter().map(|(_, (_, d))| d).collect();
    let distance = EnsembleStats::from_samples(&samples);
    let scale = |v: f64| if initial_distance > 0.0 { v / initial_distance } else { 0.0 };
    let ratio: Vec<f64> = distance.mean.iter().map(|&v| scale(v)).collect();
    let ratio_upper: Vec<f64> = (0..ratio.len()).map(|j| scale(distance.upper(j))).collect();
    let ratio_lower: Vec<f64> = (0..ratio.len()).map(|j| scale(distance.lower(j))).collect();
    let sup_ratio_upper = ratio_upper.iter().copied().fold(0.0, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (t, r) in times.iter().zip(&ratio) {
        if *t > 0.0 && *r > 0.0 {
            num += t * r.ln();
            den += t * t;
        }
    }
    let c_hat = if den > 0.0 { num / den } else { 0.0 };
    let blowup = (1..ratio.len())
        .any(|j| ratio_lower[j] > ratio_upper[j - 1] * (c_max * (times[j] - times[j - 1])).exp());
    let bound = (c_max * cfg.t_final).exp();
    let exclusion_fraction = exclusion_fraction(&excluded, seeds.len());
    let passed = !samples.is_empty()
        && sup_ratio_upper <= bound
        && c_hat <= c_max
        && !blowup
        && exclusion_fraction <= MAX_EXCLUDED;
    Ok(ContractionReport {
        seeds: samples.len(),
        times,
        distance,
        initial_distance,
        ratio,
        ratio_upper,
        sup_ratio_upper,
        c_hat,
        c_max,
        bound,
        blowup,
        excluded,
        exclusion_fraction,
        passed,
    })
}

/// Per-path scalars behind the moment bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSample {
    pub sup_l2_sq: f64,
    /// `dt sum_n ||grad_h [a_n](u^n)||^2`.
    pub grad_integral: f64,
    pub sup_lm1: f64,
}

impl MomentSample {
    /// Requires per-step diagnostics.
    pub fn from_trajectory(traj: &Trajectory) -> Option<Self> {
        let diag = &traj.diagnostics;
        if diag.len() != traj.steps + 1 {
            return None;
        }
        let grads: Vec<f64> = diag[..traj.steps].iter().map(|d| traj.dt * d.grad_bracket_sq).collect();
        Some(MomentSample {
            sup_l2_sq: diag.iter().map(|d| d.l2_sq).fold(0.0, f64::max),
            grad_integral: crate::quad::pairwise_sum(&grads),
            sup_lm1: diag.iter().map(|d| d.lm1).fold(0.0, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: u32,
    pub resolution: usize,
    pub power: f64,
    pub seeds: usize,
    /// `E sup ||u||_{L2}^p + E ||grad [a_n](u)||_{L2(Q_T)}^p`.
    pub energy: f64,
    pub energy_half_width: f64,
    /// `E sup ||u||_{L_{m+1}}^{m+1}`.
    pub lm1: f64,
    pub lm1_half_width: f64,
    pub xi_l2_pow: f64,
    pub xi_lm1: f64,
    pub energy_ratio: f64,
    pub lm1_ratio: f64,
    pub excluded: Vec<Excluded>,
}

/// Moment ratios of an ensemble; `xi` is the truncated initial datum.
pub fn moment_check(samples: &[MomentSample], nl: &RegularizedNonlinearity, xi: &GridFunction, power: f64) -> MomentReport {
    let half = 0.5 * power;
    let energy: Vec<f64> = samples
        .iter()
        .map(|s| s.sup_l2_sq.powf(half) + s.grad_integral.powf(half))
        .collect();
    let lm1: Vec<f64> = samples.iter().map(|s| s.sup_lm1).collect();
    let (e, ehw) = mean_and_half_width(&energy);
    let (l, lhw) = mean_and_half_width(&lm1);
    let xi_l2_pow = xi.l2_sq().powf(half);
    let xi_lm1 = xi.lp_pow(nl.exponent() + 1.0);
    MomentReport {
        n: nl.n(),
        resolution: xi.resolution(),
        power,
        seeds: samples.len(),
        energy: e,
        energy_half_width: ehw,
        lm1: l,
        lm1_half_width: lhw,
        xi_l2_pow,
        xi_lm1,
        energy_ratio: e / (1.0 + xi_l2_pow),
        lm1_ratio: l / (1.0 + xi_lm1),
        excluded: Vec::new(),
    }
}

/// Runs `cfg` with diagnostics for every seed and reports its moments.
pub fn moment_experiment(xi: &GridFunction, cfg: &SolverConfig, seeds: &[u64], power: f64) -> Result<MomentReport, SolverError> {
    let mut cfg = cfg.clone();
    cfg.diagnostics = true;
    let (kept, excluded) = run_seeds(seeds, |s| {
        let path = path_for(&cfg, s)?;
        let traj = Stepper::new(&cfg)?.run(xi, &path, &Snapshots::Final)?;
        Ok(MomentSample::from_trajectory(&traj).expect("diagnostics requested"))
    })?;
    let samples: Vec<MomentSample> = kept.into_iter().map(|(_, m)| m).collect();
    let mut report = moment_check(&samples, &cfg.nonlinearity, &truncate_initial(xi, cfg.truncation), power);
    report.excluded = excluded;
    Ok(report)
}

/// `max / min` of each ratio over a refinement matrix.
pub fn moment_spread(reports: &[MomentReport]) -> (f64, f64) {
    let spread = |f: &dyn Fn(&MomentReport) -> f64| {
        let (lo, hi) = reports
            .iter()
            .map(f)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo > 0.0 {
            hi / lo
        } else if hi == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    };
    (spread(&|r| r.energy_ratio), spread(&|r| r.lm1_ratio))
}

/// `int_T |u(x) - u(y)| rho_eps(x - y) dx dy` with a box kernel of radius
/// `j` cells in each axis.
fn box_modulus(u: &GridFunction, j: usize) -> f64 {
    let m = u.resolution();
    let v = u.values();
    let w = u.cell_volume();
    let width = (2 * j + 1) as f64;
    let mut parts = Vec::new();
    match u.dim() {
        1 => {
            for off in 1..=j {
                let s: f64 = (0..m).map(|c| (v[c] - v[(c + off) % m]).abs()).sum();
                parts.push(2.0 * s);
            }
            w * crate::quad::pairwise_sum(&parts) / width
        }
        _ => {
            let jj = j as isize;
            for oy in -jj..=jj {
                for ox in -jj..=jj {
                    let mut s = 0.0;
                    for c in 0..m * m {
                        let x = (c % m) as isize;
                        let y = (c / m) as isize;
                        let xe = (x + ox).rem_euclid(m as isize) as usize;
                        let ye = (y + oy).rem_euclid(m as isize) as usize;
                        s += (v[c] - v[ye * m + xe]).abs();
                    }
                    parts.push(s);
                }
            }
            w * crate::quad::pairwise_sum(&parts) / (width * width)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FracRegularityReport {
    pub epsilons: Vec<f64>,
    pub modulus: Vec<f64>,
    pub modulus_half_width: Vec<f64>,
    /// `E ||grad_h [a_n](u)||_{L1(Q_T)}`.
    pub grad_l1: f64,
    /// `modulus / (eps^{2/(m+1)} (1 + grad_l1))` per radius.
    pub constants: Vec<f64>,
    pub slope: f64,
    pub required: f64,
    pub passed: bool,
}

/// Fits the exponent of the space-time modulus of continuity in `eps`.
/// Trajectories must share grid and snapshot times.
pub fn frac_regularity_check(
    trajs: &[Trajectory],
    nl: &RegularizedNonlinearity,
    epsilons: &[f64],
) -> Result<FracRegularityReport, SolverError> {
    let first = trajs
        .first()
        .ok_or_else(|| SolverError::Parameter("empty ensemble".into()))?;
    let h = first.initial().spacing();
    let mut radii = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps >= 2.0 * h - 1e-12) {
            return Err(SolverError::Parameter(format!("radius {eps} below two cells ({h})")));
        }
        radii.push((eps / h).round() as usize);
    }
    let per_path: Vec<(Vec<f64>, f64)> = par_map(trajs, |traj| {
        let mods = radii
            .iter()
            .map(|&j| {
                let v: Vec<f64> = traj.snapshots.iter().map(|u| box_modulus(u, j)).collect();
                trapezoid(&traj.times, &v)
            })
            .collect();
        let grads: Vec<f64> = traj
            .snapshots
            .iter()
            .map(|u| gradient_l1(&u.map(|r| nl.bracket_a(r))))
            .collect();
        (mods, trapezoid(&traj.times, &grads))
    });
    let samples: Vec<Vec<f64>> = per_path.iter().map(|(m, _)| m.clone()).collect();
    let stats = EnsembleStats::from_samples(&samples);
    let grads: Vec<f64> = per_path.iter().map(|(_, g)| *g).collect();
    let grad_l1 = mean_and_half_width(&grads).0;
    let gamma = 2.0 / (nl.exponent() + 1.0);
    let constants = epsilons
        .iter()
        .zip(&stats.mean)
        .map(|(e, m)| m / (e.powf(gamma) * (1.0 + grad_l1)))
        .collect();
    let lx: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = stats.mean.iter().map(|m| m.ln()).collect();
    let slope = if stats.mean.iter().all(|&m| m > 0.0) && epsilons.len() >= 2 {
        fit_slope(&lx, &ly)
    } else {
        f64::NAN
    };
    let required = gamma - 0.15;
    Ok(FracRegularityReport {
        epsilons: epsilons.to_vec(),
        modulus: stats.mean,
        modulus_half_width: stats.half_width,
        grad_l1,
        constants,
        slope,
        required,
        passed: slope >= required,
    })
}

/// `h^d sum |D^+ g|` summed over axes (forward differences, l1 over axes).
fn gradient_l1(g: &GridFunction) -> f64 {
    let h = g.spacing();
    let v = g.values();
    let mut s = 0.0;
    for c in 0..v.len() {
        let mut sq = 0.0;
        for axis in 0..g.dim() {
            let d = (v[g.shift(c, axis, 1)] - v[c]) / h;
            sq += d * d;
        }
        s += sq.sqrt();
    }
    g.cell_volume() * s
}

/// `sup { R : |a(r) - b(r)| <= lambda for all |r| < R }`, scanned on a grid of
/// step `step` up to `r_max`; `None` means the bound never fails there.
pub fn r_lambda(a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64, lambda: f64, r_max: f64, step: f64) -> Option<f64> {
    let count = (r_max / step).ceil() as usize;
    for j in 0..=count {
        let r = j as f64 * step;
        if (a(r) - b(r)).abs() > lambda || (a(-r) - b(-r)).abs() > lambda {
            return Some(((j as f64 - 1.0) * step).max(0.0));
        }
    }
    None
}

/// `R_lambda` between `a_n` and `a_{n'}`; beyond both flat radii the
/// difference is constant, so a clean scan there means `R = inf`.
pub fn r_lambda_pair(a: &RegularizedNonlinearity, b: &RegularizedNonlinearity, lambda: f64) -> Option<f64> {
    let r_max = a.flat_beyond().max(b.flat_beyond()) + 1.0;
    r_lambda(|r| a.a_frak(r), |r| b.a_frak(r), lambda, r_max, 1e-3)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiStabilityReport {
    pub ns: Vec<u32>,
    pub factor: u32,
    pub dts: Vec<f64>,
    /// `E ||u_n - u_{n'}||_{L1(Q_T)}` per `n`.
    pub distance: Vec<f64>,
    pub distance_half_width: Vec<f64>,
    pub decreasing: bool,
    pub lambdas: Vec<f64>,
    /// `None` stands for an unbounded radius.
    pub r_lambda: Vec<Option<f64>>,
    pub r_lambda_ok: bool,
    pub excluded: Vec<Excluded>,
    pub exclusion_fraction: f64,
    pub passed: bool,
}

/// Grid and time data shared by the runs of a stability experiment.
#[derive(Debug, Clone)]
pub struct StabilitySetup {
    pub coeffs: crate::coefficients::CoefficientSet,
    pub m: usize,
    pub t_final: f64,
    /// `|u|` range the common time step must be stable for.
    pub range: f64,
    pub cfl_safety: f64,
    pub snapshots: usize,
}

/// Couples `Phi_n` with `Phi_{factor n}` on identical data and noise.
pub fn phi_stability_experiment(
    family: &Family,
    ns: &[u32],
    factor: u32,
    setup: &StabilitySetup,
    xi: &GridFunction,
    seeds: &[u64],
) -> Result<PhiStabilityReport, SolverError> {
    let mut distance = Vec::new();
    let mut distance_half_width = Vec::new();
    let mut dts = Vec::new();
    let mut lambdas = Vec::new();
    let mut radii = Vec::new();
    let mut excluded = Vec::new();
    for &n in ns {
        let np = n * factor;
        let fam_n = family.regularize(n).map_err(|e| SolverError::Parameter(e.to_string()))?;
        let fam_np = family.regularize(np).map_err(|e| SolverError::Parameter(e.to_string()))?;
        let lambda = 8.0 / n as f64;
        lambdas.push(lambda);
        radii.push(r_lambda_pair(&fam_n, &fam_np, lambda));
        let mut cfg_n = SolverConfig::new(fam_n, setup.coeffs.clone(), setup.m, 1.0, setup.t_final);
        let mut cfg_np = SolverConfig::new(fam_np, setup.coeffs.clone(), setup.m, 1.0, setup.t_final);
        cfg_n.cfl_safety = setup.cfl_safety;
        cfg_np.cfl_safety = setup.cfl_safety;
        let steps = (setup.t_final / cfg_n.cfl_budget(setup.range).min(cfg_np.cfl_budget(setup.range)))
            .ceil()
            .max(1.0);
        let dt = setup.t_final / steps;
        cfg_n.dt = dt;
        cfg_np.dt = dt;
        dts.push(dt);
        let every = ((steps as usize) / setup.snapshots.max(1)).max(1);
        let snaps = Snapshots::Every(every);
        let (kept, mut ex) = run_seeds(seeds, |s| {
            let path = path_for(&cfg_n, s)?;
            let a = Stepper::new(&cfg_n)?.run(xi, &path, &snaps)?;
            let b = Stepper::new(&cfg_np)?.run(xi, &path, &snaps)?;
            let d: Result<Vec<f64>, _> = a.snapshots.iter().zip(&b.snapshots).map(|(u, v)| l1_distance(u, v)).collect();
            Ok(trapezoid(&a.times, &d?))
        })?;
        let vals: Vec<f64> = kept.iter().map(|(_, d)| *d).collect();
        let (mean, hw) = mean_and_half_width(&vals);
        distance.push(mean);
        distance_half_width.push(hw);
        excluded.append(&mut ex);
    }
    let decreasing = distance.windows(2).all(|w| w[1] < w[0]);
    let r_lambda_ok = ns
        .iter()
        .zip(&radii)
        .all(|(&n, r)| r.map_or(true, |r| r >= n as f64));
    let exclusion_fraction = exclusion_fraction(&excluded, seeds.len() * ns.len());
    Ok(PhiStabilityReport {
        ns: ns.to_vec(),
        factor,
        dts,
        distance,
        distance_half_width,
        decreasing,
        lambdas,
        r_lambda: radii,
        r_lambda_ok,
        excluded,
        exclusion_fraction,
        passed: decreasing && r_lambda_ok && exclusion_fraction <= MAX_EXCLUDED,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialContinuityReport {
    pub hs: Vec<f64>,
    /// `(1/h) E int_0^h ||u(t) - xi||_{L2}^2 dt`.
    pub g: Vec<f64>,
    pub g_half_width: Vec<f64>,
    pub passed: bool,
}

/// `g(h)` for `h = h_max, h_max/2, h_max/4` from dense runs on `[0, h_max]`.
pub fn initial_time_continuity(trajs: &[Trajectory], xi: &GridFunction) -> Result<InitialContinuityReport, SolverError> {
    let first = trajs
        .first()
        .ok_or_else(|| SolverError::Parameter("empty ensemble".into()))?;
    let h_max = *first.times.last().unwrap_or(&0.0);
    if !(h_max > 0.0) || first.snapshots.len() < 9 {
        return Err(SolverError::Parameter("initial-time continuity needs dense early snapshots".into()));
    }
    let hs = vec![h_max, 0.5 * h_max, 0.25 * h_max];
    let samples: Vec<Vec<f64>> = trajs
        .iter()
        .map(|traj| {
            let dist: Vec<f64> = traj
                .snapshots
                .iter()
                .map(|u| {
                    let d: Vec<f64> = u.values().iter().zip(xi.values()).map(|(a, b)| (a - b) * (a - b)).collect();
                    u.cell_volume() * crate::quad::pairwise_sum(&d)
                })
                .collect();
            hs.iter()
                .map(|&h| {
                    let k = traj.times.iter().take_while(|&&t| t <= h * (1.0 + 1e-9)).count();
                    trapezoid(&traj.times[..k], &dist[..k]) / h
                })
                .collect()
        })
        .collect();
    let stats = EnsembleStats::from_samples(&samples);
    let g = stats.mean;
    let passed = g.windows(2).all(|w| w[1] <= w[0]) && g[2] <= 0.5 * g[0];
    Ok(InitialContinuityReport {
        hs,
        g,
        g_half_width: stats.half_width,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_lambda_finds_crossing() {
        let r = r_lambda(|r: f64| r.abs(), |_| 0.0, 0.5, 2.0, 1e-3).unwrap();
        assert!((r - 0.5).abs() <= 1e-3);
        assert_eq!(r_lambda(|_| 1.0, |_| 1.0, 0.1, 2.0, 1e-2), None);
    }

    #[test]
    fn constant_field_has_zero_modulus() {
        let u = GridFunction::constant(1, 32, 0.3).unwrap();
        assert_eq!(box_modulus(&u, 4), 0.0);
    }
}

/// Parameters of the entropy-residual refinement study. Level `l` uses
/// `M = m0 2^l`, `delta = delta0 2^-l` and `dt = dt0 4^-l`, with noise
/// refined from the level-0 path so that all levels see the same Brownian
/// motion.
#[derive(Debug, Clone)]
pub struct EntropyStudySetup {
    pub family: Family,
    pub n: u32,
    pub coeffs: crate::coefficients::CoefficientSet,
    pub m0: usize,
    pub dt0: f64,
    pub delta0: f64,
    pub t_final: f64,
    pub levels: usize,
    /// Bound for the deterministic residual at the finest level.
    pub det_tolerance: f64,
    /// Required shrink factor per level.
    pub shrink: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyLevel {
    pub m: usize,
    pub dt: f64,
    pub delta: f64,
    pub seeds: usize,
    pub mean: f64,
    pub half_width: f64,
    /// `|mean| + half_width`, an upper confidence bound on `|E residual|`.
    pub magnitude: f64,
    /// Calibrated envelope `C (h + sqrt(dt) + delta)`.
    pub tau: f64,
    pub within_tau: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyStudyReport {
    pub levels: Vec<EntropyLevel>,
    /// Fitted at level 0; calibrated, not derived.
    pub tau_constant: f64,
    pub shrink_factors: Vec<f64>,
    pub deterministic_residual: f64,
    pub deterministic_ok: bool,
    pub excluded: Vec<Excluded>,
    pub exclusion_fraction: f64,
    pub passed: bool,
}

pub fn entropy_study(
    setup: &EntropyStudySetup,
    initial: &(dyn Fn([f64; 2]) -> f64 + Sync),
    seeds: &[u64],
) -> Result<EntropyStudyReport, SolverError> {
    use super::entropy::{entropy_residual, EntropyPair, TestFunction};
    if setup.levels == 0 {
        return Err(SolverError::Parameter("entropy study needs at least one level".into()));
    }
    let nl = setup
        .family
        .regularize(setup.n)
        .map_err(|e| SolverError::Parameter(e.to_string()))?;
    let dim = setup.coeffs.dim;
    let test = TestFunction::new(setup.t_final);
    let steps0 = (setup.t_final / setup.dt0).round() as usize;
    let mut levels = Vec::new();
    let mut excluded = Vec::new();
    let mut finest = None;
    for l in 0..setup.levels {
        let m = setup.m0 << l;
        let dt = setup.dt0 / 4f64.powi(l as i32);
        let delta = setup.delta0 / 2f64.powi(l as i32);
        let cfg = SolverConfig::new(nl.clone(), setup.coeffs.clone(), m, dt, setup.t_final);
        cfg.validate()?;
        let xi = GridFunction::from_fn(dim, m, initial)?;
        let pair = EntropyPair::new(delta)?;
        let modes = setup.coeffs.mode_count();
        let (kept, mut ex) = run_seeds(seeds, |s| {
            let path = if modes == 0 {
                NoisePath::silent(dt, cfg.steps()?)
            } else {
                let mut p = sample_path(s, modes, setup.dt0, steps0).map_err(|e| SolverError::Parameter(e.to_string()))?;
                for _ in 0..2 * l {
                    p = crate::noise::refine(&p);
                }
                p
            };
            let traj = Stepper::new(&cfg)?.run(&xi, &path, &Snapshots::Dense)?;
            Ok(entropy_residual(&cfg, &xi, &traj, &path, &pair, &test)?.residual)
        })?;
        excluded.append(&mut ex);
        let vals: Vec<f64> = kept.iter().map(|(_, r)| *r).collect();
        let (mean, half_width) = mean_and_half_width(&vals);
        levels.push(EntropyLevel {
            m,
            dt,
            delta,
            seeds: vals.len(),
            mean,
            half_width,
            magnitude: mean.abs() + half_width,
            tau: 0.0,
            within_tau: false,
        });
        finest = Some((cfg, xi, pair));
    }
    let scale = |lv: &EntropyLevel| 1.0 / lv.m as f64 + lv.dt.sqrt() + lv.delta;
    let tau_constant = levels[0].magnitude / scale(&levels[0]);
    for lv in &mut levels {
        lv.tau = tau_constant * scale(lv);
        lv.within_tau = lv.magnitude <= lv.tau * (1.0 + 1e-12);
    }
    let shrink_factors: Vec<f64> = levels.windows(2).map(|w| w[0].magnitude / w[1].magnitude).collect();
    let (mut cfg, xi, pair) = finest.expect("at least one level");
    cfg.coeffs = crate::coefficients::CoefficientSet::zero(dim);
    let silent = NoisePath::silent(cfg.dt, cfg.steps()?);
    let traj = Stepper::new(&cfg)?.run(&xi, &silent, &Snapshots::Dense)?;
    let deterministic_residual = entropy_residual(&cfg, &xi, &traj, &silent, &pair, &test)?.residual;
    let deterministic_ok = deterministic_residual <= setup.det_tolerance;
    let exclusion_fraction = exclusion_fraction(&excluded, seeds.len() * setup.levels);
    let passed = deterministic_ok
        && shrink_factors.iter().all(|&f| f >= setup.shrink)
        && levels.iter().all(|l| l.within_tau)
        && exclusion_fraction <= MAX_EXCLUDED;
    Ok(EntropyStudyReport {
        levels,
        tau_constant,
        shrink_factors,
        deterministic_residual,
        deterministic_ok,
        excluded,
        exclusion_fraction,
        passed,
    })
}
