//! Executes the experiments of a [`RunConfig`] and writes their reports.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{
    contraction_experiment, entropy_study, frac_regularity_check, initial_time_continuity, moment_experiment,
    moment_spread, path_for, phi_stability_experiment, run_seeds, snapshot_times, EntropyStudySetup, StabilitySetup,
    MAX_EXCLUDED,
};
use crate::config::{eval_initial, ConfigError, Equation, ExperimentKind, InitialTerm, RunConfig};
use crate::grid::GridFunction;
use crate::mcf::{curvature_consistency, reconstruct_curve, McfConfig};
use crate::noise::NoisePath;
use crate::nonlinearity::NonlinearityError;
use crate::output::{build_manifest, write_curves_csv, write_json, write_trajectory_bin, write_trajectory_csv};
use crate::plot::{render_svg, PlotSpec, Series};
use crate::solver::{SolverError, Snapshots, Stepper};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("nonlinearity: {0}")]
    Nonlinearity(#[from] NonlinearityError),
    #[error("output: {0}")]
    Io(#[from] io::Error),
}

/// On-disk form of one experiment's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub experiment: String,
    pub passed: bool,
    pub parameters: Value,
    pub metrics: Value,
    pub plot: Option<PlotSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub experiment: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub outcomes: Vec<Outcome>,
    /// Written files, relative to the output directory.
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.experiment.as_str())
            .collect()
    }
}

fn grid_from(terms: &[InitialTerm], dim: usize, m: usize) -> Result<GridFunction, SolverError> {
    Ok(GridFunction::from_fn(dim, m, |x| eval_initial(terms, x, dim))?)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn series(name: &str, x: Vec<f64>, y: Vec<f64>, dashed: bool) -> Series {
    Series {
        name: name.into(),
        x,
        y,
        dashed,
    }
}

fn contraction(cfg: &RunConfig, seeds: &[u64]) -> Result<ReportFile, RunError> {
    let solver = cfg.solver_config()?;
    let dim = cfg.grid.dim;
    let xi_a = grid_from(&cfg.initial, dim, cfg.grid.m)?;
    let xi_b = grid_from(cfg.initial_b_terms(), dim, cfg.grid.m)?;
    let c_max = cfg.contraction.c_max;
    let r = contraction_experiment(&xi_a, &xi_b, &solver, seeds, cfg.time.snapshots, c_max)?;
    let bound: Vec<f64> = r.times.iter().map(|t| (c_max * t).exp()).collect();
    let plot = PlotSpec {
        title: "L1 distance of coupled runs".into(),
        x_label: "t".into(),
        y_label: "E||u - v||_1 / ||xi - eta||_1".into(),
        log_x: false,
        log_y: false,
        series: vec![
            series("mean ratio", r.times.clone(), r.ratio.clone(), false),
            series("upper 95%", r.times.clone(), r.ratio_upper.clone(), true),
            series("exp(C t)", r.times.clone(), bound, true),
        ],
    };
    Ok(ReportFile {
        experiment: "contraction".into(),
        passed: r.passed,
        parameters: json!({ "dt": solver.dt, "m": solver.m, "n": solver.nonlinearity.n(), "t_final": solver.t_final, "seeds": seeds.len(), "c_max": c_max }),
        metrics: to_value(&r),
        plot: Some(plot),
    })
}

fn moments(cfg: &RunConfig, seeds: &[u64]) -> Result<ReportFile, RunError> {
    let family = cfg.family()?;
    let ns = if cfg.moments.ns.is_empty() { vec![cfg.n()?] } else { cfg.moments.ns.clone() };
    let ms = if cfg.moments.ms.is_empty() { vec![cfg.grid.m] } else { cfg.moments.ms.clone() };
    let mut reports = Vec::new();
    let mut plot_series = Vec::new();
    for &m in &ms {
        let mut ys = Vec::new();
        for &n in &ns {
            let solver = cfg.solver_for(family.regularize(n)?, m, cfg.time.t_final)?;
            let xi = grid_from(&cfg.initial, cfg.grid.dim, m)?;
            let r = moment_experiment(&xi, &solver, seeds, cfg.moments.power)?;
            ys.push(r.energy_ratio);
            reports.push(r);
        }
        plot_series.push(series(&format!("energy ratio, M={m}"), ns.iter().map(|&n| n as f64).collect(), ys, false));
    }
    let (energy_spread, lm1_spread) = moment_spread(&reports);
    let excluded: usize = reports.iter().map(|r| r.excluded.len()).sum();
    let exclusion_fraction = excluded as f64 / (seeds.len() * reports.len()).max(1) as f64;
    let passed = energy_spread <= cfg.moments.max_spread
        && lm1_spread <= cfg.moments.max_spread
        && exclusion_fraction <= MAX_EXCLUDED;
    Ok(ReportFile {
        experiment: "moments".into(),
        passed,
        parameters: json!({ "ns": ns, "ms": ms, "power": cfg.moments.power, "max_spread": cfg.moments.max_spread, "seeds": seeds.len() }),
        metrics: json!({ "energy_spread": energy_spread, "lm1_spread": lm1_spread, "exclusion_fraction": exclusion_fraction, "matrix": to_value(&reports) }),
        plot: Some(PlotSpec {
            title: "Moment ratios".into(),
            x_label: "n".into(),
            y_label: "ratio to 1 + E||xi_n||^p".into(),
            log_x: true,
            log_y: false,
            series: plot_series,
        }),
    })
}

fn entropy(cfg: &RunConfig, seeds: &[u64]) -> Result<ReportFile, RunError> {
    let s = &cfg.entropy;
    let setup = EntropyStudySetup {
        family: cfg.family()?,
        n: match s.n {
            Some(n) => n,
            None => cfg.n()?,
        },
        coeffs: cfg.coefficient_set()?,
        m0: s.m0,
        dt0: s.dt0,
        delta0: s.delta0,
        t_final: s.t_final,
        levels: s.levels,
        det_tolerance: s.det_tolerance,
        shrink: s.shrink,
    };
    let dim = cfg.grid.dim;
    let terms = cfg.initial.clone();
    let r = entropy_study(&setup, &move |x| eval_initial(&terms, x, dim), seeds)?;
    let hs: Vec<f64> = r.levels.iter().map(|l| 1.0 / l.m as f64).collect();
    let plot = PlotSpec {
        title: "Entropy residual under refinement".into(),
        x_label: "h".into(),
        y_label: "|E residual| + CI".into(),
        log_x: true,
        log_y: true,
        series: vec![
            series("magnitude", hs.clone(), r.levels.iter().map(|l| l.magnitude).collect(), false),
            series("calibrated tau", hs, r.levels.iter().map(|l| l.tau).collect(), true),
        ],
    };
    Ok(ReportFile {
        experiment: "entropy".into(),
        passed: r.passed,
        parameters: json!({ "n": setup.n, "m0": s.m0, "dt0": s.dt0, "delta0": s.delta0, "t_final": s.t_final, "levels": s.levels, "det_tolerance": s.det_tolerance, "shrink": s.shrink, "seeds": seeds.len(), "tau": "calibrated at the coarsest level" }),
        metrics: to_value(&r),
        plot: Some(plot),
    })
}

fn fracreg(cfg: &RunConfig, seeds: &[u64]) -> Result<ReportFile, RunError> {
    let m = cfg.fracreg.m.unwrap_or(cfg.grid.m);
    let t_final = cfg.fracreg.t_final.unwrap_or(cfg.time.t_final);
    let solver = cfg.solver_for(cfg.family()?.regularize(cfg.n()?)?, m, t_final)?;
    let xi = grid_from(&cfg.initial, cfg.grid.dim, m)?;
    let steps = solver.steps()?;
    let snaps = Snapshots::Every((steps / cfg.fracreg.snapshots.max(1)).max(1));
    let (kept, excluded) = run_seeds(seeds, |s| Stepper::new(&solver)?.run(&xi, &path_for(&solver, s)?, &snaps))?;
    let trajs: Vec<_> = kept.into_iter().map(|(_, t)| t).collect();
    let h = 1.0 / m as f64;
    let eps: Vec<f64> = cfg.fracreg.radii.iter().map(|&r| r as f64 * h).collect();
    let r = frac_regularity_check(&trajs, &solver.nonlinearity, &eps)?;
    let exclusion_fraction = excluded.len() as f64 / seeds.len().max(1) as f64;
    let gamma = r.required + 0.15;
    let anchor = r.modulus.first().copied().unwrap_or(1.0);
    let reference = eps.iter().map(|e| anchor * (e / eps[0]).powf(gamma)).collect();
    Ok(ReportFile {
        experiment: "fracreg".into(),
        passed: r.passed && exclusion_fraction <= MAX_EXCLUDED,
        parameters: json!({ "m": m, "t_final": t_final, "dt": solver.dt, "radii": cfg.fracreg.radii, "seeds": seeds.len() }),
        metrics: json!({ "report": to_value(&r), "excluded": to_value(&excluded), "exclusion_fraction": exclusion_fraction }),
        plot: Some(PlotSpec {
            title: "Space-time modulus of continuity".into(),
            x_label: "eps".into(),
            y_label: "E int |u(x) - u(y)| rho_eps".into(),
            log_x: true,
            log_y: true,
            series: vec![
                series("modulus", eps.clone(), r.modulus.clone(), false),
                series("slope 2/(m+1)", eps, reference, true),
            ],
        }),
    })
}

fn phistab(cfg: &RunConfig, seeds: &[u64]) -> Result<ReportFile, RunError> {
    let setup = StabilitySetup {
        coeffs: cfg.coefficient_set()?,
        m: cfg.grid.m,
        t_final: cfg.time.t_final,
        range: cfg.time.cfl_range,
        cfl_safety: cfg.time.cfl_safety,
        snapshots: cfg.phistab.snapshots,
    };
    let xi = grid_from(&cfg.initial, cfg.grid.dim, cfg.grid.m)?;
    let r = phi_stability_experiment(&cfg.family()?, &cfg.phistab.ns, cfg.phistab.factor, &setup, &xi, seeds)?;
    let ns: Vec<f64> = r.ns.iter().map(|&n| n as f64).collect();
    let upper = r.distance.iter().zip(&r.distance_half_width).map(|(d, w)| d + w).collect();
    Ok(ReportFile {
        experiment: "phistab".into(),
        passed: r.passed,
        parameters: json!({ "ns": cfg.phistab.ns, "factor": cfg.phistab.factor, "m": cfg.grid.m, "t_final": cfg.time.t_final, "seeds": seeds.len() }),
        metrics: to_value(&r),
        plot: Some(PlotSpec {
            title: "Distance between Phi_n and Phi_2n runs".into(),
            x_label: "n".into(),
            y_label: "E||u_n - u_2n||_L1(Q_T)".into(),
            log_x: true,
            log_y: true,
            series: vec![series("mean", ns.clone(), r.distance.clone(), false), series("upper 95%", ns, upper, true)],
        }),
    })
}

fn initial_continuity(cfg: &RunConfig, seeds: &[u64]) -> Result<ReportFile, RunError> {
    let h_max = cfg.initial_continuity.h_max;
    let solver = cfg.solver_for(cfg.family()?.regularize(cfg.n()?)?, cfg.grid.m, h_max)?;
    let xi = grid_from(&cfg.initial, cfg.grid.dim, cfg.grid.m)?;
    let (kept, excluded) = run_seeds(seeds, |s| Stepper::new(&solver)?.run(&xi, &path_for(&solver, s)?, &Snapshots::Dense))?;
    let trajs: Vec<_> = kept.into_iter().map(|(_, t)| t).collect();
    let xi_n = crate::grid::truncate_initial(&xi, solver.truncation);
    let r = initial_time_continuity(&trajs, &xi_n)?;
    let exclusion_fraction = excluded.len() as f64 / seeds.len().max(1) as f64;
    Ok(ReportFile {
        experiment: "initial-continuity".into(),
        passed: r.passed && exclusion_fraction <= MAX_EXCLUDED,
        parameters: json!({ "h_max": h_max, "dt": solver.dt, "m": cfg.grid.m, "seeds": seeds.len() }),
        metrics: json!({ "report": to_value(&r), "excluded": to_value(&excluded) }),
        plot: Some(PlotSpec {
            title: "Initial-time continuity".into(),
            x_label: "h".into(),
            y_label: "(1/h) E int_0^h ||u - xi||^2".into(),
            log_x: true,
            log_y: true,
            series: vec![series("g(h)", r.hs.clone(), r.g.clone(), false)],
        }),
    })
}

fn mcf_consistency(cfg: &RunConfig) -> Result<ReportFile, RunError> {
    let s = &cfg.mcf_consistency;
    let base = cfg.mcf_config()?;
    let det = McfConfig {
        modes: Vec::new(),
        m: s.m,
        dt: s.dt,
        t_final: s.dt * s.steps as f64,
        ..base.clone()
    };
    let xi = grid_from(&cfg.initial, 1, s.m)?;
    let traj = crate::mcf::run_mcf_u(&det, &xi, &NoisePath::silent(s.dt, s.steps.max(1)), &Snapshots::Dense)?;
    let r = curvature_consistency(&traj)?;
    let solver = cfg.solver_config()?;
    let xi_main = grid_from(&cfg.initial, 1, cfg.grid.m)?;
    let snaps = Snapshots::Times(snapshot_times(solver.t_final, cfg.time.snapshots));
    let stoch = Stepper::new(&solver)?.run(&xi_main, &path_for(&solver, cfg.ensemble.seed_base)?, &snaps)?;
    let curve = reconstruct_curve(&stoch, 0.0)?;
    let max_defect = curve.periodicity_defect.iter().copied().fold(0.0, f64::max);
    let passed = r.relative_residual <= s.tolerance && !curve.non_periodic;
    let mut plot_series: Vec<Series> = Vec::new();
    for j in [0, curve.curves.len() / 2, curve.curves.len() - 1] {
        plot_series.push(series(&format!("t={:.3}", curve.times[j]), curve.x.clone(), curve.curves[j].clone(), false));
    }
    plot_series.dedup_by(|a, b| a.name == b.name);
    Ok(ReportFile {
        experiment: "mcf-consistency".into(),
        passed,
        parameters: json!({ "m": s.m, "dt": s.dt, "steps": s.steps, "n": base.n, "tolerance": s.tolerance, "curve_seed": cfg.ensemble.seed_base }),
        metrics: json!({ "curvature": to_value(&r), "max_periodicity_defect": max_defect, "non_periodic": curve.non_periodic }),
        plot: Some(PlotSpec {
            title: "Graph of the evolving curve".into(),
            x_label: "x".into(),
            y_label: "v".into(),
            log_x: false,
            log_y: false,
            series: plot_series,
        }),
    })
}

fn write_trajectories(cfg: &RunConfig, dir: &Path, files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let solver = cfg.solver_config()?;
    let xi = grid_from(&cfg.initial, cfg.grid.dim, cfg.grid.m)?;
    let snaps = Snapshots::Times(snapshot_times(solver.t_final, cfg.time.snapshots));
    let traj = Stepper::new(&solver)?.run(&xi, &path_for(&solver, cfg.ensemble.seed_base)?, &snaps)?;
    write_trajectory_csv(&dir.join("trajectory.csv"), &traj)?;
    write_trajectory_bin(&dir.join("trajectory.bin"), &traj)?;
    files.push("trajectory.csv".into());
    files.push("trajectory.bin".into());
    if cfg.equation == Equation::Mcf {
        let curve = reconstruct_curve(&traj, 0.0)?;
        write_curves_csv(&dir.join("curve.csv"), &curve.times, &curve.x, &curve.curves)?;
        files.push("curve.csv".into());
    }
    Ok(())
}

/// Runs every listed experiment, writing `<name>.json`, `<name>.svg` and a
/// `manifest.json` of content hashes into `dir`.
pub fn run_experiments(cfg: &RunConfig, dir: &Path) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    fs::create_dir_all(dir)?;
    let seeds = cfg.seeds();
    let mut outcomes = Vec::new();
    let mut files = Vec::new();
    for kind in &cfg.experiments {
        let report = match kind {
            ExperimentKind::Contraction => contraction(cfg, &seeds)?,
            ExperimentKind::Moments => moments(cfg, &seeds)?,
            ExperimentKind::Entropy => entropy(cfg, &seeds)?,
            ExperimentKind::Fracreg => fracreg(cfg, &seeds)?,
            ExperimentKind::Phistab => phistab(cfg, &seeds)?,
            ExperimentKind::InitialContinuity => initial_continuity(cfg, &seeds)?,
            ExperimentKind::McfConsistency => mcf_consistency(cfg)?,
        };
        let name = kind.name();
        write_json(&dir.join(format!("{name}.json")), &report)?;
        files.push(PathBuf::from(format!("{name}.json")));
        if let Some(plot) = &report.plot {
            fs::write(dir.join(format!("{name}.svg")), render_svg(plot))?;
            files.push(PathBuf::from(format!("{name}.svg")));
        }
        outcomes.push(Outcome {
            experiment: name.into(),
            passed: report.passed,
        });
    }
    if cfg.output.trajectories {
        write_trajectories(cfg, dir, &mut files)?;
    }
    let manifest = build_manifest(dir, &files)?;
    write_json(&dir.join("manifest.json"), &manifest)?;
    files.push("manifest.json".into());
    Ok(RunSummary { outcomes, files })
}

/// Reads a report written by [`run_experiments`] and renders its plot.
pub fn plot_report(report: &Path, svg: &Path) -> Result<(), RunError> {
    let text = fs::read_to_string(report)?;
    let parsed: ReportFile = serde_json::from_str(&text).map_err(io::Error::other)?;
    let plot = parsed
        .plot
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "report has no plot"))?;
    fs::write(svg, render_svg(&plot))?;
    Ok(())
}
