//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use serde_json::Value;

use gradnoise::analysis::path_for;
use gradnoise::coefficients::{Amplitude, CoefficientSet, SpatialProfile};
use gradnoise::config::parse_config;
use gradnoise::grid::GridFunction;
use gradnoise::mcf::McfConfig;
use gradnoise::noise::NoisePath;
use gradnoise::nonlinearity::{mcf_regularize, regularize, Nonlinearity};
use gradnoise::quad::integrate;
use gradnoise::runner::{run_experiments, ReportFile};
use gradnoise::solver::{run, SolverConfig, Snapshots};

struct Line {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn std_coeffs() -> CoefficientSet {
    CoefficientSet::single_mode(SpatialProfile::cosine(0.2, 1.0), Amplitude::Sqrt1pSq)
}

fn mass_run(label: &str, cfg: &SolverConfig, xi: &GridFunction) -> (bool, String) {
    let start = Instant::now();
    let traj = run(xi, cfg, &path_for(cfg, 0).expect("noise"), &Snapshots::Final).expect("run");
    let secs = start.elapsed().as_secs_f64();
    let (per_step, whole) = traj.mass_defects().expect("diagnostics");
    let cells = (cfg.m as f64).powi(cfg.dim() as i32);
    // Both defects are of the cell sum, the stricter of the two scalings.
    let ok = per_step <= 1e-12 * cells && whole <= 1e-9 && secs <= 60.0;
    (
        ok,
        format!("{label}: step {per_step:.2e} run {whole:.2e} ({} steps, {secs:.1}s)", traj.steps),
    )
}

fn mass_conservation() -> Line {
    let m = 256;
    let t_final = 0.05;
    let mut parts = Vec::new();
    let mut passed = true;
    let xi = GridFunction::from_fn(1, m, |x| (TAU * x[0]).cos() + 0.3).expect("grid");
    for (exp, k) in [(2.0, 2.0), (3.0, 3.0)] {
        let nl = regularize(&Nonlinearity::power_law(exp, k).expect("family"), 8).expect("regularize");
        let mut cfg = SolverConfig::new(nl, std_coeffs(), m, 1.0, t_final);
        cfg.dt = cfg.auto_dt(2.0);
        cfg.diagnostics = true;
        let (ok, s) = mass_run(&format!("pme m={exp}"), &cfg, &xi);
        passed &= ok;
        parts.push(s);
    }
    let mc = McfConfig {
        modes: vec![SpatialProfile::cosine(0.05, 1.0)],
        n0: 13.0,
        n: 16,
        m,
        dt: 1.0,
        t_final,
    };
    let mut cfg = mc.solver_config().expect("mcf config");
    cfg.dt = cfg.auto_dt(2.0);
    cfg.diagnostics = true;
    let xi_u = GridFunction::from_fn(1, m, |x| 0.5 * (TAU * x[0]).sin()).expect("grid");
    let (ok, s) = mass_run("mcf", &cfg, &xi_u);
    passed &= ok;
    parts.push(s);
    Line {
        id: 1,
        name: "mass conservation",
        passed,
        detail: parts.join("; "),
    }
}

fn heat_error(m: usize, dt: f64, t_final: f64) -> f64 {
    let nl = regularize(&Nonlinearity::linear(), 2).expect("regularize");
    let cfg = SolverConfig::new(nl, CoefficientSet::zero(1), m, dt, t_final);
    let xi = GridFunction::from_fn(1, m, |x| (TAU * x[0]).cos()).expect("grid");
    let steps = cfg.steps().expect("steps");
    let traj = run(&xi, &cfg, &NoisePath::silent(dt, steps), &Snapshots::Final).expect("run");
    let decay = (-TAU * TAU * t_final).exp();
    let u = traj.last();
    u.points()
        .iter()
        .zip(u.values())
        .map(|(p, v)| (v - decay * (TAU * p[0]).cos()).abs())
        .fold(0.0, f64::max)
}

fn heat_oracle() -> Line {
    let t_final = 0.01;
    let err = heat_error(256, 1e-6, t_final);
    // Spatial order is isolated with a time step small enough that the
    // O(dt) error sits well below the O(h^2) error at both resolutions.
    let ratio = heat_error(128, 1e-7, t_final) / heat_error(256, 1e-7, t_final);
    Line {
        id: 2,
        name: "heat oracle",
        passed: err <= 1e-3 && (3.5..=4.5).contains(&ratio),
        detail: format!("max error {err:.3e} (M=256, dt=1e-6); ratio h->h/2 {ratio:.3} (dt=1e-7)"),
    }
}

fn regularization_contract() -> Line {
    let fam = Nonlinearity::power_law(2.0, 2.0).expect("family");
    let mut passed = true;
    let mut parts = Vec::new();
    for n in [2u32, 4, 8, 16] {
        let rep = regularize(&fam, n).expect("regularize").verify();
        let nf = n as f64;
        let ok = rep.min_a >= 2.0 / nf && rep.approx_sup <= 4.0 / nf;
        passed &= ok;
        parts.push(format!("n={n}: min a {:.4} sup|a-a_n| {:.2e}", rep.min_a, rep.approx_sup));
    }
    Line {
        id: 3,
        name: "regularization contract",
        passed,
        detail: parts.join("; "),
    }
}

fn curvature_construction() -> Line {
    let mut passed = true;
    let mut worst_integral = 0.0f64;
    let mut worst_coercivity = f64::INFINITY;
    let grid: Vec<f64> = (0..=20000).map(|i| -50.0 + 100.0 * i as f64 / 20000.0).collect();
    for n in [1u32, 2, 4, 8, 16] {
        let reg = mcf_regularize(n).expect("regularize");
        let nf = n as f64;
        let c_n = nf + (1.0 + nf * nf) / nf;
        let cutoff = reg.cutoff().expect("curvature profile");
        passed &= (cutoff - c_n).abs() <= 1e-12 * c_n;
        let integral = integrate(|r| reg.b_frak(r).expect("curvature profile"), nf, c_n, 1e-13).expect("quadrature");
        let err = (integral + 0.5 / (1.0 + nf * nf).sqrt()).abs();
        worst_integral = worst_integral.max(err);
        for &r in &grid {
            // slack of 2(1+|r|) over 1/|a_n(r)|, as a ratio
            worst_coercivity = worst_coercivity.min(2.0 * (1.0 + f64::abs(r)) * reg.a_frak(r).abs());
        }
    }
    for &r in &grid {
        let a_inf = 1.0 / (1.0 + r * r).sqrt();
        worst_coercivity = worst_coercivity.min(2.0 * (1.0 + f64::abs(r)) * a_inf);
    }
    passed &= worst_integral <= 1e-10 && worst_coercivity >= 1.0;
    Line {
        id: 4,
        name: "curvature regularization",
        passed,
        detail: format!("max integral error {worst_integral:.2e}; min 2(1+|r|)|a_n(r)| {worst_coercivity:.4}"),
    }
}

fn read_report(dir: &Path, name: &str) -> ReportFile {
    let text = fs::read_to_string(dir.join(format!("{name}.json"))).expect("report");
    serde_json::from_str(&text).expect("report json")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn run_suite(dir: &Path) -> f64 {
    let start = Instant::now();
    for name in ["acceptance", "mcf"] {
        let text = fs::read_to_string(workspace_root().join(format!("configs/{name}.toml"))).expect("config");
        let cfg = parse_config(&text).expect("config parses");
        run_experiments(&cfg, &dir.join(name)).expect("suite runs");
    }
    start.elapsed().as_secs_f64()
}

fn ensemble_lines(dir: &Path) -> Vec<Line> {
    let dir = dir.join("acceptance");
    let mut lines = Vec::new();

    let r = read_report(&dir, "contraction");
    let m = &r.metrics;
    lines.push(Line {
        id: 5,
        name: "L1 contraction",
        passed: r.passed,
        detail: format!(
            "{} seeds; sup upper ratio {:.4} <= exp(C T) = {:.4}; C_hat {:.2}; blow-up {}",
            m["seeds"], f(&m["sup_ratio_upper"]), f(&m["bound"]), f(&m["c_hat"]), m["blowup"]
        ),
    });

    let r = read_report(&dir, "moments");
    lines.push(Line {
        id: 6,
        name: "moment uniformity",
        passed: r.passed,
        detail: format!(
            "spread over n x M: energy {:.3}, L_(m+1) {:.3} (limit {})",
            f(&r.metrics["energy_spread"]),
            f(&r.metrics["lm1_spread"]),
            r.parameters["max_spread"]
        ),
    });

    let r = read_report(&dir, "entropy");
    let m = &r.metrics;
    let levels: Vec<String> = m["levels"]
        .as_array()
        .map(|ls| {
            ls.iter()
                .map(|l| format!("M={} {:.2e}<={:.2e}", l["m"], f(&l["magnitude"]), f(&l["tau"])))
                .collect()
        })
        .unwrap_or_default();
    lines.push(Line {
        id: 7,
        name: "entropy residual",
        passed: r.passed,
        detail: format!(
            "deterministic {:.2e}; {}; shrink {}",
            f(&m["deterministic_residual"]),
            levels.join(", "),
            m["shrink_factors"]
        ),
    });

    let r = read_report(&dir, "fracreg");
    let rep = &r.metrics["report"];
    lines.push(Line {
        id: 8,
        name: "fractional regularity",
        passed: r.passed,
        detail: format!("slope {:.3} >= {:.3}", f(&rep["slope"]), f(&rep["required"]) - 0.15),
    });

    let r = read_report(&dir, "phistab");
    let m = &r.metrics;
    lines.push(Line {
        id: 9,
        name: "Phi-stability",
        passed: r.passed,
        detail: format!(
            "distances {}; decreasing {}; R_(8/n) {} (none = unbounded)",
            m["distance"], m["decreasing"], m["r_lambda"]
        ),
    });
    lines
}

fn json_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for sub in ["acceptance", "mcf"] {
        let Ok(entries) = fs::read_dir(dir.join(sub)) else { continue };
        for e in entries.flatten() {
            let p = e.path();
            if p.extension().is_some_and(|x| x == "json") {
                out.push(p.strip_prefix(dir).expect("inside dir").to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn reproducibility(a: &Path, b: &Path) -> Line {
    let files_a = json_files(a);
    let files_b = json_files(b);
    let mut differing = Vec::new();
    for f in &files_a {
        if fs::read(a.join(f)).ok() != fs::read(b.join(f)).ok() {
            differing.push(f.display().to_string());
        }
    }
    let passed = !files_a.is_empty() && files_a == files_b && differing.is_empty();
    Line {
        id: 10,
        name: "reproducibility",
        passed,
        detail: format!("{} JSON files compared; differing: {:?}", files_a.len(), differing),
    }
}

fn main() -> ExitCode {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let (dir_a, dir_b) = (root.join("run-a"), root.join("run-b"));
    for d in [&dir_a, &dir_b] {
        let _ = fs::remove_dir_all(d);
    }

    let mut lines = vec![
        mass_conservation(),
        heat_oracle(),
        regularization_contract(),
        curvature_construction(),
    ];
    let secs_a = run_suite(&dir_a);
    lines.extend(ensemble_lines(&dir_a));
    let secs_b = run_suite(&dir_b);
    lines.push(reproducibility(&dir_a, &dir_b));

    println!("suite runtimes: {secs_a:.0}s, {secs_b:.0}s; reports in {}", root.display());
    let mut failed = 0;
    for l in &lines {
        println!("{} criterion {:>2} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.id, l.name, l.detail);
        failed += usize::from(!l.passed);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
