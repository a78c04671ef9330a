use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use gradnoise::coefficients::{check_assumption_sigma, sample_grid};
use gradnoise::config::{parse_config, Equation, ExperimentKind, RunConfig};
use gradnoise::nonlinearity::{check_assumption_a, symmetric_grid, Family};
use gradnoise::runner::{plot_report, run_experiments};

#[derive(Parser)]
#[command(name = "gradnoise", version, about = "Regularized SPDE solver with conservative gradient noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments listed in a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads for ensembles.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory; overrides the config's `output.dir`.
        #[arg(long, env = "GRADNOISE_OUT")]
        out: Option<PathBuf>,
    },
    /// Sample the structural and coefficient conditions of a config.
    CheckAssumptions {
        #[arg(long)]
        config: PathBuf,
        /// Half-width of the sampled `r` interval.
        #[arg(long, default_value_t = 4.0)]
        range: f64,
        /// Sample points per axis.
        #[arg(long, default_value_t = 201)]
        grid: usize,
    },
    /// Render the plot stored in a JSON report.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(config: &Path, jobs: Option<usize>, out: Option<PathBuf>) -> Result<bool, String> {
    let cfg = load(config)?;
    if let Some(jobs) = jobs {
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| e.to_string())?;
        #[cfg(not(feature = "parallel"))]
        let _ = jobs;
    }
    if cfg.experiments.contains(&ExperimentKind::Contraction) && cfg.ensemble.count < 64 {
        eprintln!(
            "warning: contraction with {} seeds; confidence bands will be wide",
            cfg.ensemble.count
        );
    }
    let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
    let summary = run_experiments(&cfg, &dir).map_err(|e| e.to_string())?;
    for o in &summary.outcomes {
        println!("{}: {}", o.experiment, if o.passed { "PASS" } else { "FAIL" });
    }
    println!("wrote {} files to {}", summary.files.len(), dir.display());
    let failures = summary.failures();
    if !failures.is_empty() {
        eprintln!("failed: {}", failures.join(", "));
    }
    Ok(failures.is_empty())
}

fn check(config: &Path, range: f64, grid: usize) -> Result<bool, String> {
    let cfg = load(config)?;
    let family = cfg.family().map_err(|e| e.to_string())?;
    let n = cfg.n().map_err(|e| e.to_string())?;
    let mut failed = Vec::new();
    let structure = match &family {
        Family::Base(base) => {
            let r = check_assumption_a(base, &symmetric_grid(range, grid)).map_err(|e| e.to_string())?;
            if !r.passed {
                failed.push("nonlinearity");
            }
            Some(r)
        }
        Family::Curvature => None,
    };
    let regularization = family.regularize(n).map_err(|e| e.to_string())?.verify();
    if !regularization.passed {
        failed.push("regularization");
    }
    let coeffs = cfg.coefficient_set().map_err(|e| e.to_string())?;
    let sigma = check_assumption_sigma(&coeffs, &sample_grid(cfg.grid.dim, range, grid));
    // The curvature flow has its own mode condition (checked below) in place
    // of the general growth exponents.
    if !sigma.passed && cfg.equation != Equation::Mcf {
        failed.push("coefficients");
    }
    let c3 = if cfg.equation == Equation::Mcf {
        let r = cfg.mcf_config().map_err(|e| e.to_string())?.check_c3(grid);
        if !r.passed {
            failed.push("mcf_modes");
        }
        Some(r)
    } else {
        None
    };
    let report = json!({
        "structure": structure,
        "regularization": regularization,
        "coefficients": sigma,
        "mcf_modes": c3,
        "passed": failed.is_empty(),
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, jobs, out } => run(&config, jobs, out),
        Command::CheckAssumptions { config, range, grid } => check(&config, range, grid),
        Command::Plot { report, out } => plot_report(&report, &out).map(|_| true).map_err(|e| e.to_string()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
