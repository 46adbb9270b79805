use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use odecg_cli::{presets, problem::ProblemFile, runner};
use std::path::PathBuf;

/// Residual-optimal Hermite cubic spline solver for linear ODE initial
/// and boundary value problems.
#[derive(Parser)]
#[command(name = "odecg", version, about)]
struct Cli {
    /// Problem file (TOML)
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    problem: Option<PathBuf>,

    /// Bundled preset name (see --list-presets)
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// List bundled presets and exit
    #[arg(long)]
    list_presets: bool,

    /// Uniform sample count for solution.csv; all knots are added
    #[arg(long, value_name = "INT", default_value_t = 200)]
    samples: usize,

    /// Output directory for solution.csv and the report
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Report format
    #[arg(long, value_enum, default_value_t = ReportArg::Text)]
    report: ReportArg,

    /// CG relative tolerance override
    #[arg(long, value_name = "REAL")]
    tol: Option<f64>,

    /// CG iteration cap override
    #[arg(long, value_name = "INT")]
    max_iter: Option<usize>,

    /// Gauss points per element
    #[arg(long, value_name = "INT")]
    gauss: Option<usize>,

    /// Disable Jacobi preconditioning
    #[arg(long)]
    no_precondition: bool,

    /// Compute a reference solution and report the global error
    #[arg(long)]
    reference: bool,

    /// Solution CSV whose knot rows seed the CG initial point
    #[arg(long, value_name = "CSV")]
    warm_start: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportArg {
    Text,
    Json,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    if cli.list_presets {
        for (name, description) in presets::list() {
            println!("{name:<16} {description}");
        }
        return 0;
    }

    let (problem, name) = match (&cli.problem, &cli.preset) {
        (Some(path), None) => match ProblemFile::load(path) {
            Ok(p) => (p, path.display().to_string()),
            Err(e) => {
                eprintln!("error: {e}");
                return 1;
            }
        },
        (None, Some(preset_name)) => match presets::find(preset_name) {
            Some(preset) => match preset.parse() {
                Ok(p) => (p, preset_name.clone()),
                Err(e) => {
                    eprintln!("error: preset {preset_name}: {e}");
                    return 1;
                }
            },
            None => {
                eprintln!(
                    "error: unknown preset `{preset_name}`; use --list-presets to see the options"
                );
                return 1;
            }
        },
        _ => {
            eprintln!("error: provide exactly one of --problem or --preset (or --list-presets)");
            return 1;
        }
    };

    let flags = runner::RunFlags {
        samples: cli.samples,
        out_dir: cli.out.clone(),
        report_format: match cli.report {
            ReportArg::Text => runner::ReportFormat::Text,
            ReportArg::Json => runner::ReportFormat::Json,
        },
        tol: cli.tol,
        max_iter: cli.max_iter,
        gauss: cli.gauss,
        no_precondition: cli.no_precondition,
        reference: cli.reference,
        warm_start: cli.warm_start.clone(),
    };

    match runner::run(&problem, &name, &flags) {
        Ok(artifacts) => {
            print!("{}", artifacts.report.to_text());
            println!("solution: {}", artifacts.csv_path.display());
            println!("report: {}", artifacts.report_path.display());
            if artifacts.report.cg_converged {
                0
            } else {
                eprintln!("warning: conjugate gradient did not converge");
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
