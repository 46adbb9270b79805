//! The run pipeline: build the problem, solve, write `solution.csv` and a
//! text or JSON report.

use crate::problem::{BuiltProblem, ProblemError, ProblemFile};
use odecg::analysis::{self, ReferenceSolution};
use odecg::pipeline::{self, SolveOutcome};
use odecg::solver::Preconditioner;
use odecg::spline::Mesh;
use serde::Serialize;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    Problem(ProblemError),
    Solve(odecg::Error),
    WarmStart { message: String },
    ReferenceUnavailable { message: String },
    Io { path: String, message: String },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Problem(e) => write!(f, "{e}"),
            CliError::Solve(e) => write!(f, "{e}"),
            CliError::WarmStart { message } => write!(f, "warm start: {message}"),
            CliError::ReferenceUnavailable { message } => write!(f, "reference: {message}"),
            CliError::Io { path, message } => write!(f, "cannot write `{path}`: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        CliError::Problem(e)
    }
}

impl From<odecg::Error> for CliError {
    fn from(e: odecg::Error) -> Self {
        CliError::Solve(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

/// Command-line flags that adjust a run.
#[derive(Debug, Clone)]
pub struct RunFlags {
    /// Uniform sample count for `solution.csv` (all knots are added).
    pub samples: usize,
    pub out_dir: PathBuf,
    pub report_format: ReportFormat,
    /// Overrides the CG relative tolerance.
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Overrides the Gauss points per element.
    pub gauss: Option<usize>,
    pub no_precondition: bool,
    /// Forces reference computation even if the problem file leaves it off.
    pub reference: bool,
    /// CSV whose knot rows seed the CG initial point.
    pub warm_start: Option<PathBuf>,
}

impl Default for RunFlags {
    fn default() -> Self {
        RunFlags {
            samples: 200,
            out_dir: PathBuf::from("."),
            report_format: ReportFormat::Text,
            tol: None,
            max_iter: None,
            gauss: None,
            no_precondition: false,
            reference: false,
            warm_start: None,
        }
    }
}

/// Summary written to `report.{txt,json}`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub problem: String,
    pub state_dimension: usize,
    pub mesh_points: usize,
    pub unknowns: usize,
    pub reduced_unknowns: usize,
    pub cg_iterations: usize,
    pub cg_converged: bool,
    pub cg_final_residual: f64,
    pub residual_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_error: Option<f64>,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "problem: {}", self.problem);
        let _ = writeln!(out, "state dimension: {}", self.state_dimension);
        let _ = writeln!(out, "mesh points: {}", self.mesh_points);
        let _ = writeln!(out, "unknowns: {}", self.unknowns);
        let _ = writeln!(out, "reduced unknowns: {}", self.reduced_unknowns);
        let _ = writeln!(out, "cg iterations: {}", self.cg_iterations);
        let _ = writeln!(out, "cg converged: {}", self.cg_converged);
        let _ = writeln!(out, "cg final residual: {:e}", self.cg_final_residual);
        let _ = writeln!(out, "residual error: {:e}", self.residual_error);
        if let Some(ge) = self.global_error {
            let _ = writeln!(out, "global error: {ge:e}");
        }
        let _ = writeln!(out, "wall time ms: {:.3}", self.wall_time_ms);
        out
    }
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub outcome: SolveOutcome,
    pub csv_path: PathBuf,
    pub report_path: PathBuf,
}

fn full_precision(v: f64) -> String {
    // 17 significant digits: always round-trips an f64 exactly.
    format!("{v:.16e}")
}

/// Builds the reference solution a problem calls for.
fn build_reference(problem: &BuiltProblem) -> Result<ReferenceSolution, CliError> {
    let n = problem.sys.dim();
    if let Some(x0) = problem.bcs.initial_state(n) {
        analysis::reference_ivp(&problem.sys, &problem.mesh, &x0, problem.dense_factor)
            .map_err(|e| CliError::ReferenceUnavailable { message: e.to_string() })
    } else if problem.bcs.len() == n {
        analysis::reference_bvp(&problem.sys, &problem.mesh, &problem.bcs, problem.dense_factor)
            .map_err(|e| CliError::ReferenceUnavailable { message: e.to_string() })
    } else {
        Err(CliError::ReferenceUnavailable {
            message: format!(
                "needs a full initial value or exactly {n} boundary constraints, got {}",
                problem.bcs.len()
            ),
        })
    }
}

/// Uniform sample times merged with the knots, ascending, exact-duplicate
/// free.
fn sample_times(mesh: &Mesh, samples: usize) -> Vec<f64> {
    let (t0, tm) = (mesh.t0(), mesh.tm());
    let mut times: Vec<f64> = mesh.knots().to_vec();
    if samples >= 2 {
        for k in 0..samples {
            times.push(t0 + (tm - t0) * k as f64 / (samples - 1) as f64);
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn load_warm_start(path: &Path, mesh: &Mesh, dim: usize) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::WarmStart {
        message: format!("cannot read `{}`: {e}", path.display()),
    })?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::WarmStart {
        message: "CSV is empty".to_string(),
    })?;
    let columns = header.split(',').count();
    let expected = 2 + 2 * dim;
    if columns != expected {
        return Err(CliError::WarmStart {
            message: format!("expected {expected} columns for dimension {dim}, found {columns}"),
        });
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(columns);
        for part in line.split(',') {
            let v: f64 = part.trim().parse().map_err(|_| CliError::WarmStart {
                message: format!("line {}: `{part}` is not a number", lineno + 2),
            })?;
            row.push(v);
        }
        if row.len() != columns {
            return Err(CliError::WarmStart {
                message: format!("line {}: expected {columns} values", lineno + 2),
            });
        }
        rows.push(row);
    }
    let span = mesh.tm() - mesh.t0();
    let mut packed = vec![0.0; 2 * dim * mesh.num_knots()];
    for (i, &knot) in mesh.knots().iter().enumerate() {
        let row = rows
            .iter()
            .min_by(|a, b| (a[0] - knot).abs().total_cmp(&(b[0] - knot).abs()))
            .ok_or_else(|| CliError::WarmStart { message: "CSV has no data rows".to_string() })?;
        if (row[0] - knot).abs() > 1e-9 * span.max(1.0) {
            return Err(CliError::WarmStart {
                message: format!("no row matches knot t = {knot}"),
            });
        }
        for j in 0..dim {
            packed[2 * i * dim + j] = row[1 + j];
            packed[(2 * i + 1) * dim + j] = row[1 + dim + j];
        }
    }
    Ok(packed)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Runs one problem end to end and writes the output files. Exit-code
/// policy lives in `main`; non-convergence is visible in the report.
pub fn run(
    problem_file: &ProblemFile,
    problem_name: &str,
    flags: &RunFlags,
) -> Result<RunArtifacts, CliError> {
    let mut problem = problem_file.build()?;
    if let Some(tol) = flags.tol {
        problem.options.cg.rel_tol = tol;
    }
    if let Some(max_iter) = flags.max_iter {
        problem.options.cg.max_iter = Some(max_iter);
    }
    if let Some(gauss) = flags.gauss {
        problem.options.quad_points = gauss;
    }
    if flags.no_precondition {
        problem.options.cg.preconditioner = Preconditioner::None;
    }
    if flags.reference {
        problem.reference_enabled = true;
    }

    let warm = match &flags.warm_start {
        Some(path) => Some(load_warm_start(path, &problem.mesh, problem.sys.dim())?),
        None => None,
    };

    let started = Instant::now();
    let reference = if problem.reference_enabled {
        Some(build_reference(&problem)?)
    } else {
        None
    };
    let outcome = pipeline::solve(
        &problem.sys,
        &problem.mesh,
        &problem.bcs,
        &problem.options,
        warm.as_deref(),
        reference.as_ref(),
    )?;
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    let dim = problem.sys.dim();
    let times = sample_times(&problem.mesh, flags.samples);
    let mut csv = String::new();
    csv.push('t');
    for j in 1..=dim {
        let _ = write!(csv, ",x_{j}");
    }
    for j in 1..=dim {
        let _ = write!(csv, ",dx_{j}");
    }
    csv.push_str(",residual_norm\n");
    for &t in &times {
        let x = outcome.spline.eval(t).map_err(odecg::Error::from)?;
        let dx = outcome.spline.eval_deriv(t).map_err(odecg::Error::from)?;
        let delta = analysis::residual_at(&outcome.spline, &problem.sys, t)
            .map_err(odecg::Error::from)?;
        let norm = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        csv.push_str(&full_precision(t));
        for v in x.iter().chain(dx.iter()) {
            csv.push(',');
            csv.push_str(&full_precision(*v));
        }
        csv.push(',');
        csv.push_str(&full_precision(norm));
        csv.push('\n');
    }

    let report = RunReport {
        problem: problem_name.to_string(),
        state_dimension: dim,
        mesh_points: problem.mesh.num_knots(),
        unknowns: outcome.full_size,
        reduced_unknowns: outcome.reduced_size,
        cg_iterations: outcome.cg.iterations,
        cg_converged: outcome.cg.converged,
        cg_final_residual: outcome.cg.final_residual_norm,
        residual_error: outcome.residual_error,
        global_error: outcome.global_error,
        wall_time_ms,
    };

    std::fs::create_dir_all(&flags.out_dir).map_err(|e| CliError::Io {
        path: flags.out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    let csv_path = flags.out_dir.join("solution.csv");
    write_file(&csv_path, &csv)?;
    let report_path = match flags.report_format {
        ReportFormat::Text => {
            let path = flags.out_dir.join("report.txt");
            write_file(&path, &report.to_text())?;
            path
        }
        ReportFormat::Json => {
            let path = flags.out_dir.join("report.json");
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            write_file(&path, &format!("{json}\n"))?;
            path
        }
    };

    Ok(RunArtifacts { report, outcome, csv_path, report_path })
}
