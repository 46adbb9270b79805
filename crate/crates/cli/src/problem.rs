//! Problem files: a TOML document describing one linear ODE problem.
//!
//! ```toml
//! n = 2
//! interval = [0.0, 2.0]
//! a = [["-2", "1"], ["1", "-1"]]          # entries in the expression grammar
//! q = ["2*sin(2*t)", "0"]
//!
//! [mesh]
//! points = 13                  # uniform; or knots = [0.0, 0.1, ...]
//!
//! [[constraints]]
//! endpoint = "left"            # or "right"
//! component = 1                # 1-based
//! value = 0.0
//! ```
//!
//! Optional sections: `[solver]` (rel_tol, abs_tol, max_iter,
//! preconditioner, pin_initial_derivative), `[quadrature]` (gauss),
//! `[reference]` (enabled, dense_factor), and a top-level `description`.

use odecg::model::{BoundaryConditions, Constraint, Endpoint, LinearOdeSystem, TimeMatrix,
                   TimeVector};
use odecg::pipeline::SolveOptions;
use odecg::solver::Preconditioner;
use odecg::spline::Mesh;
use serde::Deserialize;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemError {
    Io { path: String, message: String },
    Toml { message: String },
    Field { field: String, message: String },
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::Io { path, message } => write!(f, "cannot read `{path}`: {message}"),
            ProblemError::Toml { message } => write!(f, "problem file is not valid TOML: {message}"),
            ProblemError::Field { field, message } => write!(f, "{field}: {message}"),
        }
    }
}

impl std::error::Error for ProblemError {}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> ProblemError {
    ProblemError::Field { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub description: Option<String>,
    pub n: usize,
    pub interval: [f64; 2],
    pub a: Vec<Vec<String>>,
    pub q: Vec<String>,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    pub solver: Option<SolverSpec>,
    pub quadrature: Option<QuadratureSpec>,
    pub reference: Option<ReferenceSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub points: Option<usize>,
    pub knots: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub endpoint: String,
    /// 1-based component index.
    pub component: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub preconditioner: Option<String>,
    pub pin_initial_derivative: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub gauss: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub enabled: Option<bool>,
    pub dense_factor: Option<u32>,
}

/// A problem file lowered to solver-ready types.
#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub sys: LinearOdeSystem,
    pub mesh: Mesh,
    pub bcs: BoundaryConditions,
    pub options: SolveOptions,
    pub reference_enabled: bool,
    pub dense_factor: u32,
    pub description: String,
}

impl ProblemFile {
    pub fn from_toml_str(text: &str) -> Result<Self, ProblemError> {
        toml::from_str(text).map_err(|e| ProblemError::Toml { message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|e| ProblemError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn build(&self) -> Result<BuiltProblem, ProblemError> {
        let n = self.n;
        if n == 0 {
            return Err(field_error("n", "must be at least 1"));
        }
        let [t0, tm] = self.interval;
        if !(t0.is_finite() && tm.is_finite() && t0 < tm) {
            return Err(field_error("interval", "must be [t0, tm] with finite t0 < tm"));
        }

        if self.a.len() != n {
            return Err(field_error("a", format!("expected {n} rows, got {}", self.a.len())));
        }
        let mut a_entries = Vec::with_capacity(n * n);
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(field_error(
                    format!("a[{}]", i + 1),
                    format!("expected {n} entries, got {}", row.len()),
                ));
            }
            for (j, text) in row.iter().enumerate() {
                let e = odecg::parse_expression(text).map_err(|err| {
                    field_error(format!("a[{}][{}]", i + 1, j + 1), err.to_string())
                })?;
                a_entries.push(e);
            }
        }
        if self.q.len() != n {
            return Err(field_error("q", format!("expected {n} entries, got {}", self.q.len())));
        }
        let mut q_entries = Vec::with_capacity(n);
        for (i, text) in self.q.iter().enumerate() {
            let e = odecg::parse_expression(text)
                .map_err(|err| field_error(format!("q[{}]", i + 1), err.to_string()))?;
            q_entries.push(e);
        }

        let a = TimeMatrix::new(n, a_entries)
            .map_err(|e| field_error("a", e.to_string()))?;
        let q = TimeVector::new(q_entries).map_err(|e| field_error("q", e.to_string()))?;
        let sys = LinearOdeSystem::new(a, q, t0, tm)
            .map_err(|e| field_error("interval", e.to_string()))?;

        let mesh = match (&self.mesh.points, &self.mesh.knots) {
            (Some(points), None) => {
                if *points < 3 {
                    return Err(field_error("mesh.points", "must be at least 3 (m >= 2)"));
                }
                Mesh::uniform(t0, tm, *points)
                    .map_err(|e| field_error("mesh.points", e.to_string()))?
            }
            (None, Some(knots)) => {
                let mesh = Mesh::new(knots.clone())
                    .map_err(|e| field_error("mesh.knots", e.to_string()))?;
                if mesh.t0() != t0 || mesh.tm() != tm {
                    return Err(field_error(
                        "mesh.knots",
                        format!("endpoints [{}, {}] must equal the interval [{t0}, {tm}]",
                                mesh.t0(), mesh.tm()),
                    ));
                }
                mesh
            }
            _ => {
                return Err(field_error(
                    "mesh",
                    "set exactly one of `points` (uniform) or `knots` (explicit)",
                ));
            }
        };

        if self.constraints.is_empty() {
            return Err(field_error("constraints", "at least one constraint is required"));
        }
        let mut constraints = Vec::with_capacity(self.constraints.len());
        for (k, c) in self.constraints.iter().enumerate() {
            let endpoint = match c.endpoint.as_str() {
                "left" => Endpoint::Left,
                "right" => Endpoint::Right,
                other => {
                    return Err(field_error(
                        format!("constraints[{}].endpoint", k + 1),
                        format!("must be \"left\" or \"right\", got \"{other}\""),
                    ));
                }
            };
            if c.component == 0 || c.component > n {
                return Err(field_error(
                    format!("constraints[{}].component", k + 1),
                    format!("must be in 1..={n}, got {}", c.component),
                ));
            }
            if !c.value.is_finite() {
                return Err(field_error(
                    format!("constraints[{}].value", k + 1),
                    "must be finite",
                ));
            }
            constraints.push(Constraint { endpoint, component: c.component - 1, value: c.value });
        }
        let bcs = BoundaryConditions::new(n, constraints)
            .map_err(|e| field_error("constraints", e.to_string()))?;

        let mut options = SolveOptions::default();
        if let Some(solver) = &self.solver {
            if let Some(v) = solver.rel_tol {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(field_error("solver.rel_tol", "must be positive"));
                }
                options.cg.rel_tol = v;
            }
            if let Some(v) = solver.abs_tol {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(field_error("solver.abs_tol", "must be positive"));
                }
                options.cg.abs_tol = v;
            }
            if let Some(v) = solver.max_iter {
                if v == 0 {
                    return Err(field_error("solver.max_iter", "must be at least 1"));
                }
                options.cg.max_iter = Some(v);
            }
            if let Some(p) = &solver.preconditioner {
                options.cg.preconditioner = match p.as_str() {
                    "jacobi" => Preconditioner::Jacobi,
                    "none" => Preconditioner::None,
                    other => {
                        return Err(field_error(
                            "solver.preconditioner",
                            format!("must be \"jacobi\" or \"none\", got \"{other}\""),
                        ));
                    }
                };
            }
            if let Some(pin) = solver.pin_initial_derivative {
                options.pin_initial_derivative = pin;
            }
        }
        if let Some(quadrature) = &self.quadrature {
            if let Some(g) = quadrature.gauss {
                if g == 0 || g > 64 {
                    return Err(field_error("quadrature.gauss", "must be in 1..=64"));
                }
                options.quad_points = g;
            }
        }

        let (reference_enabled, dense_factor) = match &self.reference {
            Some(reference) => {
                let dense_factor = reference.dense_factor.unwrap_or(32);
                if dense_factor == 0 {
                    return Err(field_error("reference.dense_factor", "must be at least 1"));
                }
                (reference.enabled.unwrap_or(true), dense_factor)
            }
            None => (false, 32),
        };

        Ok(BuiltProblem {
            sys,
            mesh,
            bcs,
            options,
            reference_enabled,
            dense_factor,
            description: self.description.clone().unwrap_or_default(),
        })
    }
}
