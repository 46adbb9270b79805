//! Residual-optimal Hermite cubic spline solutions of linear ODEs.
//!
//! Given a linear system `x'(t) = A(t) x(t) + q(t)` on a fixed mesh, this
//! crate finds the C¹ piecewise-cubic (Hermite) spline that minimizes the
//! L2 norm of the residual `x̃'(t) − A(t) x̃(t) − q(t)` over the whole
//! interval, subject to initial or boundary conditions. Minimization is
//! done by assembling a symmetric block-banded quadratic form and solving
//! its normal equations with the conjugate gradient method.
//!
//! Pipeline: [`model`] describes the system, [`assembly`] builds the
//! quadratic form and eliminates boundary conditions, [`solver`] runs
//! preconditioned CG on the banded normal equations, and [`analysis`]
//! measures residual and global errors against independent reference
//! solutions. [`pipeline::solve`] wires the stages together.

pub mod analysis;
pub mod assembly;
pub mod banded;
pub mod dense;
pub mod expr;
pub mod model;
pub mod pipeline;
pub mod quadrature;
pub mod solver;
pub mod spline;

pub use analysis::{global_error, matrix_exponential, reference_bvp, reference_ivp, residual_at,
                   residual_error, ErrorReport, ReferenceKind, ReferenceSolution};
pub use assembly::{apply_boundary_conditions, assemble_element, assemble_global,
                   element_residual, local_coefficients, ElementForm, QuadraticForm,
                   ReducedSystem};
pub use banded::SymBanded;
pub use dense::Matrix;
pub use expr::{parse_expression, Expression};
pub use model::{BoundaryConditions, Constraint, Endpoint, LinearOdeSystem, TimeMatrix,
                TimeVector};
pub use pipeline::{solve, SolveOptions, SolveOutcome};
pub use quadrature::QuadRule;
pub use solver::{conjugate_gradient, direct_solve, CgConfig, CgStats, Preconditioner};
pub use spline::{basis, basis_deriv, HermiteSpline, Mesh};

use std::fmt;

/// Any failure from the solve pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Parse(expr::ParseError),
    Eval(expr::EvalError),
    Model(model::ModelError),
    Spline(spline::SplineError),
    Quadrature(quadrature::QuadError),
    Assembly(assembly::AssemblyError),
    Solver(solver::SolverError),
    Analysis(analysis::AnalysisError),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse(e) => write!(f, "{e}"),
            Error::Eval(e) => write!(f, "{e}"),
            Error::Model(e) => write!(f, "{e}"),
            Error::Spline(e) => write!(f, "{e}"),
            Error::Quadrature(e) => write!(f, "{e}"),
            Error::Assembly(e) => write!(f, "{e}"),
            Error::Solver(e) => write!(f, "{e}"),
            Error::Analysis(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<expr::ParseError> for Error {
    fn from(e: expr::ParseError) -> Self {
        Error::Parse(e)
    }
}

impl From<expr::EvalError> for Error {
    fn from(e: expr::EvalError) -> Self {
        Error::Eval(e)
    }
}

impl From<model::ModelError> for Error {
    fn from(e: model::ModelError) -> Self {
        Error::Model(e)
    }
}

impl From<spline::SplineError> for Error {
    fn from(e: spline::SplineError) -> Self {
        Error::Spline(e)
    }
}

impl From<quadrature::QuadError> for Error {
    fn from(e: quadrature::QuadError) -> Self {
        Error::Quadrature(e)
    }
}

impl From<assembly::AssemblyError> for Error {
    fn from(e: assembly::AssemblyError) -> Self {
        Error::Assembly(e)
    }
}

impl From<solver::SolverError> for Error {
    fn from(e: solver::SolverError) -> Self {
        Error::Solver(e)
    }
}

impl From<analysis::AnalysisError> for Error {
    fn from(e: analysis::AnalysisError) -> Self {
        Error::Analysis(e)
    }
}
