//! The linear ODE system `x'(t) = A(t) x(t) + q(t)` and its boundary data.

use crate::dense::Matrix;
use crate::expr::{EvalError, Expression};
use std::fmt;

/// Validation failure while constructing model types.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    ZeroDimension,
    EntryCount { expected: usize, got: usize },
    BadInterval { t0: f64, tm: f64 },
    DimensionMismatch { matrix: usize, forcing: usize },
    NoConstraints,
    TooManyConstraints { got: usize, max: usize },
    InvalidComponent { component: usize, dim: usize },
    DuplicateConstraint { endpoint: Endpoint, component: usize },
    Eval(EvalError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::ZeroDimension => write!(f, "state dimension must be at least 1"),
            ModelError::EntryCount { expected, got } => {
                write!(f, "expected {expected} expression entries, got {got}")
            }
            ModelError::BadInterval { t0, tm } => {
                write!(f, "interval [{t0}, {tm}] must satisfy t0 < tm with finite endpoints")
            }
            ModelError::DimensionMismatch { matrix, forcing } => {
                write!(f, "matrix dimension {matrix} does not match forcing dimension {forcing}")
            }
            ModelError::NoConstraints => write!(f, "at least one constraint is required"),
            ModelError::TooManyConstraints { got, max } => {
                write!(f, "{got} constraints exceed the maximum of {max}")
            }
            ModelError::InvalidComponent { component, dim } => {
                write!(f, "component {component} out of range for dimension {dim}")
            }
            ModelError::DuplicateConstraint { endpoint, component } => {
                write!(f, "duplicate constraint on component {component} at {endpoint:?}")
            }
            ModelError::Eval(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<EvalError> for ModelError {
    fn from(e: EvalError) -> Self {
        ModelError::Eval(e)
    }
}

/// An n×n matrix of expressions, evaluable at any time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMatrix {
    dim: usize,
    entries: Vec<Expression>,
}

impl TimeMatrix {
    /// Row-major entries, `dim * dim` of them.
    pub fn new(dim: usize, entries: Vec<Expression>) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::ZeroDimension);
        }
        if entries.len() != dim * dim {
            return Err(ModelError::EntryCount { expected: dim * dim, got: entries.len() });
        }
        Ok(TimeMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expression {
        &self.entries[i * self.dim + j]
    }

    pub fn eval(&self, t: f64) -> Result<Matrix, EvalError> {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.entry(i, j).eval(t)?;
            }
        }
        Ok(m)
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(Expression::is_constant)
    }
}

/// An n-vector of expressions, evaluable at any time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVector {
    dim: usize,
    entries: Vec<Expression>,
}

impl TimeVector {
    pub fn new(entries: Vec<Expression>) -> Result<Self, ModelError> {
        if entries.is_empty() {
            return Err(ModelError::ZeroDimension);
        }
        Ok(TimeVector { dim: entries.len(), entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize) -> &Expression {
        &self.entries[i]
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>, EvalError> {
        self.entries.iter().map(|e| e.eval(t)).collect()
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(Expression::is_constant)
    }
}

/// Linear ODE system `x' = A(t) x + q(t)` on a time interval.
///
/// A constant `A` is detected at construction; downstream code uses that
/// for exact quadrature guarantees and the matrix-exponential reference.
#[derive(Debug, Clone)]
pub struct LinearOdeSystem {
    a: TimeMatrix,
    q: TimeVector,
    t0: f64,
    tm: f64,
    constant_a: Option<Matrix>,
}

impl LinearOdeSystem {
    pub fn new(a: TimeMatrix, q: TimeVector, t0: f64, tm: f64) -> Result<Self, ModelError> {
        if a.dim() != q.dim() {
            return Err(ModelError::DimensionMismatch { matrix: a.dim(), forcing: q.dim() });
        }
        if !(t0.is_finite() && tm.is_finite() && t0 < tm) {
            return Err(ModelError::BadInterval { t0, tm });
        }
        let constant_a = if a.is_constant() { Some(a.eval(t0)?) } else { None };
        Ok(LinearOdeSystem { a, q, t0, tm, constant_a })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t0, self.tm)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tm(&self) -> f64 {
        self.tm
    }

    pub fn a(&self) -> &TimeMatrix {
        &self.a
    }

    pub fn q(&self) -> &TimeVector {
        &self.q
    }

    pub fn eval_matrix(&self, t: f64) -> Result<Matrix, EvalError> {
        match &self.constant_a {
            Some(m) => Ok(m.clone()),
            None => self.a.eval(t),
        }
    }

    pub fn eval_forcing(&self, t: f64) -> Result<Vec<f64>, EvalError> {
        self.q.eval(t)
    }

    /// Evaluates `(A(t), q(t))`.
    pub fn eval(&self, t: f64) -> Result<(Matrix, Vec<f64>), EvalError> {
        Ok((self.eval_matrix(t)?, self.eval_forcing(t)?))
    }

    /// The state matrix when it does not depend on `t`.
    pub fn constant_matrix(&self) -> Option<&Matrix> {
        self.constant_a.as_ref()
    }
}

/// Which end of the interval a constraint applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Left,
    Right,
}

/// Fixes one solution component at one endpoint: `x_component(endpoint) = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub endpoint: Endpoint,
    /// Zero-based component index.
    pub component: usize,
    pub value: f64,
}

/// Endpoint value constraints. An IVP is the special case of `n`
/// constraints all at the left endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    constraints: Vec<Constraint>,
}

impl BoundaryConditions {
    pub fn new(dim: usize, constraints: Vec<Constraint>) -> Result<Self, ModelError> {
        if constraints.is_empty() {
            return Err(ModelError::NoConstraints);
        }
        if constraints.len() > 2 * dim {
            return Err(ModelError::TooManyConstraints { got: constraints.len(), max: 2 * dim });
        }
        for (i, c) in constraints.iter().enumerate() {
            if c.component >= dim {
                return Err(ModelError::InvalidComponent { component: c.component, dim });
            }
            for prev in &constraints[..i] {
                if prev.endpoint == c.endpoint && prev.component == c.component {
                    return Err(ModelError::DuplicateConstraint {
                        endpoint: c.endpoint,
                        component: c.component,
                    });
                }
            }
        }
        Ok(BoundaryConditions { constraints })
    }

    /// IVP conditions `x(t0) = values`.
    pub fn initial_value(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "initial value vector must be non-empty");
        BoundaryConditions {
            constraints: values
                .iter()
                .enumerate()
                .map(|(component, &value)| Constraint {
                    endpoint: Endpoint::Left,
                    component,
                    value,
                })
                .collect(),
        }
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// True when all `dim` components are constrained at the left endpoint.
    pub fn is_full_initial_value(&self, dim: usize) -> bool {
        self.constraints.len() == dim
            && self.constraints.iter().all(|c| c.endpoint == Endpoint::Left)
            && (0..dim).all(|j| self.constraints.iter().any(|c| c.component == j))
    }

    /// The left-endpoint state, when this is a full IVP.
    pub fn initial_state(&self, dim: usize) -> Option<Vec<f64>> {
        if !self.is_full_initial_value(dim) {
            return None;
        }
        let mut x0 = vec![0.0; dim];
        for c in &self.constraints {
            x0[c.component] = c.value;
        }
        Some(x0)
    }
}
