//! Hermite cubic splines: mesh, basis functions, evaluation.
//!
//! A spline is determined by value and first derivative at every knot; the
//! piece on `[t_i, t_{i+1}]` with `τ = (t − t_i)/h_i` is
//!
//! ```text
//! x̃(τ) = α0(τ)·x_i + h_i·α1(τ)·x'_i + β0(τ)·x_{i+1} + h_i·β1(τ)·x'_{i+1}
//! ```
//!
//! with `α0 = 2τ³−3τ²+1`, `α1 = τ³−2τ²+τ`, `β0 = −2τ³+3τ²`, `β1 = τ³−τ²`.
//! Adjacent pieces share knot data, so the spline is C¹ by construction.

use std::fmt;

/// Mesh or spline construction/evaluation failure.
#[derive(Debug, Clone, PartialEq)]
pub enum SplineError {
    TooFewKnots { got: usize },
    NotIncreasing { index: usize },
    NonFiniteKnot { index: usize },
    DataShape { expected: usize, got: usize },
    ZeroDimension,
    OutOfDomain { t: f64, t0: f64, tm: f64 },
}

impl fmt::Display for SplineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplineError::TooFewKnots { got } => {
                write!(f, "a mesh needs at least 3 knots, got {got}")
            }
            SplineError::NotIncreasing { index } => {
                write!(f, "knots must be strictly increasing (violated at index {index})")
            }
            SplineError::NonFiniteKnot { index } => {
                write!(f, "knot at index {index} is not finite")
            }
            SplineError::DataShape { expected, got } => {
                write!(f, "spline data has {got} entries, expected {expected}")
            }
            SplineError::ZeroDimension => write!(f, "spline dimension must be at least 1"),
            SplineError::OutOfDomain { t, t0, tm } => {
                write!(f, "t = {t} lies outside the mesh interval [{t0}, {tm}]")
            }
        }
    }
}

impl std::error::Error for SplineError {}

/// Strictly increasing knots `t_0 < t_1 < … < t_m` with `m ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    knots: Vec<f64>,
}

impl Mesh {
    pub fn new(knots: Vec<f64>) -> Result<Self, SplineError> {
        if knots.len() < 3 {
            return Err(SplineError::TooFewKnots { got: knots.len() });
        }
        for (i, k) in knots.iter().enumerate() {
            if !k.is_finite() {
                return Err(SplineError::NonFiniteKnot { index: i });
            }
            if i > 0 && knots[i - 1] >= *k {
                return Err(SplineError::NotIncreasing { index: i });
            }
        }
        Ok(Mesh { knots })
    }

    /// Uniform mesh with `num_knots` points; the endpoints are exact.
    pub fn uniform(t0: f64, tm: f64, num_knots: usize) -> Result<Self, SplineError> {
        if num_knots < 3 {
            return Err(SplineError::TooFewKnots { got: num_knots });
        }
        let m = num_knots - 1;
        let mut knots: Vec<f64> = (0..=m)
            .map(|i| t0 + (tm - t0) * (i as f64) / (m as f64))
            .collect();
        knots[0] = t0;
        knots[m] = tm;
        Mesh::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_knots(&self) -> usize {
        self.knots.len()
    }

    pub fn num_intervals(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.knots[0]
    }

    pub fn tm(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Interval width `h_i = t_{i+1} − t_i`.
    pub fn spacing(&self, i: usize) -> f64 {
        self.knots[i + 1] - self.knots[i]
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.num_intervals()).map(|i| self.spacing(i)).fold(f64::INFINITY, f64::min)
    }

    /// Index `i` of the interval containing `t`, right-closed at `t_m`.
    /// Interior knot hits resolve to the left interval; `t_0` to interval 0.
    pub fn locate(&self, t: f64) -> Result<usize, SplineError> {
        if !(t >= self.t0() && t <= self.tm()) {
            return Err(SplineError::OutOfDomain { t, t0: self.t0(), tm: self.tm() });
        }
        if t == self.t0() {
            return Ok(0);
        }
        Ok(self.knots.partition_point(|k| *k < t) - 1)
    }

    /// Nested refinement: every knot retained, every interval bisected.
    pub fn bisect(&self) -> Mesh {
        let mut knots = Vec::with_capacity(2 * self.knots.len() - 1);
        for i in 0..self.num_intervals() {
            knots.push(self.knots[i]);
            knots.push(0.5 * (self.knots[i] + self.knots[i + 1]));
        }
        knots.push(self.tm());
        Mesh { knots }
    }
}

/// The four Hermite cubic basis values `(α0, α1, β0, β1)` at `τ`.
pub fn basis(tau: f64) -> [f64; 4] {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    [
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + tau,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    ]
}

/// Derivatives `(α0', α1', β0', β1')` with respect to `τ`.
pub fn basis_deriv(tau: f64) -> [f64; 4] {
    let t2 = tau * tau;
    [
        6.0 * t2 - 6.0 * tau,
        3.0 * t2 - 4.0 * tau + 1.0,
        -6.0 * t2 + 6.0 * tau,
        3.0 * t2 - 2.0 * tau,
    ]
}

/// C¹ piecewise cubic defined by per-knot values and derivatives.
///
/// `values`/`derivs` are row-major `(m+1) × dim`: row `i` holds `x_i`
/// respectively `x'_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSpline {
    mesh: Mesh,
    dim: usize,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl HermiteSpline {
    pub fn new(
        mesh: Mesh,
        dim: usize,
        values: Vec<f64>,
        derivs: Vec<f64>,
    ) -> Result<Self, SplineError> {
        if dim == 0 {
            return Err(SplineError::ZeroDimension);
        }
        let expected = mesh.num_knots() * dim;
        if values.len() != expected {
            return Err(SplineError::DataShape { expected, got: values.len() });
        }
        if derivs.len() != expected {
            return Err(SplineError::DataShape { expected, got: derivs.len() });
        }
        Ok(HermiteSpline { mesh, dim, values, derivs })
    }

    /// Unpacks the global unknown layout `y = (x_0, x'_0, …, x_m, x'_m)`.
    pub fn from_packed(mesh: Mesh, dim: usize, y: &[f64]) -> Result<Self, SplineError> {
        let knots = mesh.num_knots();
        if dim == 0 {
            return Err(SplineError::ZeroDimension);
        }
        if y.len() != 2 * dim * knots {
            return Err(SplineError::DataShape { expected: 2 * dim * knots, got: y.len() });
        }
        let mut values = Vec::with_capacity(knots * dim);
        let mut derivs = Vec::with_capacity(knots * dim);
        for i in 0..knots {
            values.extend_from_slice(&y[2 * i * dim..(2 * i + 1) * dim]);
            derivs.extend_from_slice(&y[(2 * i + 1) * dim..(2 * i + 2) * dim]);
        }
        Ok(HermiteSpline { mesh, dim, values, derivs })
    }

    /// Packs knot data back into the global unknown layout.
    pub fn to_packed(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * self.dim * self.mesh.num_knots());
        for i in 0..self.mesh.num_knots() {
            y.extend_from_slice(self.value_at_knot(i));
            y.extend_from_slice(self.deriv_at_knot(i));
        }
        y
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value_at_knot(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn deriv_at_knot(&self, i: usize) -> &[f64] {
        &self.derivs[i * self.dim..(i + 1) * self.dim]
    }

    /// Spline value at `t`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>, SplineError> {
        let i = self.mesh.locate(t)?;
        Ok(self.eval_in_interval(i, t))
    }

    /// Spline derivative at `t`; at knots this returns the stored
    /// derivative row exactly.
    pub fn eval_deriv(&self, t: f64) -> Result<Vec<f64>, SplineError> {
        let i = self.mesh.locate(t)?;
        Ok(self.eval_deriv_in_interval(i, t))
    }

    /// Evaluates piece `i` at `t` without interval lookup. Used directly
    /// for one-sided limits at knots; `t` is not range-checked.
    pub fn eval_in_interval(&self, i: usize, t: f64) -> Vec<f64> {
        let h = self.mesh.spacing(i);
        let tau = (t - self.mesh.knots()[i]) / h;
        let [a0, a1, b0, b1] = basis(tau);
        let xl = self.value_at_knot(i);
        let dl = self.deriv_at_knot(i);
        let xr = self.value_at_knot(i + 1);
        let dr = self.deriv_at_knot(i + 1);
        (0..self.dim)
            .map(|j| a0 * xl[j] + h * a1 * dl[j] + b0 * xr[j] + h * b1 * dr[j])
            .collect()
    }

    /// Derivative of piece `i` at `t` (chain rule brings in `1/h_i`).
    pub fn eval_deriv_in_interval(&self, i: usize, t: f64) -> Vec<f64> {
        let h = self.mesh.spacing(i);
        let tau = (t - self.mesh.knots()[i]) / h;
        let [a0, a1, b0, b1] = basis_deriv(tau);
        let xl = self.value_at_knot(i);
        let dl = self.deriv_at_knot(i);
        let xr = self.value_at_knot(i + 1);
        let dr = self.deriv_at_knot(i + 1);
        (0..self.dim)
            .map(|j| (a0 / h) * xl[j] + a1 * dl[j] + (b0 / h) * xr[j] + b1 * dr[j])
            .collect()
    }
}
