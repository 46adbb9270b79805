//! Error instrumentation and independent reference solutions.
//!
//! The residual of an approximate solution is
//! `δ(t) = x̃'(t) − A(t) x̃(t) − q(t)`; its L2 norm over the interval is the
//! residual error (the quantity the solver minimizes). The forward error
//! `Δx = x* − x̃` against a reference solution gives the global error.
//!
//! Two reference constructions cross-validate each other: for constant
//! state matrices, variation of constants
//! `x*(t) = e^{A(t−t0)} x0 + ∫ e^{A(t−s)} q(s) ds` with panel-wise Gauss
//! quadrature; otherwise (or as an independent check) classical RK4 on a
//! fine step.

use crate::banded::SymBanded;
use crate::dense::{lu_solve, Matrix};
use crate::expr::EvalError;
use crate::model::{BoundaryConditions, Endpoint, LinearOdeSystem};
use crate::quadrature::QuadRule;
use crate::spline::{HermiteSpline, Mesh, SplineError};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    Eval(EvalError),
    Spline(SplineError),
    NotConstantMatrix,
    WrongConstraintCount { expected: usize, got: usize },
    SingularBoundaryMap,
    DimensionMismatch { expected: usize, got: usize },
    InvalidDenseFactor,
    OutOfDomain { t: f64, t0: f64, tm: f64 },
    NonFinite,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::Eval(e) => write!(f, "{e}"),
            AnalysisError::Spline(e) => write!(f, "{e}"),
            AnalysisError::NotConstantMatrix => {
                write!(f, "this reference construction requires a constant state matrix")
            }
            AnalysisError::WrongConstraintCount { expected, got } => {
                write!(f, "boundary reference needs exactly {expected} constraints, got {got}")
            }
            AnalysisError::SingularBoundaryMap => {
                write!(f, "boundary map is singular: the boundary value problem is ill-posed")
            }
            AnalysisError::DimensionMismatch { expected, got } => {
                write!(f, "expected a vector of length {expected}, got {got}")
            }
            AnalysisError::InvalidDenseFactor => {
                write!(f, "dense_factor must be at least 1")
            }
            AnalysisError::OutOfDomain { t, t0, tm } => {
                write!(f, "t = {t} outside the reference domain [{t0}, {tm}]")
            }
            AnalysisError::NonFinite => write!(f, "matrix exponential overflowed"),
        }
    }
}

impl std::error::Error for AnalysisError {}

impl From<EvalError> for AnalysisError {
    fn from(e: EvalError) -> Self {
        AnalysisError::Eval(e)
    }
}

impl From<SplineError> for AnalysisError {
    fn from(e: SplineError) -> Self {
        AnalysisError::Spline(e)
    }
}

/// Residual `δ(t) = x̃'(t) − A(t) x̃(t) − q(t)` of a spline solution.
pub fn residual_at(
    spline: &HermiteSpline,
    sys: &LinearOdeSystem,
    t: f64,
) -> Result<Vec<f64>, AnalysisError> {
    let x = spline.eval(t)?;
    let dx = spline.eval_deriv(t)?;
    let (a, q) = sys.eval(t)?;
    let ax = a.mul_vec(&x);
    Ok((0..spline.dim()).map(|i| dx[i] - ax[i] - q[i]).collect())
}

/// Residual error `√(∫ δᵀδ dt)` by per-element Gauss quadrature.
pub fn residual_error(
    spline: &HermiteSpline,
    sys: &LinearOdeSystem,
    rule: &QuadRule,
) -> Result<f64, AnalysisError> {
    let mesh = spline.mesh();
    let mut total = 0.0;
    for i in 0..mesh.num_intervals() {
        let h = mesh.spacing(i);
        let left = mesh.knots()[i];
        for (tau, w) in rule.iter() {
            let t = left + tau * h;
            let d = residual_at(spline, sys, t)?;
            total += h * w * d.iter().map(|v| v * v).sum::<f64>();
        }
    }
    Ok(total.sqrt())
}

// Padé(13) coefficients and the scaling threshold for the matrix
// exponential (Higham's scaling-and-squaring constants).
const PADE13_THETA: f64 = 5.371920351148152;
const PADE13_B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential `e^{A t}` by scaling and squaring with a Padé(13)
/// core. Relative accuracy is near machine precision for `‖A t‖ ≤ 50`.
pub fn matrix_exponential(a: &Matrix, t: f64) -> Result<Matrix, AnalysisError> {
    assert_eq!(a.rows(), a.cols(), "matrix exponential needs a square matrix");
    let n = a.rows();
    let at = a.scale(t);
    let norm = at.one_norm();
    if !norm.is_finite() {
        return Err(AnalysisError::NonFinite);
    }
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let squarings = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let scaled = at.scale(0.5f64.powi(squarings as i32));

    let b = &PADE13_B;
    let identity = Matrix::identity(n);
    let a2 = scaled.matmul(&scaled);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);
    let u_inner = a6
        .matmul(&a6.scale(b[13]).add(&a4.scale(b[11])).add(&a2.scale(b[9])))
        .add(&a6.scale(b[7]))
        .add(&a4.scale(b[5]))
        .add(&a2.scale(b[3]))
        .add(&identity.scale(b[1]));
    let u = scaled.matmul(&u_inner);
    let v = a6
        .matmul(&a6.scale(b[12]).add(&a4.scale(b[10])).add(&a2.scale(b[8])))
        .add(&a6.scale(b[6]))
        .add(&a4.scale(b[4]))
        .add(&a2.scale(b[2]))
        .add(&identity.scale(b[0]));

    let numer = v.add(&u);
    let denom = v.sub(&u);
    let mut result =
        crate::dense::lu_solve_matrix(&denom, &numer).map_err(|_| AnalysisError::NonFinite)?;
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    if !result.is_finite() {
        return Err(AnalysisError::NonFinite);
    }
    Ok(result)
}

/// How a reference solution is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// Variation of constants with the matrix exponential (constant `A`).
    MatrixExponential,
    /// Fine fixed-step RK4 integration.
    FineIntegrator,
}

#[derive(Debug, Clone)]
enum RefImpl {
    MatExp { panel_width: f64, rule: QuadRule },
    Rk4 { step: f64 },
}

/// An independently evaluable reference solution `t → x*(t)`.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    sys: LinearOdeSystem,
    x0: Vec<f64>,
    imp: RefImpl,
}

impl ReferenceSolution {
    /// Variation-of-constants reference; requires a constant state matrix.
    /// The convolution integral uses 12-point Gauss panels of width
    /// `(tm − t0) / (m · dense_factor)`.
    pub fn matrix_exponential_ivp(
        sys: &LinearOdeSystem,
        mesh: &Mesh,
        x0: &[f64],
        dense_factor: u32,
    ) -> Result<Self, AnalysisError> {
        if sys.constant_matrix().is_none() {
            return Err(AnalysisError::NotConstantMatrix);
        }
        check_reference_inputs(sys, x0, dense_factor)?;
        let span = sys.tm() - sys.t0();
        let panel_width = span / (mesh.num_intervals() as f64 * dense_factor as f64);
        let rule = QuadRule::gauss_legendre(12).expect("12-point rule is valid");
        Ok(ReferenceSolution {
            sys: sys.clone(),
            x0: x0.to_vec(),
            imp: RefImpl::MatExp { panel_width, rule },
        })
    }

    /// Classical RK4 reference with step `min_i h_i / dense_factor`.
    pub fn fine_rk4_ivp(
        sys: &LinearOdeSystem,
        mesh: &Mesh,
        x0: &[f64],
        dense_factor: u32,
    ) -> Result<Self, AnalysisError> {
        check_reference_inputs(sys, x0, dense_factor)?;
        let step = mesh.min_spacing() / dense_factor as f64;
        Ok(ReferenceSolution {
            sys: sys.clone(),
            x0: x0.to_vec(),
            imp: RefImpl::Rk4 { step },
        })
    }

    pub fn kind(&self) -> ReferenceKind {
        match self.imp {
            RefImpl::MatExp { .. } => ReferenceKind::MatrixExponential,
            RefImpl::Rk4 { .. } => ReferenceKind::FineIntegrator,
        }
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.x0
    }

    /// Evaluates the reference at `t ∈ [t0, tm]`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>, AnalysisError> {
        let (t0, tm) = self.sys.interval();
        if !(t >= t0 && t <= tm) {
            return Err(AnalysisError::OutOfDomain { t, t0, tm });
        }
        if t == t0 {
            return Ok(self.x0.clone());
        }
        match &self.imp {
            RefImpl::MatExp { panel_width, rule } => {
                // March panel by panel with the semigroup identity
                // x(b) = e^{Aw} x(a) + ∫_a^b e^{A(b−s)} q(s) ds, so the
                // exponentials depend only on the shared panel width and
                // are computed once per call instead of once per node.
                let a = self.sys.constant_matrix().expect("checked at construction");
                let panels = ((t - t0) / panel_width).ceil().max(1.0) as usize;
                let width = (t - t0) / panels as f64;
                let step = matrix_exponential(a, width)?;
                let node_exp: Vec<Matrix> = rule
                    .nodes()
                    .iter()
                    .map(|&node| matrix_exponential(a, width * (1.0 - node)))
                    .collect::<Result<_, _>>()?;
                let mut x = self.x0.clone();
                for p in 0..panels {
                    let left = t0 + p as f64 * width;
                    let mut next = step.mul_vec(&x);
                    for ((node, w), e) in rule.iter().zip(&node_exp) {
                        let q = self.sys.eval_forcing(left + node * width)?;
                        let contrib = e.mul_vec(&q);
                        for i in 0..next.len() {
                            next[i] += width * w * contrib[i];
                        }
                    }
                    x = next;
                }
                Ok(x)
            }
            RefImpl::Rk4 { step } => {
                let steps = ((t - t0) / step).ceil().max(1.0) as usize;
                let h = (t - t0) / steps as f64;
                let mut x = self.x0.clone();
                let mut tk = t0;
                for _ in 0..steps {
                    x = rk4_step(&self.sys, tk, &x, h)?;
                    tk += h;
                }
                Ok(x)
            }
        }
    }
}

fn check_reference_inputs(
    sys: &LinearOdeSystem,
    x0: &[f64],
    dense_factor: u32,
) -> Result<(), AnalysisError> {
    if x0.len() != sys.dim() {
        return Err(AnalysisError::DimensionMismatch { expected: sys.dim(), got: x0.len() });
    }
    if dense_factor == 0 {
        return Err(AnalysisError::InvalidDenseFactor);
    }
    Ok(())
}

fn rk4_step(
    sys: &LinearOdeSystem,
    t: f64,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>, AnalysisError> {
    let n = x.len();
    let rhs = |tt: f64, xx: &[f64]| -> Result<Vec<f64>, AnalysisError> {
        let (a, q) = sys.eval(tt)?;
        let mut v = a.mul_vec(xx);
        for i in 0..n {
            v[i] += q[i];
        }
        Ok(v)
    };
    let shifted = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        (0..n).map(|i| x[i] + s * k[i]).collect()
    };
    let k1 = rhs(t, x)?;
    let k2 = rhs(t + 0.5 * h, &shifted(x, &k1, 0.5 * h))?;
    let k3 = rhs(t + 0.5 * h, &shifted(x, &k2, 0.5 * h))?;
    let k4 = rhs(t + h, &shifted(x, &k3, h))?;
    Ok((0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Reference for an initial value problem: matrix-exponential construction
/// when `A` is constant, fine RK4 otherwise.
pub fn reference_ivp(
    sys: &LinearOdeSystem,
    mesh: &Mesh,
    x0: &[f64],
    dense_factor: u32,
) -> Result<ReferenceSolution, AnalysisError> {
    if sys.constant_matrix().is_some() {
        ReferenceSolution::matrix_exponential_ivp(sys, mesh, x0, dense_factor)
    } else {
        ReferenceSolution::fine_rk4_ivp(sys, mesh, x0, dense_factor)
    }
}

/// Reference for a boundary value problem with constant `A` and exactly
/// `n` endpoint constraints, by the fundamental-matrix method: the unknown
/// initial state solves a small linear system built from `e^{A(tm−t0)}`
/// and the particular solution.
pub fn reference_bvp(
    sys: &LinearOdeSystem,
    mesh: &Mesh,
    bcs: &BoundaryConditions,
    dense_factor: u32,
) -> Result<ReferenceSolution, AnalysisError> {
    let n = sys.dim();
    let a = sys.constant_matrix().ok_or(AnalysisError::NotConstantMatrix)?;
    if bcs.len() != n {
        return Err(AnalysisError::WrongConstraintCount { expected: n, got: bcs.len() });
    }
    let phi = matrix_exponential(a, sys.tm() - sys.t0())?;
    let particular =
        ReferenceSolution::matrix_exponential_ivp(sys, mesh, &vec![0.0; n], dense_factor)?;
    let p_tm = particular.eval(sys.tm())?;

    let mut map = Matrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for (row, c) in bcs.constraints().iter().enumerate() {
        match c.endpoint {
            Endpoint::Left => {
                map[(row, c.component)] = 1.0;
                rhs[row] = c.value;
            }
            Endpoint::Right => {
                for j in 0..n {
                    map[(row, j)] = phi[(c.component, j)];
                }
                rhs[row] = c.value - p_tm[c.component];
            }
        }
    }
    let x0 = lu_solve(&map, &rhs).map_err(|_| AnalysisError::SingularBoundaryMap)?;
    ReferenceSolution::matrix_exponential_ivp(sys, mesh, &x0, dense_factor)
}

/// Global error `√(∫ ΔxᵀΔx dt)` with each mesh interval subdivided
/// `refinement` times before quadrature (the forward error oscillates
/// within elements).
pub fn global_error(
    spline: &HermiteSpline,
    reference: &ReferenceSolution,
    rule: &QuadRule,
    refinement: usize,
) -> Result<f64, AnalysisError> {
    let refinement = refinement.max(1);
    let mesh = spline.mesh();
    let mut total = 0.0;
    for i in 0..mesh.num_intervals() {
        let h = mesh.spacing(i) / refinement as f64;
        for r in 0..refinement {
            let left = mesh.knots()[i] + r as f64 * h;
            for (tau, w) in rule.iter() {
                let t = left + tau * h;
                let x_ref = reference.eval(t)?;
                let x = spline.eval(t)?;
                let dx2: f64 =
                    x_ref.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
                total += h * w * dx2;
            }
        }
    }
    Ok(total.sqrt())
}

/// One sampled point of the error report.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub t: f64,
    pub residual_norm: f64,
    pub forward_error_norm: Option<f64>,
}

/// Residual error, optional global error, and pointwise samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub residual_error: f64,
    pub global_error: Option<f64>,
    pub pointwise: Vec<PointSample>,
}

/// Builds an [`ErrorReport`] with samples at the given times.
pub fn error_report(
    spline: &HermiteSpline,
    sys: &LinearOdeSystem,
    reference: Option<&ReferenceSolution>,
    rule: &QuadRule,
    refinement: usize,
    sample_times: &[f64],
) -> Result<ErrorReport, AnalysisError> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut pointwise = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        let residual_norm = norm(&residual_at(spline, sys, t)?);
        let forward_error_norm = match reference {
            Some(r) => {
                let x_ref = r.eval(t)?;
                let x = spline.eval(t)?;
                let diff: Vec<f64> = x_ref.iter().zip(&x).map(|(a, b)| a - b).collect();
                Some(norm(&diff))
            }
            None => None,
        };
        pointwise.push(PointSample { t, residual_norm, forward_error_norm });
    }
    Ok(ErrorReport {
        residual_error: residual_error(spline, sys, rule)?,
        global_error: match reference {
            Some(r) => Some(global_error(spline, r, rule, refinement)?),
            None => None,
        },
        pointwise,
    })
}

/// Condition number `λ_max / λ_min` of a symmetric positive definite
/// banded matrix by dense Jacobi eigensolve. Diagnostic/oracle use only.
pub fn spd_condition_number(f: &SymBanded) -> f64 {
    let eigenvalues = symmetric_eigenvalues(&f.to_dense());
    let min = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max / min
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    assert_eq!(m.rows(), m.cols());
    let n = m.rows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * a.one_norm().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}
