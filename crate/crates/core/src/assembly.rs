//! Assembly of the residual quadratic form.
//!
//! On each mesh interval the residual is linear in the local unknowns
//! `y_i = (x_i, x'_i, x_{i+1}, x'_{i+1})`:
//!
//! ```text
//! δ_i(τ) = a_i x_i + b_i x'_i + c_i x_{i+1} + d_i x'_{i+1} − q,
//! a_i = (α0'/h_i)E − α0 A,   b_i = α1'E − h_i α1 A,
//! c_i = (β0'/h_i)E − β0 A,   d_i = β1'E − h_i β1 A.
//! ```
//!
//! Quadrature of `δᵀδ` gives a 4n×4n element block `F_i`, a 4n vector
//! `B_i` and a scalar, which scatter into the global banded form so that
//! the whole objective is `yᵀF y − 2 Bᵀy + c`. Boundary conditions are
//! eliminated by substitution: constrained rows/columns are removed and
//! their values folded into the right-hand side.

use crate::banded::SymBanded;
use crate::dense::Matrix;
use crate::expr::EvalError;
use crate::model::{BoundaryConditions, Constraint, Endpoint, LinearOdeSystem};
use crate::quadrature::QuadRule;
use crate::spline::{basis, basis_deriv, Mesh};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum AssemblyError {
    Eval(EvalError),
    DimensionMismatch { system: usize, expected: usize, got: usize },
    IntervalMismatch { system: (f64, f64), mesh: (f64, f64) },
    FixedIndexOutOfRange { index: usize, size: usize },
    DuplicateFixedIndex { index: usize },
    NotInitialValueProblem,
}

impl fmt::Display for AssemblyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyError::Eval(e) => write!(f, "{e}"),
            AssemblyError::DimensionMismatch { system, expected, got } => write!(
                f,
                "local vector for an n = {system} system must have {expected} entries, got {got}"
            ),
            AssemblyError::IntervalMismatch { system, mesh } => write!(
                f,
                "mesh [{}, {}] does not match the system interval [{}, {}]",
                mesh.0, mesh.1, system.0, system.1
            ),
            AssemblyError::FixedIndexOutOfRange { index, size } => {
                write!(f, "fixed unknown index {index} out of range for size {size}")
            }
            AssemblyError::DuplicateFixedIndex { index } => {
                write!(f, "unknown index {index} is fixed more than once")
            }
            AssemblyError::NotInitialValueProblem => {
                write!(f, "pinning initial derivatives requires a full set of left-endpoint constraints")
            }
        }
    }
}

impl std::error::Error for AssemblyError {}

impl From<EvalError> for AssemblyError {
    fn from(e: EvalError) -> Self {
        AssemblyError::Eval(e)
    }
}

/// The four n×n coefficient blocks of the residual at one quadrature point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCoefficients {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl LocalCoefficients {
    /// The stacked n×4n block `G = [a | b | c | d]`.
    pub fn stacked(&self) -> Matrix {
        let n = self.a.rows();
        Matrix::from_fn(n, 4 * n, |i, j| match j / n {
            0 => self.a[(i, j % n)],
            1 => self.b[(i, j % n)],
            2 => self.c[(i, j % n)],
            _ => self.d[(i, j % n)],
        })
    }
}

/// Residual coefficient blocks on interval `i` at local coordinate `τ`.
pub fn local_coefficients(
    sys: &LinearOdeSystem,
    mesh: &Mesh,
    interval: usize,
    tau: f64,
) -> Result<LocalCoefficients, AssemblyError> {
    let n = sys.dim();
    let h = mesh.spacing(interval);
    let t = mesh.knots()[interval] + tau * h;
    let a_mat = sys.eval_matrix(t)?;
    let [al0, al1, be0, be1] = basis(tau);
    let [dal0, dal1, dbe0, dbe1] = basis_deriv(tau);
    let block = |shape: f64, deriv_shape: f64| {
        Matrix::from_fn(n, n, |i, j| {
            let diag = if i == j { deriv_shape } else { 0.0 };
            diag - shape * a_mat[(i, j)]
        })
    };
    Ok(LocalCoefficients {
        a: block(al0, dal0 / h),
        b: block(h * al1, dal1),
        c: block(be0, dbe0 / h),
        d: block(h * be1, dbe1),
    })
}

/// Residual `δ_i` at `τ` for the local unknowns `y_i = (x_i, x'_i, x_{i+1}, x'_{i+1})`.
pub fn element_residual(
    sys: &LinearOdeSystem,
    mesh: &Mesh,
    interval: usize,
    tau: f64,
    y_local: &[f64],
) -> Result<Vec<f64>, AssemblyError> {
    let n = sys.dim();
    if y_local.len() != 4 * n {
        return Err(AssemblyError::DimensionMismatch {
            system: n,
            expected: 4 * n,
            got: y_local.len(),
        });
    }
    let coeffs = local_coefficients(sys, mesh, interval, tau)?;
    let t = mesh.knots()[interval] + tau * mesh.spacing(interval);
    let q = sys.eval_forcing(t)?;
    let mut delta = vec![0.0; n];
    for (block, values) in [&coeffs.a, &coeffs.b, &coeffs.c, &coeffs.d]
        .into_iter()
        .zip(y_local.chunks_exact(n))
    {
        for i in 0..n {
            for j in 0..n {
                delta[i] += block[(i, j)] * values[j];
            }
        }
    }
    for i in 0..n {
        delta[i] -= q[i];
    }
    Ok(delta)
}

/// One element's contribution: `I_i = y_iᵀ F_i y_i − 2 B_iᵀ y_i + ∫ qᵀq dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementForm {
    /// Symmetric PSD 4n×4n block.
    pub f_local: Matrix,
    pub b_local: Vec<f64>,
    /// `∫ qᵀq dt` over the element.
    pub c_local: f64,
}

/// Integrates the element block by quadrature mapped from [0,1] to the
/// interval (the `h_i` factor). For constant `A` the integrands are
/// polynomials of degree ≤ 6 in `τ`, so any Gauss rule with g ≥ 4 is exact
/// up to rounding.
pub fn assemble_element(
    sys: &LinearOdeSystem,
    mesh: &Mesh,
    interval: usize,
    rule: &QuadRule,
) -> Result<ElementForm, AssemblyError> {
    let n = sys.dim();
    let h = mesh.spacing(interval);
    let mut f_local = Matrix::zeros(4 * n, 4 * n);
    let mut b_local = vec![0.0; 4 * n];
    let mut c_local = 0.0;
    for (tau, w) in rule.iter() {
        let g = local_coefficients(sys, mesh, interval, tau)?.stacked();
        let t = mesh.knots()[interval] + tau * h;
        let q = sys.eval_forcing(t)?;
        let wh = w * h;
        for p in 0..4 * n {
            for s in 0..4 * n {
                let mut dot = 0.0;
                for r in 0..n {
                    dot += g[(r, p)] * g[(r, s)];
                }
                f_local[(p, s)] += wh * dot;
            }
            let mut dot = 0.0;
            for r in 0..n {
                dot += g[(r, p)] * q[r];
            }
            b_local[p] += wh * dot;
        }
        c_local += wh * q.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(ElementForm { f_local, b_local, c_local })
}

/// Global quadratic form `yᵀF y − 2 Bᵀy + c` over the packed unknowns
/// `y = (x_0, x'_0, x_1, x'_1, …, x_m, x'_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    f: SymBanded,
    b: Vec<f64>,
    c: f64,
    state_dim: usize,
    num_knots: usize,
}

impl QuadraticForm {
    pub fn f(&self) -> &SymBanded {
        &self.f
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// The constant term `Σ_i ∫ qᵀq dt`.
    pub fn constant(&self) -> f64 {
        self.c
    }

    /// Total unknown count `N = 2n(m+1)`.
    pub fn size(&self) -> usize {
        self.b.len()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn num_knots(&self) -> usize {
        self.num_knots
    }

    /// Global index of component `comp` of `x_knot`.
    pub fn value_index(&self, knot: usize, comp: usize) -> usize {
        debug_assert!(knot < self.num_knots && comp < self.state_dim);
        2 * knot * self.state_dim + comp
    }

    /// Global index of component `comp` of `x'_knot`.
    pub fn deriv_index(&self, knot: usize, comp: usize) -> usize {
        debug_assert!(knot < self.num_knots && comp < self.state_dim);
        (2 * knot + 1) * self.state_dim + comp
    }

    /// Objective value `yᵀF y − 2 Bᵀy + c`.
    pub fn objective(&self, y: &[f64]) -> f64 {
        let fy = self.f.matvec(y);
        let yfy: f64 = y.iter().zip(&fy).map(|(a, b)| a * b).sum();
        let by: f64 = y.iter().zip(&self.b).map(|(a, b)| a * b).sum();
        yfy - 2.0 * by + self.c
    }

    /// Objective gradient `2(F y − B)`.
    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let fy = self.f.matvec(y);
        fy.iter().zip(&self.b).map(|(a, b)| 2.0 * (a - b)).collect()
    }
}

/// Assembles every element and scatters the blocks into the global banded
/// form. Element `i` occupies rows/columns `[2in, 2in+4n)`; adjacent
/// blocks overlap in a 2n×2n sub-block whose entries sum.
pub fn assemble_global(
    sys: &LinearOdeSystem,
    mesh: &Mesh,
    rule: &QuadRule,
) -> Result<QuadraticForm, AssemblyError> {
    if mesh.t0() != sys.t0() || mesh.tm() != sys.tm() {
        return Err(AssemblyError::IntervalMismatch {
            system: sys.interval(),
            mesh: (mesh.t0(), mesh.tm()),
        });
    }
    let n = sys.dim();
    let size = 2 * n * mesh.num_knots();
    let mut f = SymBanded::zeros(size, 4 * n - 1);
    let mut b = vec![0.0; size];
    let mut c = 0.0;
    for i in 0..mesh.num_intervals() {
        let element = assemble_element(sys, mesh, i, rule)?;
        let base = 2 * i * n;
        for p in 0..4 * n {
            b[base + p] += element.b_local[p];
            for s in 0..=p {
                f.add_lower(base + p, base + s, element.f_local[(p, s)]);
            }
        }
        c += element.c_local;
    }
    Ok(QuadraticForm { f, b, c, state_dim: n, num_knots: mesh.num_knots() })
}

/// The quadratic form after eliminating fixed unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    f: SymBanded,
    b: Vec<f64>,
    c: f64,
    /// reduced index → original index
    free: Vec<usize>,
    /// (original index, substituted value)
    fixed: Vec<(usize, f64)>,
    full_size: usize,
}

impl ReducedSystem {
    pub fn f(&self) -> &SymBanded {
        &self.f
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Constant term of the reduced objective (fixed-value contributions
    /// folded in).
    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn size(&self) -> usize {
        self.free.len()
    }

    pub fn full_size(&self) -> usize {
        self.full_size
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn fixed_values(&self) -> &[(usize, f64)] {
        &self.fixed
    }

    /// Reconstructs the full unknown vector from a reduced one.
    pub fn expand(&self, y_reduced: &[f64]) -> Vec<f64> {
        assert_eq!(y_reduced.len(), self.free.len());
        let mut y = vec![0.0; self.full_size];
        for (r, &k) in self.free.iter().enumerate() {
            y[k] = y_reduced[r];
        }
        for &(k, v) in &self.fixed {
            y[k] = v;
        }
        y
    }

    /// Extracts the free entries of a full vector (warm starts).
    pub fn restrict(&self, y_full: &[f64]) -> Vec<f64> {
        assert_eq!(y_full.len(), self.full_size);
        self.free.iter().map(|&k| y_full[k]).collect()
    }

    /// Reduced objective `yᵀF y − 2 Bᵀy + c`; equals the full objective at
    /// the expanded vector.
    pub fn objective(&self, y_reduced: &[f64]) -> f64 {
        let fy = self.f.matvec(y_reduced);
        let yfy: f64 = y_reduced.iter().zip(&fy).map(|(a, b)| a * b).sum();
        let by: f64 = y_reduced.iter().zip(&self.b).map(|(a, b)| a * b).sum();
        yfy - 2.0 * by + self.c
    }
}

/// Eliminates arbitrary fixed unknowns by substitution: for each fixed
/// index `k` with value `v`, the right-hand side loses `v` times column
/// `k` of `F`, then row/column `k` are deleted.
pub fn reduce_system(
    qf: &QuadraticForm,
    fixed: &[(usize, f64)],
) -> Result<ReducedSystem, AssemblyError> {
    let size = qf.size();
    let mut is_fixed = vec![false; size];
    for &(k, _) in fixed {
        if k >= size {
            return Err(AssemblyError::FixedIndexOutOfRange { index: k, size });
        }
        if is_fixed[k] {
            return Err(AssemblyError::DuplicateFixedIndex { index: k });
        }
        is_fixed[k] = true;
    }
    let free: Vec<usize> = (0..size).filter(|&k| !is_fixed[k]).collect();
    let hb = qf.f.half_bandwidth();

    // Bandwidth of the reduced matrix: widest surviving coupling.
    let mut reduced_hb = 0;
    for r in 0..free.len() {
        let mut s = r + reduced_hb;
        while s + 1 < free.len() && free[s + 1] - free[r] <= hb {
            s += 1;
        }
        reduced_hb = reduced_hb.max(s - r);
    }

    let mut f = SymBanded::zeros(free.len(), reduced_hb);
    for (r, &k) in free.iter().enumerate() {
        let end = free.len().min(r + reduced_hb + 1);
        for (s, &l) in free.iter().enumerate().take(end).skip(r) {
            if l - k > hb {
                break;
            }
            f.add_lower(s, r, qf.f.get(l, k));
        }
    }

    let mut b: Vec<f64> = free.iter().map(|&k| qf.b[k]).collect();
    for (r, &k) in free.iter().enumerate() {
        for &(l, v) in fixed {
            b[r] -= v * qf.f.get(k, l);
        }
    }

    // Constant picks up vᵀF_kk v − 2 B_kᵀ v from the substitution.
    let mut c = qf.constant();
    for &(k, vk) in fixed {
        for &(l, vl) in fixed {
            c += vk * vl * qf.f.get(k, l);
        }
        c -= 2.0 * vk * qf.b[k];
    }

    Ok(ReducedSystem {
        f,
        b,
        c,
        free,
        fixed: fixed.to_vec(),
        full_size: size,
    })
}

/// Global index of the value unknown a constraint refers to.
pub fn constraint_index(qf: &QuadraticForm, constraint: &Constraint) -> usize {
    let knot = match constraint.endpoint {
        Endpoint::Left => 0,
        Endpoint::Right => qf.num_knots() - 1,
    };
    qf.value_index(knot, constraint.component)
}

/// Eliminates the boundary conditions. For an IVP with all components
/// fixed at the left endpoint this removes exactly the first n rows and
/// columns.
pub fn apply_boundary_conditions(
    qf: &QuadraticForm,
    bcs: &BoundaryConditions,
) -> Result<ReducedSystem, AssemblyError> {
    let fixed: Vec<(usize, f64)> = bcs
        .constraints()
        .iter()
        .map(|c| (constraint_index(qf, c), c.value))
        .collect();
    reduce_system(qf, &fixed)
}

/// Additional pins `x'_0 = A(t_0) x_0 + q(t_0)` for a full IVP; off by
/// default in the pipeline since the boundary elimination alone matches
/// the normal-equation formulation.
pub fn initial_derivative_pins(
    sys: &LinearOdeSystem,
    qf: &QuadraticForm,
    bcs: &BoundaryConditions,
) -> Result<Vec<(usize, f64)>, AssemblyError> {
    let n = sys.dim();
    let x0 = bcs.initial_state(n).ok_or(AssemblyError::NotInitialValueProblem)?;
    let (a, q) = sys.eval(sys.t0())?;
    let dx0 = a.mul_vec(&x0);
    Ok((0..n).map(|j| (qf.deriv_index(0, j), dx0[j] + q[j])).collect())
}
