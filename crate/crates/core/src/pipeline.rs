//! End-to-end solve: assemble, eliminate boundary conditions, run CG,
//! unpack the spline and measure errors.

use crate::analysis::{self, ReferenceSolution};
use crate::assembly::{self, QuadraticForm, ReducedSystem};
use crate::model::{BoundaryConditions, LinearOdeSystem};
use crate::quadrature::QuadRule;
use crate::solver::{conjugate_gradient, CgConfig, CgStats};
use crate::spline::{HermiteSpline, Mesh};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Gauss points per element (exact for constant `A` from 4 up).
    pub quad_points: usize,
    pub cg: CgConfig,
    /// Additionally pin `x'_0 = A(t_0) x_0 + q(t_0)` on IVPs, shrinking
    /// the reduced system by `n` more unknowns. Off by default.
    pub pin_initial_derivative: bool,
    /// Sub-intervals per element when integrating the forward error.
    pub global_error_refinement: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            quad_points: 8,
            cg: CgConfig::default(),
            pin_initial_derivative: false,
            global_error_refinement: 8,
        }
    }
}

/// Everything a solve produces.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub spline: HermiteSpline,
    pub cg: CgStats,
    pub full_size: usize,
    pub reduced_size: usize,
    /// L2 norm of the residual over the interval.
    pub residual_error: f64,
    /// L2 norm of the forward error, when a reference was supplied.
    pub global_error: Option<f64>,
    /// Value of the assembled objective at the solution.
    pub objective_value: f64,
}

/// Assembles and reduces the quadratic form for a problem. Exposed so
/// callers can inspect the system (size, conditioning) without solving.
pub fn assemble_reduced(
    sys: &LinearOdeSystem,
    mesh: &Mesh,
    bcs: &BoundaryConditions,
    opts: &SolveOptions,
) -> Result<(QuadraticForm, ReducedSystem), Error> {
    let rule = QuadRule::gauss_legendre(opts.quad_points)?;
    let qf = assembly::assemble_global(sys, mesh, &rule)?;
    let mut fixed: Vec<(usize, f64)> = bcs
        .constraints()
        .iter()
        .map(|c| (assembly::constraint_index(&qf, c), c.value))
        .collect();
    if opts.pin_initial_derivative {
        fixed.extend(assembly::initial_derivative_pins(sys, &qf, bcs)?);
    }
    let reduced = assembly::reduce_system(&qf, &fixed)?;
    Ok((qf, reduced))
}

/// Solves the residual-minimization problem on the given mesh.
///
/// `warm_start` is a full packed unknown vector `(x_0, x'_0, …)` used as
/// the CG initial iterate after restriction to the free unknowns.
pub fn solve(
    sys: &LinearOdeSystem,
    mesh: &Mesh,
    bcs: &BoundaryConditions,
    opts: &SolveOptions,
    warm_start: Option<&[f64]>,
    reference: Option<&ReferenceSolution>,
) -> Result<SolveOutcome, Error> {
    let rule = QuadRule::gauss_legendre(opts.quad_points)?;
    let (qf, reduced) = assemble_reduced(sys, mesh, bcs, opts)?;
    let x0 = warm_start.map(|y| reduced.restrict(y));
    let (y_reduced, cg) =
        conjugate_gradient(reduced.f(), reduced.b(), x0.as_deref(), &opts.cg)?;
    let y = reduced.expand(&y_reduced);
    let spline = HermiteSpline::from_packed(mesh.clone(), sys.dim(), &y)?;
    let residual_error = analysis::residual_error(&spline, sys, &rule)?;
    let global_error = match reference {
        Some(r) => Some(analysis::global_error(
            &spline,
            r,
            &rule,
            opts.global_error_refinement,
        )?),
        None => None,
    };
    Ok(SolveOutcome {
        objective_value: qf.objective(&y),
        full_size: qf.size(),
        reduced_size: reduced.size(),
        spline,
        cg,
        residual_error,
        global_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::reference_ivp;
    use crate::expr::parse_expression;
    use crate::model::{TimeMatrix, TimeVector};

    fn system(n: usize, a: &[&str], q: &[&str], t0: f64, tm: f64) -> LinearOdeSystem {
        let a = TimeMatrix::new(n, a.iter().map(|s| parse_expression(s).unwrap()).collect())
            .unwrap();
        let q = TimeVector::new(q.iter().map(|s| parse_expression(s).unwrap()).collect())
            .unwrap();
        LinearOdeSystem::new(a, q, t0, tm).unwrap()
    }

    #[test]
    fn constant_problem_is_solved_exactly() {
        // x' = 0, x(0) = 1: the spline stays at 1 with zero derivative
        let sys = system(1, &["0"], &["0"], 0.0, 1.0);
        let mesh = Mesh::uniform(0.0, 1.0, 5).unwrap();
        let bcs = BoundaryConditions::initial_value(&[1.0]);
        let out = solve(&sys, &mesh, &bcs, &SolveOptions::default(), None, None).unwrap();
        assert!(out.cg.converged);
        assert!(out.residual_error < 1e-12);
        for &t in &[0.0, 0.3, 1.0] {
            assert!((out.spline.eval(t).unwrap()[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sizes_are_reported() {
        let sys = system(2, &["-2", "1", "1", "-1"], &["2*sin(2*t)", "0"], 0.0, 2.0);
        let mesh = Mesh::uniform(0.0, 2.0, 13).unwrap();
        let bcs = BoundaryConditions::initial_value(&[0.0, 0.0]);
        let out = solve(&sys, &mesh, &bcs, &SolveOptions::default(), None, None).unwrap();
        assert_eq!(out.full_size, 52);
        assert_eq!(out.reduced_size, 50);
        assert!(out.cg.converged);
    }

    #[test]
    fn warm_start_with_solution_takes_no_iterations() {
        let sys = system(2, &["-2", "1", "1", "-1"], &["2*sin(2*t)", "0"], 0.0, 2.0);
        let mesh = Mesh::uniform(0.0, 2.0, 9).unwrap();
        let bcs = BoundaryConditions::initial_value(&[0.0, 0.0]);
        let opts = SolveOptions::default();
        let first = solve(&sys, &mesh, &bcs, &opts, None, None).unwrap();
        let packed = first.spline.to_packed();
        let again = solve(&sys, &mesh, &bcs, &opts, Some(&packed), None).unwrap();
        assert!(again.cg.converged);
        assert!(
            again.cg.iterations <= 1,
            "warm start took {} iterations",
            again.cg.iterations
        );
    }

    #[test]
    fn objective_equals_squared_residual_error() {
        let sys = system(2, &["-2", "1", "1", "-1"], &["2*sin(2*t)", "0"], 0.0, 2.0);
        let mesh = Mesh::uniform(0.0, 2.0, 9).unwrap();
        let bcs = BoundaryConditions::initial_value(&[0.0, 0.0]);
        let out = solve(&sys, &mesh, &bcs, &SolveOptions::default(), None, None).unwrap();
        // At the optimum the quadratic form cancels almost completely, so
        // the comparison is anchored to the O(1) scale of its terms.
        let diff = (out.objective_value - out.residual_error.powi(2)).abs();
        assert!(
            diff <= 1e-12,
            "objective {} vs squared residual error {}",
            out.objective_value,
            out.residual_error.powi(2)
        );
    }

    #[test]
    fn pinning_initial_derivatives_shrinks_the_system() {
        let sys = system(2, &["-2", "1", "1", "-1"], &["2*sin(2*t)", "0"], 0.0, 2.0);
        let mesh = Mesh::uniform(0.0, 2.0, 9).unwrap();
        let bcs = BoundaryConditions::initial_value(&[0.0, 0.0]);
        let opts = SolveOptions { pin_initial_derivative: true, ..SolveOptions::default() };
        let out = solve(&sys, &mesh, &bcs, &opts, None, None).unwrap();
        assert_eq!(out.reduced_size, out.full_size - 4);
        assert!(out.cg.converged);
        // pinned x'_0 must match the ODE at t0
        let d0 = out.spline.deriv_at_knot(0);
        assert_eq!(d0, &[0.0, 0.0]);

        // more constraints can only increase the optimal residual
        let free = solve(&sys, &mesh, &bcs, &SolveOptions::default(), None, None).unwrap();
        assert!(out.residual_error >= free.residual_error - 1e-12);
    }

    #[test]
    fn global_error_is_attached_when_reference_given() {
        let sys = system(1, &["-1"], &["0"], 0.0, 2.0);
        let mesh = Mesh::uniform(0.0, 2.0, 9).unwrap();
        let bcs = BoundaryConditions::initial_value(&[1.0]);
        let reference = reference_ivp(&sys, &mesh, &[1.0], 16).unwrap();
        let out =
            solve(&sys, &mesh, &bcs, &SolveOptions::default(), None, Some(&reference)).unwrap();
        let ge = out.global_error.expect("global error requested");
        assert!(ge > 0.0 && ge < 1e-4, "global error {ge}");
    }
}
