//! The central claim: the solved spline minimizes the residual error over
//! the boundary-respecting spline space on its mesh.

use odecg::analysis::{reference_bvp, reference_ivp, residual_error, ReferenceSolution};
use odecg::assembly::{apply_boundary_conditions, assemble_global, constraint_index};
use odecg::expr::parse_expression;
use odecg::model::{BoundaryConditions, Constraint, Endpoint, LinearOdeSystem, TimeMatrix,
                   TimeVector};
use odecg::pipeline::{solve, SolveOptions};
use odecg::quadrature::QuadRule;
use odecg::spline::{HermiteSpline, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rc_ladder() -> LinearOdeSystem {
    let a = TimeMatrix::new(
        2,
        ["-2", "1", "1", "-1"].iter().map(|s| parse_expression(s).unwrap()).collect(),
    )
    .unwrap();
    let q = TimeVector::new(vec![
        parse_expression("2*sin(2*t)").unwrap(),
        parse_expression("0").unwrap(),
    ])
    .unwrap();
    LinearOdeSystem::new(a, q, 0.0, 2.0).unwrap()
}

fn bvp_conditions() -> BoundaryConditions {
    BoundaryConditions::new(
        2,
        vec![
            Constraint { endpoint: Endpoint::Left, component: 0, value: 0.0 },
            Constraint { endpoint: Endpoint::Right, component: 1, value: 1.0 },
        ],
    )
    .unwrap()
}

/// Hermite interpolant of a reference solution: values from the evaluator,
/// derivatives from the ODE itself (so the data is C¹-consistent).
fn interpolant_of(
    sys: &LinearOdeSystem,
    mesh: &Mesh,
    reference: &ReferenceSolution,
) -> HermiteSpline {
    let mut values = Vec::new();
    let mut derivs = Vec::new();
    for &t in mesh.knots() {
        let x = reference.eval(t).unwrap();
        let (a, q) = sys.eval(t).unwrap();
        let dx = a.mul_vec(&x);
        values.extend_from_slice(&x);
        derivs.extend(dx.iter().zip(&q).map(|(v, qi)| v + qi));
    }
    HermiteSpline::new(mesh.clone(), sys.dim(), values, derivs).unwrap()
}

fn perturbation_indices(
    sys: &LinearOdeSystem,
    mesh: &Mesh,
    bcs: &BoundaryConditions,
    rule: &QuadRule,
) -> (usize, Vec<usize>) {
    let qf = assemble_global(sys, mesh, rule).unwrap();
    let fixed: Vec<usize> = bcs.constraints().iter().map(|c| constraint_index(&qf, c)).collect();
    (qf.size(), fixed)
}

fn check_optimality(sys: &LinearOdeSystem, mesh: &Mesh, bcs: &BoundaryConditions, seed: u64) {
    let opts = SolveOptions::default();
    let rule = QuadRule::gauss_legendre(opts.quad_points).unwrap();
    let out = solve(sys, mesh, bcs, &opts, None, None).unwrap();
    assert!(out.cg.converged);
    let optimal = out.residual_error;
    let y_star = out.spline.to_packed();

    let (size, fixed) = perturbation_indices(sys, mesh, bcs, &rule);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..60 {
        let epsilon = if trial % 2 == 0 { 1e-4 } else { 1e-2 };
        let mut direction: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for &k in &fixed {
            direction[k] = 0.0;
        }
        let perturbed: Vec<f64> =
            y_star.iter().zip(&direction).map(|(y, d)| y + epsilon * d).collect();
        let s = HermiteSpline::from_packed(mesh.clone(), sys.dim(), &perturbed).unwrap();
        let err = residual_error(&s, sys, &rule).unwrap();
        assert!(
            err >= optimal - 1e-12,
            "perturbation {trial} (ε = {epsilon}) beat the optimum: {err} < {optimal}"
        );
    }
}

#[test]
fn ivp_solution_is_optimal_under_perturbations() {
    let sys = rc_ladder();
    let mesh = Mesh::uniform(0.0, 2.0, 13).unwrap();
    check_optimality(&sys, &mesh, &BoundaryConditions::initial_value(&[0.0, 0.0]), 301);
}

#[test]
fn bvp_solution_is_optimal_under_perturbations() {
    let sys = rc_ladder();
    let mesh = Mesh::uniform(0.0, 2.0, 10).unwrap();
    check_optimality(&sys, &mesh, &bvp_conditions(), 302);
}

#[test]
fn optimal_residual_beats_the_exact_solution_interpolant() {
    let sys = rc_ladder();
    let opts = SolveOptions::default();
    let rule = QuadRule::gauss_legendre(opts.quad_points).unwrap();

    let mesh = Mesh::uniform(0.0, 2.0, 13).unwrap();
    let bcs = BoundaryConditions::initial_value(&[0.0, 0.0]);
    let out = solve(&sys, &mesh, &bcs, &opts, None, None).unwrap();
    let reference = reference_ivp(&sys, &mesh, &[0.0, 0.0], 32).unwrap();
    let interp = interpolant_of(&sys, &mesh, &reference);
    let interp_err = residual_error(&interp, &sys, &rule).unwrap();
    assert!(
        out.residual_error <= interp_err,
        "ivp: optimal {} vs interpolant {}",
        out.residual_error,
        interp_err
    );

    let mesh_b = Mesh::uniform(0.0, 2.0, 10).unwrap();
    let bcs_b = bvp_conditions();
    let out_b = solve(&sys, &mesh_b, &bcs_b, &opts, None, None).unwrap();
    let reference_b = reference_bvp(&sys, &mesh_b, &bcs_b, 32).unwrap();
    let interp_b = interpolant_of(&sys, &mesh_b, &reference_b);
    let interp_b_err = residual_error(&interp_b, &sys, &rule).unwrap();
    assert!(
        out_b.residual_error <= interp_b_err,
        "bvp: optimal {} vs interpolant {}",
        out_b.residual_error,
        interp_b_err
    );
}

#[test]
fn residual_error_never_grows_under_nested_refinement() {
    let sys = rc_ladder();
    let opts = SolveOptions::default();

    let coarse_ivp = Mesh::uniform(0.0, 2.0, 13).unwrap();
    let bcs_ivp = BoundaryConditions::initial_value(&[0.0, 0.0]);
    let coarse = solve(&sys, &coarse_ivp, &bcs_ivp, &opts, None, None).unwrap();
    let refined = solve(&sys, &coarse_ivp.bisect(), &bcs_ivp, &opts, None, None).unwrap();
    assert!(
        refined.residual_error <= coarse.residual_error,
        "ivp: refined {} vs coarse {}",
        refined.residual_error,
        coarse.residual_error
    );

    let coarse_bvp = Mesh::uniform(0.0, 2.0, 10).unwrap();
    let bcs_bvp = bvp_conditions();
    let coarse_b = solve(&sys, &coarse_bvp, &bcs_bvp, &opts, None, None).unwrap();
    let refined_b = solve(&sys, &coarse_bvp.bisect(), &bcs_bvp, &opts, None, None).unwrap();
    assert!(
        refined_b.residual_error <= coarse_b.residual_error,
        "bvp: refined {} vs coarse {}",
        refined_b.residual_error,
        coarse_b.residual_error
    );
}

#[test]
fn boundary_conditions_hold_exactly_after_elimination() {
    let sys = rc_ladder();
    let mesh = Mesh::uniform(0.0, 2.0, 10).unwrap();
    let bcs = bvp_conditions();
    let out = solve(&sys, &mesh, &bcs, &SolveOptions::default(), None, None).unwrap();
    assert_eq!(out.spline.value_at_knot(0)[0], 0.0);
    assert_eq!(out.spline.value_at_knot(9)[1], 1.0);

    // reduction bookkeeping agrees with the direct route
    let rule = QuadRule::gauss_legendre(8).unwrap();
    let qf = assemble_global(&sys, &mesh, &rule).unwrap();
    let red = apply_boundary_conditions(&qf, &bcs).unwrap();
    assert_eq!(red.size(), 38);
    assert_eq!(red.full_size(), 40);
}
