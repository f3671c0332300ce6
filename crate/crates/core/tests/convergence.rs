//! Grid-convergence checks of the 2D solver against closed radial forms and
//! against the independent 1D solver.

use annulus_core::elliptic::{assemble, DiscreteSystem, EllipticOperator};
use annulus_core::exprlang::compile;
use annulus_core::geometry::{build_grid, AnnularDomain, Field, Point, PolarGrid};
use annulus_core::radial_oracle::{
    harmonic_closed_form, radial_fd_solve_with, torsion_closed_form, RadialProfile,
};
use std::f64::consts::E;
use std::sync::Arc;

fn unit_annulus(n_r: usize, n_theta: usize) -> Arc<PolarGrid> {
    build_grid(AnnularDomain::new(1.0, E).unwrap(), n_r, n_theta).unwrap()
}

fn laplace(n_r: usize, n_theta: usize) -> DiscreteSystem {
    assemble(&EllipticOperator::laplacian(), unit_annulus(n_r, n_theta)).unwrap()
}

enum Case {
    Torsion,
    Gamma,
    Delta,
}

fn solve_case(sys: &DiscreteSystem, case: &Case) -> Field {
    let grid = sys.grid().clone();
    let zero_bc = vec![0.0; grid.n_theta()];
    let one_bc = vec![1.0; grid.n_theta()];
    match case {
        Case::Torsion => sys
            .solve_with_values(&Field::constant(grid, 1.0), &zero_bc, &zero_bc)
            .unwrap(),
        Case::Gamma => sys
            .solve_with_values(&Field::zeros(grid), &zero_bc, &one_bc)
            .unwrap(),
        Case::Delta => sys
            .solve_with_values(&Field::zeros(grid), &one_bc, &zero_bc)
            .unwrap(),
    }
}

fn closed_form(case: &Case) -> RadialProfile {
    match case {
        Case::Torsion => torsion_closed_form(1.0, E, 1.0).unwrap(),
        Case::Gamma => harmonic_closed_form(1.0, E, 0.0, 1.0).unwrap(),
        Case::Delta => harmonic_closed_form(1.0, E, 1.0, 0.0).unwrap(),
    }
}

fn max_error(field: &Field, profile: &RadialProfile) -> f64 {
    let grid = field.grid();
    let mut err = 0.0f64;
    for i in 0..=grid.n_r() {
        let exact = profile.eval(grid.radius(i));
        for j in 0..grid.n_theta() {
            err = err.max((field.value(i, j) - exact).abs());
        }
    }
    err
}

#[test]
fn closed_forms_converge_at_second_order() {
    for case in [Case::Torsion, Case::Gamma, Case::Delta] {
        let profile = closed_form(&case);
        let mut errors = Vec::new();
        for (n_r, n_theta) in [(16, 32), (32, 64), (64, 128)] {
            let sys = laplace(n_r, n_theta);
            errors.push(max_error(&solve_case(&sys, &case), &profile));
        }
        assert!(errors[2] <= 2e-3, "final error {}", errors[2]);
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (3.0..5.0).contains(&ratio),
                "halving h gave ratio {ratio}, errors {errors:?}"
            );
        }
    }
}

#[test]
fn two_d_solver_matches_one_d_oracle() {
    // radially symmetric loads: the ring values of the 2D solve must agree
    // with the independent tridiagonal solve at matched resolution
    let loads: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("constant", Box::new(|_| 1.0)),
        ("linear", Box::new(|r| r)),
        ("decaying", Box::new(|r: f64| (-r).exp())),
    ];
    let (n_r, n_theta) = (64usize, 128usize);
    let sys = laplace(n_r, n_theta);
    let grid = sys.grid().clone();
    let zero_bc = vec![0.0; grid.n_theta()];
    for (name, load) in &loads {
        let rhs = Field::from_fn(grid.clone(), |i, _, _| load(grid.radius(i)));
        let u2 = sys.solve_with_values(&rhs, &zero_bc, &zero_bc).unwrap();
        let u1 = radial_fd_solve_with(1.0, E, load, (0.0, 0.0), n_r).unwrap();
        let mut diff = 0.0f64;
        for i in 0..=n_r {
            for j in 0..n_theta {
                diff = diff.max((u2.value(i, j) - u1[i]).abs());
            }
        }
        assert!(diff <= 5e-3, "{name}: 2D vs 1D discrepancy {diff}");
    }
}

#[test]
fn manufactured_solution_with_full_operator() {
    // u(x) = x1^2 + x2 under variable diffusion, drift and potential; the
    // right-hand side follows from lap(u) = 2 and grad(u) = (2 x1, 1).
    // Upwinded drift makes the scheme first-order in the drift terms, so
    // the error ratio per refinement sits between halving and quartering.
    let vars = ["x1", "x2"];
    let op = EllipticOperator::new(
        compile("1+0.1*x1^2", &vars).unwrap(),
        (
            compile("0.5+0.2*x2", &vars).unwrap(),
            compile("0.1*x1-0.3", &vars).unwrap(),
        ),
        compile("x1^2", &vars).unwrap(),
        1.0,
    )
    .unwrap();
    let u_exact = |p: Point| p.x1 * p.x1 + p.x2;
    let rhs_of = |p: Point| {
        -2.0 * (1.0 + 0.1 * p.x1 * p.x1)
            + (0.5 + 0.2 * p.x2) * 2.0 * p.x1
            + (0.1 * p.x1 - 0.3)
            + p.x1 * p.x1 * u_exact(p)
    };

    let domain = AnnularDomain::new(1.0, 2.0).unwrap();
    let mut errors = Vec::new();
    for (n_r, n_theta) in [(16usize, 32usize), (32, 64), (64, 128)] {
        let grid = build_grid(domain, n_r, n_theta).unwrap();
        let sys = assemble(&op, grid.clone()).unwrap();
        let rhs = Field::from_fn(grid.clone(), |_, _, p| rhs_of(p));
        let inner: Vec<f64> = (0..n_theta)
            .map(|j| u_exact(grid.node_position(0, j)))
            .collect();
        let outer: Vec<f64> = (0..n_theta)
            .map(|j| u_exact(grid.node_position(n_r, j)))
            .collect();
        let u = sys.solve_with_values(&rhs, &inner, &outer).unwrap();
        let mut err = 0.0f64;
        for i in 0..=n_r {
            for j in 0..n_theta {
                err = err.max((u.value(i, j) - u_exact(grid.node_position(i, j))).abs());
            }
        }
        errors.push(err);
    }
    eprintln!("manufactured-solution errors: {errors:?}");
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!(
            (1.6..5.0).contains(&ratio),
            "refinement ratios from {errors:?}"
        );
    }
    assert!(errors[2] < 5e-3, "final error {}", errors[2]);
}

#[test]
fn green_sup_approaches_closed_form_value() {
    let exact = annulus_core::radial_oracle::unit_torsion_sup();
    let mut errors = Vec::new();
    for (n_r, n_theta) in [(16, 32), (32, 64)] {
        let sys = laplace(n_r, n_theta);
        let u0 = sys
            .green_apply(&Field::constant(sys.grid().clone(), 1.0))
            .unwrap();
        errors.push((u0.annulus().sup_abs() - exact).abs());
    }
    assert!(errors[1] < errors[0]);
    assert!(errors[1] < 1e-3, "sup error {}", errors[1]);
}
