//! Numerical machinery for parameter-dependent elliptic boundary value
//! problems with deviated arguments and functional boundary conditions on
//! circular annuli.
//!
//! The library discretizes problems of the form
//!
//! ```text
//!   L u = lambda f(x, u(x), u(sigma(x)))   in the annulus,
//!   u = psi                                on the closed hole,
//!   u = lambda zeta(x) B[u]                on the outer circle,
//! ```
//!
//! where `L` is a strongly elliptic second-order operator, `sigma` maps the
//! annulus into the full closed disk (a spatial deviation), and `B` is a
//! functional of the whole solution (an integral or a point evaluation).
//! Solutions are sought as pairs `(u, lambda)` with `u` on the sphere
//! `sup|u - phi| = rho` of an affine cone of nonnegative functions; the
//! vertex `phi` glues the hole datum `psi` to its harmonic-type extension.
//!
//! Module map:
//!
//! - [`geometry`]: annular domains, polar tensor grids, extended fields
//!   (annulus values + analytic hole function), quadrature over the disk.
//! - [`exprlang`]: the small expression language used to specify
//!   coefficients, nonlinearities and boundary data in config files.
//! - [`elliptic`]: finite-difference assembly of `L` on the polar grid,
//!   Dirichlet solves, the zero-boundary solution operator, and the
//!   auxiliary harmonic-type fields.
//! - [`functional`]: deviation maps, boundary functionals, the composite
//!   operator `u -> G(F(u)) + gamma_tilde * B[u]`, and the hypothesis
//!   checker for the lower-bound conditions.
//! - [`bk_solver`]: the normalized fixed-point iteration that produces
//!   `(u_rho, lambda_rho)` pairs and rho-sweeps.
//! - [`radial_oracle`]: closed-form radial solutions and an independent 1D
//!   finite-difference solver used as ground truth in tests.

pub mod bk_solver;
pub mod elliptic;
pub mod exprlang;
pub mod functional;
pub mod geometry;
mod linalg;
pub mod radial_oracle;

pub use bk_solver::{solve_pair, sweep, InitialGuess, SolutionPair, SolverOptions};
pub use elliptic::{AuxSolutions, DiscreteSystem, EllipticOperator};
pub use exprlang::ScalarFunc;
pub use functional::{BoundaryFunctional, BvpOperator, DeviationMap, ProblemSpec};
pub use geometry::{AnnularDomain, ExtendedField, Field, Point, PolarGrid, QuadratureRule};
