//! Finite-difference discretization of the elliptic operator on the polar
//! grid and the associated Dirichlet solves.
//!
//! The operator is `L u = -mu(x) Lap(u) + drift(x) . grad(u) + a(x) u` with
//! `mu >= mu_floor > 0` and `a >= 0`. In polar coordinates
//! `Lap(u) = u_rr + u_r / r + u_tt / r^2`; diffusion is discretized with
//! second-order centered differences and drift with first-order upwinding,
//! which keeps every off-diagonal entry nonpositive and the interior rows
//! weakly diagonally dominant (an M-matrix), so the discrete solves inherit
//! the maximum principle. Boundary rings are identity rows.
//!
//! The resulting block-tridiagonal system is factored once at assembly;
//! repeated solves with fresh right-hand sides reuse the factorization.

use crate::exprlang::{EvalError, ScalarFunc};
use crate::geometry::{ExtendedField, Field, GeometryError, HoleFn, PolarGrid};
use crate::linalg::{BlockTridiagonal, LinalgError, RingStencil};
use std::sync::Arc;
use thiserror::Error;

/// Convergence contract for the linear solves (relative residual).
pub const LIN_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error("{what} must be a function of (x1, x2): expected arity 2, got {got}")]
    BadArity { what: &'static str, got: usize },
    #[error("mu_floor must be positive, got {0}")]
    InvalidMuFloor(f64),
    #[error("{what} violates its bound at node ({i}, {j}): value {value}, bound {bound}")]
    CoefficientViolation {
        what: &'static str,
        i: usize,
        j: usize,
        value: f64,
        bound: f64,
    },
    #[error("coefficient evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("linear solve did not meet the residual contract: {residual} > {tol}")]
    SolveFailure { residual: f64, tol: f64 },
    #[error("outer boundary weight is negative at node j={j}: {value}")]
    NegativeBoundaryWeight { j: usize, value: f64 },
    #[error("discrete maximum principle violated in {what}: min value {min} below -{tol}")]
    MaximumPrinciple {
        what: &'static str,
        min: f64,
        tol: f64,
    },
}

/// Coefficients of the elliptic operator: isotropic diffusion `mu`, a drift
/// vector, and a nonnegative potential. `mu_floor` is the ellipticity bound
/// that `mu` must respect at every grid node.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    mu: ScalarFunc,
    drift: (ScalarFunc, ScalarFunc),
    potential: ScalarFunc,
    mu_floor: f64,
}

impl EllipticOperator {
    pub fn new(
        mu: ScalarFunc,
        drift: (ScalarFunc, ScalarFunc),
        potential: ScalarFunc,
        mu_floor: f64,
    ) -> Result<EllipticOperator, EllipticError> {
        for (what, f) in [
            ("mu", &mu),
            ("drift1", &drift.0),
            ("drift2", &drift.1),
            ("potential", &potential),
        ] {
            if f.arity() != 2 {
                return Err(EllipticError::BadArity {
                    what,
                    got: f.arity(),
                });
            }
        }
        if !(mu_floor > 0.0) {
            return Err(EllipticError::InvalidMuFloor(mu_floor));
        }
        Ok(EllipticOperator {
            mu,
            drift,
            potential,
            mu_floor,
        })
    }

    /// The negative Laplacian `-Lap(u)`.
    pub fn laplacian() -> EllipticOperator {
        let vars = ["x1", "x2"];
        EllipticOperator {
            mu: ScalarFunc::constant(1.0, &vars),
            drift: (
                ScalarFunc::constant(0.0, &vars),
                ScalarFunc::constant(0.0, &vars),
            ),
            potential: ScalarFunc::constant(0.0, &vars),
            mu_floor: 1.0,
        }
    }

    pub fn mu_floor(&self) -> f64 {
        self.mu_floor
    }
}

/// Assembled and factorized discrete system for one operator on one grid.
/// Immutable after assembly; concurrent solves with distinct right-hand
/// sides may share one instance.
pub struct DiscreteSystem {
    grid: Arc<PolarGrid>,
    stencil: Vec<RingStencil>,
    factor: BlockTridiagonal,
    lin_tol: f64,
}

impl std::fmt::Debug for DiscreteSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteSystem")
            .field("n_r", &self.grid.n_r())
            .field("n_theta", &self.grid.n_theta())
            .field("lin_tol", &self.lin_tol)
            .finish_non_exhaustive()
    }
}

/// Discretizes the operator on the grid and factors the system.
pub fn assemble(
    op: &EllipticOperator,
    grid: Arc<PolarGrid>,
) -> Result<DiscreteSystem, EllipticError> {
    let n_r = grid.n_r();
    let n_theta = grid.n_theta();
    let dr = grid.dr();
    let dtheta = grid.dtheta();

    let mut rings: Vec<RingStencil> = Vec::with_capacity(n_r + 1);
    rings.push(RingStencil::identity(n_theta));
    for i in 1..n_r {
        let mut st = RingStencil::identity(n_theta);
        let r = grid.radius(i);
        for j in 0..n_theta {
            let p = grid.node_position(i, j);
            let args = [p.x1, p.x2];
            let mu = op.mu.eval(&args)?;
            if mu < op.mu_floor {
                return Err(EllipticError::CoefficientViolation {
                    what: "mu",
                    i,
                    j,
                    value: mu,
                    bound: op.mu_floor,
                });
            }
            let a = op.potential.eval(&args)?;
            if a < 0.0 {
                return Err(EllipticError::CoefficientViolation {
                    what: "potential",
                    i,
                    j,
                    value: a,
                    bound: 0.0,
                });
            }
            let b1 = op.drift.0.eval(&args)?;
            let b2 = op.drift.1.eval(&args)?;
            let (cos_t, sin_t) = (grid.angle(j).cos(), grid.angle(j).sin());
            // drift components along the radial and angular unit vectors
            let b_r = b1 * cos_t + b2 * sin_t;
            let b_t = -b1 * sin_t + b2 * cos_t;

            // -mu * (u_rr + u_r / r): centered
            let mut c_diag = 2.0 * mu / (dr * dr);
            let mut c_sub = -mu / (dr * dr) + mu / (2.0 * r * dr);
            let mut c_sup = -mu / (dr * dr) - mu / (2.0 * r * dr);
            // -mu * u_tt / r^2: centered
            let c_t = -mu / (r * r * dtheta * dtheta);
            let mut c_left = c_t;
            let mut c_right = c_t;
            c_diag += 2.0 * mu / (r * r * dtheta * dtheta);

            // drift, first-order upwind
            if b_r >= 0.0 {
                c_diag += b_r / dr;
                c_sub -= b_r / dr;
            } else {
                c_diag -= b_r / dr;
                c_sup += b_r / dr;
            }
            let w = b_t / r;
            if w >= 0.0 {
                c_diag += w / dtheta;
                c_left -= w / dtheta;
            } else {
                c_diag -= w / dtheta;
                c_right += w / dtheta;
            }

            c_diag += a;

            st.diag[j] = c_diag;
            st.left[j] = c_left;
            st.right[j] = c_right;
            st.sub[j] = c_sub;
            st.sup[j] = c_sup;
        }
        rings.push(st);
    }
    rings.push(RingStencil::identity(n_theta));

    // boundary nodes must also satisfy the coefficient bounds
    for &i in &[0usize, n_r] {
        for j in 0..n_theta {
            let p = grid.node_position(i, j);
            let mu = op.mu.eval(&[p.x1, p.x2])?;
            if mu < op.mu_floor {
                return Err(EllipticError::CoefficientViolation {
                    what: "mu",
                    i,
                    j,
                    value: mu,
                    bound: op.mu_floor,
                });
            }
            let a = op.potential.eval(&[p.x1, p.x2])?;
            if a < 0.0 {
                return Err(EllipticError::CoefficientViolation {
                    what: "potential",
                    i,
                    j,
                    value: a,
                    bound: 0.0,
                });
            }
        }
    }

    let factor = BlockTridiagonal::factor(&rings, n_theta)?;
    Ok(DiscreteSystem {
        grid,
        stencil: rings,
        factor,
        lin_tol: LIN_TOL,
    })
}

impl DiscreteSystem {
    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn lin_tol(&self) -> f64 {
        self.lin_tol
    }

    /// Applies the discrete operator (matrix-vector product). Boundary rows
    /// are identity, so the output equals the input on rings 0 and `n_r`.
    pub fn apply(&self, u: &Field) -> Result<Field, EllipticError> {
        if u.grid() != &self.grid {
            return Err(GeometryError::GridMismatch.into());
        }
        let n_theta = self.grid.n_theta();
        let n_r = self.grid.n_r();
        let mut out = vec![0.0; self.grid.node_count()];
        let v = u.values();
        for i in 0..=n_r {
            let st = &self.stencil[i];
            for j in 0..n_theta {
                let jm = (j + n_theta - 1) % n_theta;
                let jp = (j + 1) % n_theta;
                let mut acc = st.diag[j] * v[i * n_theta + j]
                    + st.left[j] * v[i * n_theta + jm]
                    + st.right[j] * v[i * n_theta + jp];
                if i > 0 {
                    acc += st.sub[j] * v[(i - 1) * n_theta + j];
                }
                if i < n_r {
                    acc += st.sup[j] * v[(i + 1) * n_theta + j];
                }
                out[i * n_theta + j] = acc;
            }
        }
        Ok(Field::new(self.grid.clone(), out)?)
    }

    /// Dirichlet solve with boundary values given per boundary node.
    pub fn solve_with_values(
        &self,
        rhs: &Field,
        inner: &[f64],
        outer: &[f64],
    ) -> Result<Field, EllipticError> {
        if rhs.grid() != &self.grid {
            return Err(GeometryError::GridMismatch.into());
        }
        let n_theta = self.grid.n_theta();
        let n_r = self.grid.n_r();
        assert_eq!(inner.len(), n_theta, "inner boundary data length");
        assert_eq!(outer.len(), n_theta, "outer boundary data length");

        let mut b = rhs.values().to_vec();
        b[..n_theta].copy_from_slice(inner);
        b[n_r * n_theta..].copy_from_slice(outer);

        let x = self.factor.solve(&b);
        let solution = Field::new(self.grid.clone(), x)?;

        // honest post-check of the direct solve
        let residual = self.relative_residual(&solution, &b)?;
        if residual > self.lin_tol {
            return Err(EllipticError::SolveFailure {
                residual,
                tol: self.lin_tol,
            });
        }
        Ok(solution)
    }

    fn relative_residual(&self, x: &Field, b: &[f64]) -> Result<f64, EllipticError> {
        let ax = self.apply(x)?;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for (r, bb) in ax.values().iter().zip(b) {
            num = num.max((r - bb).abs());
            den = den.max(bb.abs());
        }
        Ok(if den == 0.0 { num } else { num / den })
    }

    /// Dirichlet solve with boundary data evaluated at the exact boundary
    /// node positions.
    pub fn solve_dirichlet(
        &self,
        rhs: &Field,
        g_inner: &ScalarFunc,
        g_outer: &ScalarFunc,
    ) -> Result<Field, EllipticError> {
        let inner = self.eval_boundary(0, g_inner)?;
        let outer = self.eval_boundary(self.grid.n_r(), g_outer)?;
        self.solve_with_values(rhs, &inner, &outer)
    }

    fn eval_boundary(&self, ring: usize, g: &ScalarFunc) -> Result<Vec<f64>, EvalError> {
        (0..self.grid.n_theta())
            .map(|j| {
                let p = self.grid.node_position(ring, j);
                g.eval(&[p.x1, p.x2])
            })
            .collect()
    }

    /// The zero-boundary solution operator, extended by zero into the hole.
    pub fn green_apply(&self, rhs: &Field) -> Result<ExtendedField, EllipticError> {
        let zero = vec![0.0; self.grid.n_theta()];
        let u = self.solve_with_values(rhs, &zero, &zero)?;
        Ok(ExtendedField::zero_extension(u)?)
    }

    /// `(max positive off-diagonal, min interior row dominance)`; the first
    /// should be exactly 0 and the second nonnegative up to rounding.
    pub fn m_matrix_stats(&self) -> (f64, f64) {
        let mut max_offdiag = f64::NEG_INFINITY;
        let mut min_dominance = f64::INFINITY;
        for i in 1..self.grid.n_r() {
            let st = &self.stencil[i];
            for j in 0..self.grid.n_theta() {
                for c in [st.left[j], st.right[j], st.sub[j], st.sup[j]] {
                    max_offdiag = max_offdiag.max(c);
                }
                let dominance = st.diag[j]
                    - st.left[j].abs()
                    - st.right[j].abs()
                    - st.sub[j].abs()
                    - st.sup[j].abs();
                min_dominance = min_dominance.min(dominance);
            }
        }
        (max_offdiag, min_dominance)
    }

    #[cfg(test)]
    pub(crate) fn stencil(&self) -> &[RingStencil] {
        &self.stencil
    }
}

/// The auxiliary fields every problem needs: the harmonic-type extensions
/// of the hole datum and of the outer boundary weight, the cone vertex, and
/// the zero extension of the outer response.
#[derive(Debug, Clone)]
pub struct AuxSolutions {
    /// Solution of `L u = 0` with `u = psi` on the inner circle, `u = 0`
    /// outside.
    pub delta: Field,
    /// Solution of `L u = 0` with `u = 0` inside, `u = zeta` outside;
    /// nonnegative by the maximum principle.
    pub gamma: Field,
    /// The cone vertex: `psi` on the hole glued to `delta` on the annulus.
    pub phi: ExtendedField,
    /// `gamma` extended by zero into the hole.
    pub gamma_tilde: ExtendedField,
}

/// Solves the two boundary-data problems and assembles the vertex fields.
pub fn build_aux(
    sys: &DiscreteSystem,
    psi: &ScalarFunc,
    zeta: &ScalarFunc,
) -> Result<AuxSolutions, EllipticError> {
    let grid = sys.grid().clone();
    let n_theta = grid.n_theta();

    let zeta_values = sys.eval_boundary(grid.n_r(), zeta)?;
    for (j, &z) in zeta_values.iter().enumerate() {
        if z < 0.0 {
            return Err(EllipticError::NegativeBoundaryWeight { j, value: z });
        }
    }
    let psi_values = sys.eval_boundary(0, psi)?;

    let zero_rhs = Field::zeros(grid.clone());
    let zero_bc = vec![0.0; n_theta];

    let delta = sys.solve_with_values(&zero_rhs, &psi_values, &zero_bc)?;
    let gamma = sys.solve_with_values(&zero_rhs, &zero_bc, &zeta_values)?;

    let zeta_scale = zeta_values.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let mp_tol = 1e-10 * (1.0 + zeta_scale);
    let min_gamma = gamma.min_value();
    if min_gamma < -mp_tol {
        return Err(EllipticError::MaximumPrinciple {
            what: "gamma",
            min: min_gamma,
            tol: mp_tol,
        });
    }
    // clamp solver dust so cone arithmetic downstream starts from >= 0
    let gamma = gamma.map(|v| if v < 0.0 { 0.0 } else { v });

    let phi = ExtendedField::new(delta.clone(), HoleFn::from_scalar_func(psi.clone()))?;
    let gamma_tilde = ExtendedField::zero_extension(gamma.clone())?;

    Ok(AuxSolutions {
        delta,
        gamma,
        phi,
        gamma_tilde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::compile;
    use crate::geometry::{build_grid, AnnularDomain};
    use std::f64::consts::E;

    fn grid(n_r: usize, n_theta: usize) -> Arc<PolarGrid> {
        build_grid(AnnularDomain::new(1.0, E).unwrap(), n_r, n_theta).unwrap()
    }

    fn laplace_system(n_r: usize, n_theta: usize) -> DiscreteSystem {
        assemble(&EllipticOperator::laplacian(), grid(n_r, n_theta)).unwrap()
    }

    fn max_interior_abs(f: &Field) -> f64 {
        let g = f.grid();
        let mut m = 0.0f64;
        for i in 1..g.n_r() {
            for j in 0..g.n_theta() {
                m = m.max(f.value(i, j).abs());
            }
        }
        m
    }

    #[test]
    fn laplacian_is_consistent_on_log_r() {
        // ln r is harmonic; the interior residual of the discrete operator
        // on its samples must shrink at second order.
        let mut errors = Vec::new();
        for (n_r, n_theta) in [(16, 32), (32, 64), (64, 128)] {
            let sys = laplace_system(n_r, n_theta);
            let g = sys.grid().clone();
            let samples = Field::from_fn(g.clone(), |i, _, _| g.radius(i).ln());
            let residual = sys.apply(&samples).unwrap();
            errors.push(max_interior_abs(&residual));
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (3.0..5.0).contains(&ratio),
                "expected second-order decay, ratios from {errors:?}"
            );
        }
    }

    #[test]
    fn potential_shifts_diagonal_exactly() {
        let base = laplace_system(6, 12);
        let vars = ["x1", "x2"];
        let with_a = assemble(
            &EllipticOperator::new(
                ScalarFunc::constant(1.0, &vars),
                (
                    ScalarFunc::constant(0.0, &vars),
                    ScalarFunc::constant(0.0, &vars),
                ),
                ScalarFunc::constant(1.0, &vars),
                1.0,
            )
            .unwrap(),
            grid(6, 12),
        )
        .unwrap();
        for i in 1..6 {
            for j in 0..12 {
                let d0 = base.stencil()[i].diag[j];
                let d1 = with_a.stencil()[i].diag[j];
                assert_eq!(d1 - d0, 1.0);
            }
        }
    }

    #[test]
    fn degenerate_diffusion_rejected() {
        let vars = ["x1", "x2"];
        let op = EllipticOperator::new(
            ScalarFunc::constant(0.0, &vars),
            (
                ScalarFunc::constant(0.0, &vars),
                ScalarFunc::constant(0.0, &vars),
            ),
            ScalarFunc::constant(0.0, &vars),
            1e-8,
        )
        .unwrap();
        let err = assemble(&op, grid(4, 8)).unwrap_err();
        assert!(matches!(
            err,
            EllipticError::CoefficientViolation { what: "mu", .. }
        ));

        assert!(EllipticOperator::new(
            ScalarFunc::constant(1.0, &vars),
            (
                ScalarFunc::constant(0.0, &vars),
                ScalarFunc::constant(0.0, &vars),
            ),
            ScalarFunc::constant(0.0, &vars),
            0.0,
        )
        .is_err());

        let negative_potential = EllipticOperator::new(
            ScalarFunc::constant(1.0, &vars),
            (
                ScalarFunc::constant(0.0, &vars),
                ScalarFunc::constant(0.0, &vars),
            ),
            ScalarFunc::constant(-1.0, &vars),
            1.0,
        )
        .unwrap();
        assert!(matches!(
            assemble(&negative_potential, grid(4, 8)),
            Err(EllipticError::CoefficientViolation {
                what: "potential",
                ..
            })
        ));
    }

    #[test]
    fn upwinded_drift_preserves_m_matrix() {
        let vars = ["x1", "x2"];
        let op = EllipticOperator::new(
            compile("1+0.5*cos(x1)", &vars).unwrap(),
            (
                ScalarFunc::constant(5.0, &vars),
                compile("-3*x2", &vars).unwrap(),
            ),
            compile("abs(x1)", &vars).unwrap(),
            0.5,
        )
        .unwrap();
        let sys = assemble(&op, grid(10, 16)).unwrap();
        let (max_offdiag, min_dominance) = sys.m_matrix_stats();
        assert!(max_offdiag <= 0.0, "positive off-diagonal {max_offdiag}");
        assert!(min_dominance >= -1e-9, "row dominance {min_dominance}");
    }

    #[test]
    fn closed_form_boundary_solves() {
        // gamma(r) = ln r, delta(r) = 1 - ln r, and the constant-load
        // solution (1/4)[(e^2-1) ln r + 1 - r^2] on the unit-to-e annulus.
        let sys = laplace_system(32, 64);
        let g = sys.grid().clone();
        let zero = Field::zeros(g.clone());
        let vars = ["x1", "x2"];
        let zero_fn = ScalarFunc::constant(0.0, &vars);
        let one_fn = ScalarFunc::constant(1.0, &vars);

        let gamma = sys.solve_dirichlet(&zero, &zero_fn, &one_fn).unwrap();
        let delta = sys.solve_dirichlet(&zero, &one_fn, &zero_fn).unwrap();
        let torsion = sys
            .solve_with_values(
                &Field::constant(g.clone(), 1.0),
                &vec![0.0; g.n_theta()],
                &vec![0.0; g.n_theta()],
            )
            .unwrap();

        let mut e_gamma = 0.0f64;
        let mut e_delta = 0.0f64;
        let mut e_torsion = 0.0f64;
        for i in 0..=g.n_r() {
            let r = g.radius(i);
            let u0 = 0.25 * ((E * E - 1.0) * r.ln() + 1.0 - r * r);
            for j in 0..g.n_theta() {
                e_gamma = e_gamma.max((gamma.value(i, j) - r.ln()).abs());
                e_delta = e_delta.max((delta.value(i, j) - (1.0 - r.ln())).abs());
                e_torsion = e_torsion.max((torsion.value(i, j) - u0).abs());
            }
        }
        assert!(e_gamma < 1e-3, "gamma error {e_gamma}");
        assert!(e_delta < 1e-3, "delta error {e_delta}");
        assert!(e_torsion < 1e-3, "torsion error {e_torsion}");
    }

    #[test]
    fn green_operator_linearity_and_positivity() {
        let sys = laplace_system(12, 16);
        let g = sys.grid().clone();
        let f1 = Field::from_fn(g.clone(), |i, j, _| {
            0.5 + 0.3 * (i as f64 * 0.7).sin().abs() + 0.1 * j as f64 / 16.0
        });
        let f2 = Field::from_fn(g.clone(), |_, j, p| 1.0 + p.x1 * p.x1 + (j % 3) as f64);

        let g1 = sys.green_apply(&f1).unwrap();
        let g2 = sys.green_apply(&f2).unwrap();
        let combo = f1.add_scaled(&f2, 2.5).unwrap();
        let g_combo = sys.green_apply(&combo).unwrap();

        let reference = g1.annulus().add_scaled(g2.annulus(), 2.5).unwrap();
        let mut diff = 0.0f64;
        for (a, b) in g_combo.annulus().values().iter().zip(reference.values()) {
            diff = diff.max((a - b).abs());
        }
        let scale = f1.sup_abs() + 2.5 * f2.sup_abs();
        assert!(diff <= 10.0 * LIN_TOL * scale, "linearity defect {diff}");

        // nonnegative load, zero boundary: nonnegative solution
        assert!(g1.annulus().min_value() >= -1e-12 * f1.sup_abs());
        assert!(g2.annulus().min_value() >= -1e-12 * f2.sup_abs());

        // zero load: zero solution
        let gz = sys.green_apply(&Field::zeros(g)).unwrap();
        assert_eq!(gz.annulus().sup_abs(), 0.0);
    }

    #[test]
    fn torsion_sup_near_closed_form() {
        let sys = laplace_system(32, 64);
        let g = sys.grid().clone();
        let u0 = sys.green_apply(&Field::constant(g, 1.0)).unwrap();
        let sup = u0.annulus().sup_abs();
        let exact = 0.125 * ((E * E - 1.0) * ((E * E - 1.0) / 2.0).ln() + 3.0 - E * E);
        assert!((sup - exact).abs() < 1e-3, "sup {sup} vs {exact}");
    }

    #[test]
    fn rotational_symmetry_of_symmetric_solves() {
        let sys = laplace_system(16, 32);
        let g = sys.grid().clone();
        let u = sys
            .green_apply(&Field::from_fn(g.clone(), |i, _, _| 1.0 + g.radius(i)))
            .unwrap();
        let sup = u.annulus().sup_abs();
        let mut variation = 0.0f64;
        for i in 0..=g.n_r() {
            let first = u.annulus().value(i, 0);
            for j in 1..g.n_theta() {
                variation = variation.max((u.annulus().value(i, j) - first).abs());
            }
        }
        assert!(variation <= 1e-10 * sup, "ring variation {variation}");
    }

    #[test]
    fn minimal_grid_still_solves() {
        // n_r = 2 leaves a single interior ring
        let sys = laplace_system(2, 8);
        let g = sys.grid().clone();
        let vars = ["x1", "x2"];
        let u = sys
            .solve_dirichlet(
                &Field::constant(g.clone(), 1.0),
                &ScalarFunc::constant(0.5, &vars),
                &ScalarFunc::constant(2.0, &vars),
            )
            .unwrap();
        for j in 0..g.n_theta() {
            assert_eq!(u.value(0, j), 0.5);
            assert_eq!(u.value(2, j), 2.0);
            // between the boundary values plus the positive load response
            assert!(u.value(1, j) > 0.5 && u.value(1, j) < 3.0);
        }
    }

    #[test]
    fn build_aux_example_data() {
        // psi = x1^2 + x2^2, zeta = 1, L = -Lap on (1, e)
        let sys = laplace_system(32, 64);
        let psi = compile("x1^2+x2^2", &["x1", "x2"]).unwrap();
        let zeta = ScalarFunc::constant(1.0, &["x1", "x2"]);
        let aux = build_aux(&sys, &psi, &zeta).unwrap();

        // gamma matches ln r
        let g = sys.grid().clone();
        let mut e_gamma = 0.0f64;
        for i in 0..=g.n_r() {
            for j in 0..g.n_theta() {
                e_gamma = e_gamma.max((aux.gamma.value(i, j) - g.radius(i).ln()).abs());
            }
        }
        assert!(e_gamma < 1e-3);
        assert!(aux.gamma.min_value() >= 0.0);

        // phi: hole value at the origin is psi(0) = 0, inner circle 1, sup 1
        let origin = aux.phi.eval(crate::geometry::Point::new(0.0, 0.0)).unwrap();
        assert!(origin.abs() < 1e-15);
        let inner = aux.phi.eval(crate::geometry::Point::new(0.6, 0.8)).unwrap();
        assert!((inner - 1.0).abs() < 1e-12);
        let sup = aux.phi.sup_abs().unwrap();
        assert!((sup - 1.0).abs() < 1e-9, "sup phi {sup}");

        // gamma_tilde vanishes on the hole
        assert!(aux.gamma_tilde.hole().is_zero());

        // zero data: everything zero
        let zero = ScalarFunc::constant(0.0, &["x1", "x2"]);
        let aux0 = build_aux(&sys, &zero, &zero).unwrap();
        assert_eq!(aux0.phi.annulus().sup_abs(), 0.0);
        assert_eq!(aux0.gamma.sup_abs(), 0.0);

        // negative zeta rejected
        let neg = ScalarFunc::constant(-1.0, &["x1", "x2"]);
        assert!(matches!(
            build_aux(&sys, &psi, &neg),
            Err(EllipticError::NegativeBoundaryWeight { .. })
        ));
    }
}
