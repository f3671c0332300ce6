//! Normalized fixed-point iteration for solution pairs on spheres of the
//! affine cone.
//!
//! A pair `(u, lambda)` with `u = phi + lambda T(u)` and
//! `sup|u - phi| = rho` is computed by a damped, normalized Picard
//! iteration (a nonlinear power iteration): starting from `v_0 >= 0` with
//! `sup|v_0| = rho`,
//!
//! ```text
//!   w      = T(phi + v_k)
//!   lambda = rho / sup|w|
//!   v_next = (1 - damping) v_k + damping * lambda * w, rescaled to sup rho
//! ```
//!
//! until `sup|v_next - v_k| <= tol * rho`. A fixed point of this update is
//! exactly a solution pair on the sphere of radius `rho`. The iteration is
//! not guaranteed to converge for every nonlinearity; non-convergence is
//! reported as an error carrying the last diagnostics, never retried
//! silently. When multiple fixed points exist the iteration returns the one
//! it finds; the result depends on the initial guess.
//!
//! Newton iteration or pseudo-arclength continuation on the augmented
//! system `(v, lambda)` is a natural extension point for stiff
//! nonlinearities; the normalized iteration is the only scheme implemented
//! here.

use crate::functional::{BvpOperator, FunctionalError};
use crate::geometry::{ExtendedField, Field, GeometryError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("operator degenerated at iteration {iteration}: sup|T(u)| = 0")]
    Degenerate { iteration: usize },
    #[error(
        "no convergence after {iterations} iterations: last update {last_update:.3e}, \
         fixed-point residual {fp_residual:.3e}"
    )]
    NonConvergence {
        iterations: usize,
        last_update: f64,
        fp_residual: f64,
    },
    #[error(
        "iterate left the cone at iteration {iteration}: min value {min_value:.3e} \
         below -{tol:.3e}"
    )]
    ConeViolation {
        iteration: usize,
        min_value: f64,
        tol: f64,
    },
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Starting iterate for the normalized iteration.
#[derive(Debug, Clone, Default)]
pub enum InitialGuess {
    /// `rho * gamma_tilde / sup|gamma_tilde|`; falls back to the constant
    /// shell when `gamma_tilde` vanishes.
    #[default]
    GammaTildeScaled,
    /// Constant `rho` on the open annulus, tapered linearly to zero at the
    /// inner circle over the first cell.
    ConstantShell,
    /// User-provided profile; it is projected onto the cone (negative parts
    /// clamped), zeroed on the inner ring and rescaled to `sup = rho`.
    Profile(Field),
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub initial_guess: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 500,
            damping: 1.0,
            initial_guess: InitialGuess::default(),
        }
    }
}

/// A converged pair together with its diagnostics.
#[derive(Debug, Clone)]
pub struct SolutionPair {
    /// The solution `u = phi + v`, carrying the hole datum of `phi`.
    pub u: ExtendedField,
    pub lambda: f64,
    pub rho: f64,
    pub iterations: usize,
    /// `sup|u - phi - lambda T(u)|`, recomputed at the returned iterate.
    pub fp_residual: f64,
    /// `max(0, -min(u - phi))`.
    pub cone_violation: f64,
    /// `|sup|u - phi| - rho|`.
    pub norm_deviation: f64,
}

/// Independent recomputation of the defects of a pair.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub fp_residual: f64,
    pub cone_violation: f64,
    pub norm_deviation: f64,
    /// `max over interior nodes |L_h u - lambda F(u)|`.
    pub pde_defect: f64,
    /// `max over outer-ring nodes |u - lambda zeta B[u]|`.
    pub outer_bc_defect: f64,
}

fn cone_tol(rho: f64) -> f64 {
    1e-10 * (1.0 + rho)
}

fn initial_iterate(op: &BvpOperator, rho: f64, guess: &InitialGuess) -> Result<Field, SolveError> {
    let grid = op.grid().clone();
    match guess {
        InitialGuess::GammaTildeScaled => {
            let gamma = op.aux().gamma_tilde.annulus();
            let sup = gamma.sup_abs();
            if sup > 0.0 {
                Ok(gamma.scaled(rho / sup))
            } else {
                initial_iterate(op, rho, &InitialGuess::ConstantShell)
            }
        }
        InitialGuess::ConstantShell => Ok(Field::from_fn(
            grid,
            |i, _, _| {
                if i == 0 {
                    0.0
                } else {
                    rho
                }
            },
        )),
        InitialGuess::Profile(field) => {
            if field.grid() != &grid {
                return Err(GeometryError::GridMismatch.into());
            }
            let projected = Field::from_fn(grid.clone(), |i, j, _| {
                if i == 0 {
                    0.0
                } else {
                    field.value(i, j).max(0.0)
                }
            });
            let sup = projected.sup_abs();
            if sup == 0.0 {
                return Err(SolveError::InvalidOptions(
                    "initial profile vanishes after cone projection".into(),
                ));
            }
            Ok(projected.scaled(rho / sup))
        }
    }
}

/// One application of `T` at `phi + v`, returning the annulus values of the
/// response (its hole part is identically zero).
fn apply_at(op: &BvpOperator, v: &Field) -> Result<Field, SolveError> {
    let u = lift(op, v)?;
    let w = op.apply(&u)?;
    Ok(w.annulus().clone())
}

/// `phi + v` as a function on the whole disk.
fn lift(op: &BvpOperator, v: &Field) -> Result<ExtendedField, SolveError> {
    let annulus = op.aux().phi.annulus().add_scaled(v, 1.0)?;
    Ok(ExtendedField::new(annulus, op.aux().phi.hole().clone())?)
}

/// Finds a pair `(u_rho, lambda_rho)` on the sphere `sup|u - phi| = rho`.
pub fn solve_pair(
    op: &BvpOperator,
    rho: f64,
    opts: &SolverOptions,
) -> Result<SolutionPair, SolveError> {
    if !(rho > 0.0) {
        return Err(SolveError::InvalidOptions(format!(
            "rho must be positive, got {rho}"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(SolveError::InvalidOptions(format!(
            "tol must be positive, got {}",
            opts.tol
        )));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(SolveError::InvalidOptions(format!(
            "damping must lie in (0, 1], got {}",
            opts.damping
        )));
    }

    let ctol = cone_tol(rho);
    let mut v = initial_iterate(op, rho, &opts.initial_guess)?;
    let mut last_update = f64::INFINITY;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let w = apply_at(op, &v)?;
        let w_sup = w.sup_abs();
        if w_sup == 0.0 {
            return Err(SolveError::Degenerate {
                iteration: iterations,
            });
        }
        let lambda = rho / w_sup;

        // damped mix, cone projection of rounding dust, renormalization
        let mixed = v
            .scaled(1.0 - opts.damping)
            .add_scaled(&w, opts.damping * lambda)?;
        let min_value = mixed.min_value();
        if min_value < -ctol {
            return Err(SolveError::ConeViolation {
                iteration: iterations,
                min_value,
                tol: ctol,
            });
        }
        let clamped = mixed.map(|x| if x < 0.0 { 0.0 } else { x });
        let sup = clamped.sup_abs();
        if sup == 0.0 {
            return Err(SolveError::Degenerate {
                iteration: iterations,
            });
        }
        let v_next = clamped.scaled(rho / sup);

        let mut diff = 0.0f64;
        for (a, b) in v_next.values().iter().zip(v.values()) {
            diff = diff.max((a - b).abs());
        }
        v = v_next;
        iterations += 1;
        last_update = diff;
        if diff <= opts.tol * rho {
            return finish(op, v, rho, iterations);
        }
    }

    // diagnostics for the failure report
    let w = apply_at(op, &v)?;
    let w_sup = w.sup_abs();
    let fp_residual = if w_sup == 0.0 {
        f64::INFINITY
    } else {
        let lambda = rho / w_sup;
        v.add_scaled(&w, -lambda)
            .map(|d| d.sup_abs())
            .unwrap_or(f64::INFINITY)
    };
    Err(SolveError::NonConvergence {
        iterations,
        last_update,
        fp_residual,
    })
}

fn finish(
    op: &BvpOperator,
    v: Field,
    rho: f64,
    iterations: usize,
) -> Result<SolutionPair, SolveError> {
    let w = apply_at(op, &v)?;
    let w_sup = w.sup_abs();
    if w_sup == 0.0 {
        return Err(SolveError::Degenerate {
            iteration: iterations,
        });
    }
    let lambda = rho / w_sup;
    let fp_residual = v.add_scaled(&w, -lambda)?.sup_abs();
    let cone_violation = (-v.min_value()).max(0.0);
    let norm_deviation = (v.sup_abs() - rho).abs();
    let u = lift(op, &v)?;
    Ok(SolutionPair {
        u,
        lambda,
        rho,
        iterations,
        fp_residual,
        cone_violation,
        norm_deviation,
    })
}

/// One sweep entry: the requested `rho` and the outcome there.
#[derive(Debug)]
pub struct SweepEntry {
    pub rho: f64,
    pub result: Result<SolutionPair, SolveError>,
}

/// Solves along an increasing list of `rho` values, warm-starting each
/// solve from the last converged iterate rescaled to the new radius.
/// Per-rho failures are recorded and the sweep continues.
pub fn sweep(
    op: &BvpOperator,
    rho_values: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<SweepEntry>, SolveError> {
    if rho_values.is_empty() {
        return Err(SolveError::InvalidOptions("empty rho list".into()));
    }
    for pair in rho_values.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(SolveError::InvalidOptions(format!(
                "rho values must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if !(rho_values[0] > 0.0) {
        return Err(SolveError::InvalidOptions(format!(
            "rho values must be positive, got {}",
            rho_values[0]
        )));
    }

    let mut entries = Vec::with_capacity(rho_values.len());
    let mut warm: Option<Field> = None;
    for &rho in rho_values {
        let mut local = opts.clone();
        if let Some(prev) = &warm {
            local.initial_guess = InitialGuess::Profile(prev.clone());
        }
        let result = solve_pair(op, rho, &local);
        if let Ok(pair) = &result {
            warm = Some(pair.u.annulus().add_scaled(op.aux().phi.annulus(), -1.0)?);
        }
        entries.push(SweepEntry { rho, result });
    }
    Ok(entries)
}

/// Recomputes every defect of a pair from scratch, independently of the
/// iteration that produced it.
pub fn residual_report(
    op: &BvpOperator,
    pair: &SolutionPair,
) -> Result<ResidualReport, SolveError> {
    let v = pair.u.annulus().add_scaled(op.aux().phi.annulus(), -1.0)?;
    let w = op.apply(&pair.u)?;

    let fp_residual = v.add_scaled(w.annulus(), -pair.lambda)?.sup_abs();
    let cone_violation = (-v.min_value()).max(0.0);
    let norm_deviation = (v.sup_abs() - pair.rho).abs();

    // interior PDE defect: L_h u = lambda F(u)
    let forcing = op.nemytskii(&pair.u)?;
    let lhu = op
        .system()
        .apply(pair.u.annulus())
        .map_err(FunctionalError::from)?;
    let grid = op.grid().clone();
    let mut pde_defect = 0.0f64;
    for i in 1..grid.n_r() {
        for j in 0..grid.n_theta() {
            pde_defect =
                pde_defect.max((lhu.value(i, j) - pair.lambda * forcing.value(i, j)).abs());
        }
    }

    // outer boundary defect: u = lambda zeta B[u]
    let b_value = op.boundary_value(&pair.u)?;
    let mut outer_bc_defect = 0.0f64;
    for j in 0..grid.n_theta() {
        let p = grid.node_position(grid.n_r(), j);
        let zeta = op
            .spec()
            .zeta
            .eval(&[p.x1, p.x2])
            .map_err(FunctionalError::from)?;
        let defect = (pair.u.annulus().value(grid.n_r(), j) - pair.lambda * zeta * b_value).abs();
        outer_bc_defect = outer_bc_defect.max(defect);
    }

    Ok(ResidualReport {
        fp_residual,
        cone_violation,
        norm_deviation,
        pde_defect,
        outer_bc_defect,
    })
}
