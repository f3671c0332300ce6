//! The nonlocal machinery: deviated-argument superposition, boundary
//! functionals, the composite response operator, and the hypothesis
//! checker for the lower-bound conditions.
//!
//! For a problem `L u = lambda f(x, u, u(sigma(x)))` with `u = psi` on the
//! hole and `u = lambda zeta B[u]` on the outer circle, a solution is a
//! fixed point of `u = phi + lambda T(u)` where
//! `T(u) = G(F(u)) + gamma_tilde * B[u]`, `G` is the zero-boundary solution
//! operator, `F` the superposition operator and `phi` the cone vertex.
//! [`BvpOperator`] bundles the assembled system, auxiliary fields and
//! quadrature so that `T` can be applied repeatedly at the cost of two
//! block sweeps per call.

use crate::elliptic::{
    assemble, build_aux, AuxSolutions, DiscreteSystem, EllipticError, EllipticOperator,
};
use crate::exprlang::{EvalError, ScalarFunc};
use crate::geometry::{
    build_grid, AnnularDomain, ExtendedField, Field, GeometryError, Point, PolarGrid,
    QuadratureRule,
};
use std::sync::Arc;
use thiserror::Error;

/// Threshold for the strict positivity test on `d_rho`.
pub const STRICT_TOL: f64 = 1e-14;

/// Default lattice resolution for the pointwise lower-bound spot check.
pub const DEFAULT_CONDITION_SAMPLES: usize = 32;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("{what} must have arity {expected}, got {got}")]
    BadArity {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid deviation map: {0}")]
    InvalidDeviation(String),
    #[error("invalid boundary functional: {0}")]
    InvalidFunctional(String),
    #[error(
        "deviation image leaves the disk at node ({i}, {j}): |sigma(x)| = {image_norm} > {limit}"
    )]
    SigmaOutOfDomain {
        i: usize,
        j: usize,
        image_norm: f64,
        limit: f64,
    },
    #[error("lower bound is negative at node ({i}, {j}): {value}")]
    NegativeLowerBound { i: usize, j: usize, value: f64 },
    #[error("rho must be positive, got {0}")]
    InvalidRho(f64),
    #[error("b_rho must be nonnegative, got {0}")]
    NegativeBRho(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
}

/// The spatial deviation `sigma`, mapping the annulus into the closed disk.
///
/// The codomain constraint is checked eagerly at every grid node when the
/// problem is assembled. For the built-in kinds this covers the whole
/// annulus: identity, scaling by `c <= 1`, rotations and constants map
/// every radial segment between checked nodes back into the disk.
/// Expression-based deviations are only checked at the nodes.
#[derive(Debug, Clone)]
pub enum DeviationMap {
    Identity,
    /// `x -> c x` with `c` in `(0, 1]`.
    Scale(f64),
    /// Rotation by a fixed angle.
    Rotate(f64),
    /// Constant map onto a fixed point of the disk.
    Constant(Point),
    /// Componentwise expressions `(sigma1(x1, x2), sigma2(x1, x2))`.
    Components(ScalarFunc, ScalarFunc),
}

impl DeviationMap {
    pub fn map(&self, p: Point) -> Result<Point, EvalError> {
        Ok(match self {
            DeviationMap::Identity => p,
            DeviationMap::Scale(c) => Point::new(c * p.x1, c * p.x2),
            DeviationMap::Rotate(angle) => {
                let (s, c) = angle.sin_cos();
                Point::new(c * p.x1 - s * p.x2, s * p.x1 + c * p.x2)
            }
            DeviationMap::Constant(eta) => *eta,
            DeviationMap::Components(s1, s2) => {
                let args = [p.x1, p.x2];
                Point::new(s1.eval(&args)?, s2.eval(&args)?)
            }
        })
    }
}

/// The boundary functional `B`, evaluated on functions of the whole disk.
#[derive(Debug, Clone)]
pub enum BoundaryFunctional {
    /// `integral over the disk of w(x) |u(x)|^p dx`, `p >= 1`.
    PowerIntegral { power: f64, weight: ScalarFunc },
    /// Point evaluation `u(eta)` at an interior point.
    PointEval(Point),
    /// `integral of w(x) u(x) dx`.
    LinearIntegral { weight: ScalarFunc },
}

/// Evaluates the functional with the given quadrature rule.
pub fn eval_boundary_functional(
    b: &BoundaryFunctional,
    u: &ExtendedField,
    q: &QuadratureRule,
) -> Result<f64, FunctionalError> {
    Ok(match b {
        BoundaryFunctional::PowerIntegral { power, weight } => {
            let p_exp = *power;
            q.integrate_with(u, |p, v| {
                Ok(weight.eval(&[p.x1, p.x2])? * v.abs().powf(p_exp))
            })?
        }
        BoundaryFunctional::PointEval(eta) => u.eval(*eta)?,
        BoundaryFunctional::LinearIntegral { weight } => {
            q.integrate_with(u, |p, v| Ok(weight.eval(&[p.x1, p.x2])? * v))?
        }
    })
}

/// Complete problem data: domain, grid resolution, operator, nonlinearity,
/// deviation, hole datum, outer weight, and boundary functional.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: AnnularDomain,
    pub n_r: usize,
    pub n_theta: usize,
    pub operator: EllipticOperator,
    pub f: ScalarFunc,
    pub sigma: DeviationMap,
    pub psi: ScalarFunc,
    pub zeta: ScalarFunc,
    pub boundary: BoundaryFunctional,
}

impl ProblemSpec {
    /// Validates arities and the static deviation/functional constraints.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        domain: AnnularDomain,
        n_r: usize,
        n_theta: usize,
        operator: EllipticOperator,
        f: ScalarFunc,
        sigma: DeviationMap,
        psi: ScalarFunc,
        zeta: ScalarFunc,
        boundary: BoundaryFunctional,
    ) -> Result<ProblemSpec, FunctionalError> {
        if f.arity() != 4 {
            return Err(FunctionalError::BadArity {
                what: "f",
                expected: 4,
                got: f.arity(),
            });
        }
        for (what, func) in [("psi", &psi), ("zeta", &zeta)] {
            if func.arity() != 2 {
                return Err(FunctionalError::BadArity {
                    what,
                    expected: 2,
                    got: func.arity(),
                });
            }
        }
        match &sigma {
            DeviationMap::Scale(c) => {
                if !(*c > 0.0 && *c <= 1.0) {
                    return Err(FunctionalError::InvalidDeviation(format!(
                        "scale factor must lie in (0, 1], got {c}"
                    )));
                }
            }
            DeviationMap::Constant(eta) => {
                if eta.norm() > domain.r_outer() {
                    return Err(FunctionalError::InvalidDeviation(format!(
                        "constant deviation target has norm {} > r_outer {}",
                        eta.norm(),
                        domain.r_outer()
                    )));
                }
            }
            DeviationMap::Components(s1, s2) => {
                for (what, func) in [("sigma1", s1), ("sigma2", s2)] {
                    if func.arity() != 2 {
                        return Err(FunctionalError::BadArity {
                            what,
                            expected: 2,
                            got: func.arity(),
                        });
                    }
                }
            }
            DeviationMap::Identity | DeviationMap::Rotate(_) => {}
        }
        match &boundary {
            BoundaryFunctional::PowerIntegral { power, weight } => {
                if !(*power >= 1.0) {
                    return Err(FunctionalError::InvalidFunctional(format!(
                        "power must be >= 1, got {power}"
                    )));
                }
                if weight.arity() != 2 {
                    return Err(FunctionalError::BadArity {
                        what: "B weight",
                        expected: 2,
                        got: weight.arity(),
                    });
                }
            }
            BoundaryFunctional::PointEval(eta) => {
                if eta.norm() > domain.r_outer() {
                    return Err(FunctionalError::InvalidFunctional(format!(
                        "evaluation point has norm {} > r_outer {}",
                        eta.norm(),
                        domain.r_outer()
                    )));
                }
            }
            BoundaryFunctional::LinearIntegral { weight } => {
                if weight.arity() != 2 {
                    return Err(FunctionalError::BadArity {
                        what: "B weight",
                        expected: 2,
                        got: weight.arity(),
                    });
                }
            }
        }
        Ok(ProblemSpec {
            domain,
            n_r,
            n_theta,
            operator,
            f,
            sigma,
            psi,
            zeta,
            boundary,
        })
    }
}

/// Outcome of the pointwise lower-bound spot check (condition on `f`).
#[derive(Debug, Clone)]
pub enum ConditionSample {
    /// No violation found on the sampled lattice; this is a spot check by
    /// sampling, not a proof.
    Ok { samples_per_axis: usize },
    Violation {
        at: Point,
        u: f64,
        v: f64,
        f_value: f64,
        lower_bound: f64,
    },
}

impl ConditionSample {
    pub fn is_ok(&self) -> bool {
        matches!(self, ConditionSample::Ok { .. })
    }
}

/// Result of checking the lower-bound hypotheses at one `rho`.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub rho: f64,
    pub ell: ScalarFunc,
    pub b_rho: f64,
    /// `max over nodes |G(ell) + b_rho * gamma|`.
    pub d_rho: f64,
    /// `d_rho > STRICT_TOL`.
    pub satisfied: bool,
    pub condition_a: ConditionSample,
}

/// The assembled problem: grid, factored system, auxiliary fields,
/// quadrature and precomputed deviation images. Immutable after
/// construction; safe to share across threads.
pub struct BvpOperator {
    spec: ProblemSpec,
    grid: Arc<PolarGrid>,
    system: DiscreteSystem,
    aux: AuxSolutions,
    quad: QuadratureRule,
    sigma_images: Vec<Point>,
}

impl BvpOperator {
    pub fn new(spec: ProblemSpec) -> Result<BvpOperator, FunctionalError> {
        let grid = build_grid(spec.domain, spec.n_r, spec.n_theta)?;

        // eager codomain check of the deviation at every node
        let limit = spec.domain.r_outer() + spec.domain.geom_tol();
        let mut sigma_images = Vec::with_capacity(grid.node_count());
        for i in 0..=grid.n_r() {
            for j in 0..grid.n_theta() {
                let image = spec.sigma.map(grid.node_position(i, j))?;
                if image.norm() > limit {
                    return Err(FunctionalError::SigmaOutOfDomain {
                        i,
                        j,
                        image_norm: image.norm(),
                        limit,
                    });
                }
                sigma_images.push(image);
            }
        }

        let system = assemble(&spec.operator, grid.clone())?;
        let aux = build_aux(&system, &spec.psi, &spec.zeta)?;
        let quad = QuadratureRule::build(grid.clone());
        Ok(BvpOperator {
            spec,
            grid,
            system,
            aux,
            quad,
            sigma_images,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn system(&self) -> &DiscreteSystem {
        &self.system
    }

    pub fn aux(&self) -> &AuxSolutions {
        &self.aux
    }

    pub fn quad(&self) -> &QuadratureRule {
        &self.quad
    }

    /// The superposition operator: `f(x, u(x), u(sigma(x)))` at every
    /// annulus node.
    pub fn nemytskii(&self, u: &ExtendedField) -> Result<Field, FunctionalError> {
        if u.grid() != &self.grid {
            return Err(GeometryError::GridMismatch.into());
        }
        let identity = matches!(self.spec.sigma, DeviationMap::Identity);
        let mut values = Vec::with_capacity(self.grid.node_count());
        for i in 0..=self.grid.n_r() {
            for j in 0..self.grid.n_theta() {
                let idx = self.grid.idx(i, j);
                let p = self.grid.node_position(i, j);
                let u_here = u.annulus().value(i, j);
                // the identity deviation duplicates the node value exactly,
                // without a detour through interpolation
                let u_dev = if identity {
                    u_here
                } else {
                    u.eval(self.sigma_images[idx])?
                };
                values.push(self.spec.f.eval(&[p.x1, p.x2, u_here, u_dev])?);
            }
        }
        Ok(Field::new(self.grid.clone(), values)?)
    }

    /// Value of the boundary functional on `u`.
    pub fn boundary_value(&self, u: &ExtendedField) -> Result<f64, FunctionalError> {
        eval_boundary_functional(&self.spec.boundary, u, &self.quad)
    }

    /// The composite response `T(u) = G(F(u)) + gamma_tilde * B[u]`,
    /// extended by zero into the hole.
    pub fn apply(&self, u: &ExtendedField) -> Result<ExtendedField, FunctionalError> {
        let forcing = self.nemytskii(u)?;
        let response = self.system.green_apply(&forcing)?;
        let b_value = self.boundary_value(u)?;
        let annulus = response.annulus().add_scaled(&self.aux.gamma, b_value)?;
        Ok(ExtendedField::zero_extension(annulus)?)
    }

    /// Checks the lower-bound hypotheses at `rho` with the default sampling
    /// lattice.
    pub fn check_hypotheses(
        &self,
        rho: f64,
        ell: &ScalarFunc,
        b_rho: f64,
    ) -> Result<HypothesisReport, FunctionalError> {
        self.check_hypotheses_sampled(rho, ell, b_rho, DEFAULT_CONDITION_SAMPLES)
    }

    /// Full-control variant: `samples_per_axis` is the lattice resolution
    /// used per node for the pointwise check on `f`.
    pub fn check_hypotheses_sampled(
        &self,
        rho: f64,
        ell: &ScalarFunc,
        b_rho: f64,
        samples_per_axis: usize,
    ) -> Result<HypothesisReport, FunctionalError> {
        if !(rho > 0.0) {
            return Err(FunctionalError::InvalidRho(rho));
        }
        if !(b_rho >= 0.0) {
            return Err(FunctionalError::NegativeBRho(b_rho));
        }

        // sample the lower bound; it must be nonnegative
        let mut ell_values = Vec::with_capacity(self.grid.node_count());
        for i in 0..=self.grid.n_r() {
            for j in 0..self.grid.n_theta() {
                let p = self.grid.node_position(i, j);
                let value = eval_lower_bound(ell, p, rho)?;
                if value < 0.0 {
                    return Err(FunctionalError::NegativeLowerBound { i, j, value });
                }
                ell_values.push(value);
            }
        }
        let ell_field = Field::new(self.grid.clone(), ell_values.clone())?;

        // d_rho = max over nodes of |G(ell) + b_rho * gamma|
        let g_ell = self.system.green_apply(&ell_field)?;
        let mut d_rho = 0.0f64;
        for (g, gam) in g_ell.annulus().values().iter().zip(self.aux.gamma.values()) {
            d_rho = d_rho.max((g + b_rho * gam).abs());
        }

        // condition on f: sample (u, v) in the box max{u, |v|} <= rho + sup(phi)
        let radius = rho + self.aux.phi.sup_abs()?;
        let n = samples_per_axis.max(2);
        let mut condition_a = ConditionSample::Ok {
            samples_per_axis: n,
        };
        'outer: for i in 0..=self.grid.n_r() {
            for j in 0..self.grid.n_theta() {
                let idx = self.grid.idx(i, j);
                let p = self.grid.node_position(i, j);
                let bound = ell_values[idx];
                let tol = 1e-12 * (1.0 + bound.abs());
                for ku in 0..n {
                    let u = radius * ku as f64 / (n - 1) as f64;
                    for kv in 0..n {
                        let v = -radius + 2.0 * radius * kv as f64 / (n - 1) as f64;
                        let f_value = self.spec.f.eval(&[p.x1, p.x2, u, v])?;
                        if f_value < bound - tol {
                            condition_a = ConditionSample::Violation {
                                at: p,
                                u,
                                v,
                                f_value,
                                lower_bound: bound,
                            };
                            break 'outer;
                        }
                    }
                }
            }
        }

        Ok(HypothesisReport {
            rho,
            ell: ell.clone(),
            b_rho,
            d_rho,
            satisfied: d_rho > STRICT_TOL,
            condition_a,
        })
    }
}

/// The lower bound may be a function of `(x1, x2)` or of `(x1, x2, rho)`;
/// rho-dependent families use the third argument.
pub fn eval_lower_bound(ell: &ScalarFunc, p: Point, rho: f64) -> Result<f64, FunctionalError> {
    match ell.arity() {
        2 => Ok(ell.eval(&[p.x1, p.x2])?),
        3 => Ok(ell.eval(&[p.x1, p.x2, rho])?),
        got => Err(FunctionalError::BadArity {
            what: "ell",
            expected: 2,
            got,
        }),
    }
}
