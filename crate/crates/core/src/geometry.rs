//! Annular domains, polar tensor grids, extended fields and quadrature.
//!
//! The computational domain is a concentric circular annulus; functions on
//! the full closed disk are represented by an [`ExtendedField`]: grid values
//! on the annulus plus an analytic function on the hole. Evaluation anywhere
//! in the disk dispatches between hole function and bilinear interpolation
//! in `(r, theta)`, which is monotone and therefore preserves nonnegativity
//! of cone members up to rounding.

use crate::exprlang::{EvalError, ScalarFunc};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid annulus: need 0 < r_inner < r_outer, got ({r_inner}, {r_outer})")]
    InvalidDomain { r_inner: f64, r_outer: f64 },
    #[error("invalid grid counts: need n_r >= 2 and n_theta >= 8, got ({n_r}, {n_theta})")]
    InvalidGridCounts { n_r: usize, n_theta: usize },
    #[error("field value count {got} does not match grid node count {expected}")]
    ValueCount { expected: usize, got: usize },
    #[error("non-finite field value at node ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("point with norm {norm} lies outside the disk of radius {limit}")]
    OutsideDomain { norm: f64, limit: f64 },
    #[error(
        "extended field is discontinuous across the inner circle at node j={j}: \
         |annulus - hole| = {diff} exceeds {tol}"
    )]
    Compatibility { j: usize, diff: f64, tol: f64 },
    #[error("hole function evaluation failed: {0}")]
    HoleEval(#[from] EvalError),
}

/// A point in Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub fn new(x1: f64, x2: f64) -> Point {
        Point { x1, x2 }
    }

    pub fn from_polar(r: f64, theta: f64) -> Point {
        Point {
            x1: r * theta.cos(),
            x2: r * theta.sin(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    /// Angle in `[0, 2*pi)`.
    pub fn angle(&self) -> f64 {
        let t = self.x2.atan2(self.x1);
        if t < 0.0 {
            t + 2.0 * PI
        } else {
            t
        }
    }
}

/// Concentric circular annulus `r_inner <= |x| <= r_outer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnularDomain {
    r_inner: f64,
    r_outer: f64,
}

impl AnnularDomain {
    pub fn new(r_inner: f64, r_outer: f64) -> Result<AnnularDomain, GeometryError> {
        if !(r_inner.is_finite() && r_outer.is_finite() && 0.0 < r_inner && r_inner < r_outer) {
            return Err(GeometryError::InvalidDomain { r_inner, r_outer });
        }
        Ok(AnnularDomain { r_inner, r_outer })
    }

    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }

    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    /// Area of the annulus.
    pub fn area(&self) -> f64 {
        PI * (self.r_outer * self.r_outer - self.r_inner * self.r_inner)
    }

    /// Area of the hole disk.
    pub fn hole_area(&self) -> f64 {
        PI * self.r_inner * self.r_inner
    }

    /// Tolerance for points marginally outside the outer circle.
    pub fn geom_tol(&self) -> f64 {
        1e-12 * self.r_outer
    }
}

/// Tensor grid in polar coordinates, periodic in `theta`.
///
/// Rings `i = 0` and `i = n_r` are the inner and outer boundary circles;
/// angular index `j = n_theta` wraps to `j = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    domain: AnnularDomain,
    n_r: usize,
    n_theta: usize,
    dr: f64,
    dtheta: f64,
}

/// Builds the polar tensor grid (`n_r` ring intervals, `n_theta` angular
/// nodes).
pub fn build_grid(
    domain: AnnularDomain,
    n_r: usize,
    n_theta: usize,
) -> Result<Arc<PolarGrid>, GeometryError> {
    if n_r < 2 || n_theta < 8 {
        return Err(GeometryError::InvalidGridCounts { n_r, n_theta });
    }
    Ok(Arc::new(PolarGrid {
        domain,
        n_r,
        n_theta,
        dr: (domain.r_outer - domain.r_inner) / n_r as f64,
        dtheta: 2.0 * PI / n_theta as f64,
    }))
}

impl PolarGrid {
    pub fn domain(&self) -> &AnnularDomain {
        &self.domain
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.domain.r_inner + i as f64 * self.dr
    }

    pub fn angle(&self, j: usize) -> f64 {
        j as f64 * self.dtheta
    }

    pub fn node_position(&self, i: usize, j: usize) -> Point {
        Point::from_polar(self.radius(i), self.angle(j))
    }

    /// Total node count `(n_r + 1) * n_theta`.
    pub fn node_count(&self) -> usize {
        (self.n_r + 1) * self.n_theta
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    pub fn is_boundary_ring(&self, i: usize) -> bool {
        i == 0 || i == self.n_r
    }

    /// Radial node count of the hole sample lattice used by quadrature and
    /// discrete supremum norms: resolution comparable to the annulus grid.
    pub fn hole_n_r(&self) -> usize {
        ((self.domain.r_inner / self.dr).ceil() as usize).max(4)
    }
}

/// Grid values on the annulus, indexed `(ring, angle)`.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<PolarGrid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<PolarGrid>, values: Vec<f64>) -> Result<Field, GeometryError> {
        if values.len() != grid.node_count() {
            return Err(GeometryError::ValueCount {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite {
                i: k / grid.n_theta(),
                j: k % grid.n_theta(),
            });
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: Arc<PolarGrid>, c: f64) -> Field {
        Field {
            values: vec![c; grid.node_count()],
            grid,
        }
    }

    pub fn zeros(grid: Arc<PolarGrid>) -> Field {
        Field::constant(grid, 0.0)
    }

    pub fn from_fn(grid: Arc<PolarGrid>, mut f: impl FnMut(usize, usize, Point) -> f64) -> Field {
        let mut values = Vec::with_capacity(grid.node_count());
        for i in 0..=grid.n_r() {
            for j in 0..grid.n_theta() {
                values.push(f(i, j, grid.node_position(i, j)));
            }
        }
        Field { grid, values }
    }

    /// Samples a two-variable function of Cartesian position at every node.
    pub fn sample(grid: Arc<PolarGrid>, func: &ScalarFunc) -> Result<Field, EvalError> {
        let mut values = Vec::with_capacity(grid.node_count());
        for i in 0..=grid.n_r() {
            for j in 0..grid.n_theta() {
                let p = grid.node_position(i, j);
                values.push(func.eval(&[p.x1, p.x2])?);
            }
        }
        Ok(Field { grid, values })
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// New field `self + factor * other`.
    pub fn add_scaled(&self, other: &Field, factor: f64) -> Result<Field, GeometryError> {
        if self.grid != other.grid {
            return Err(GeometryError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Field {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

/// The analytic datum on the hole disk `|x| <= r_inner`.
#[derive(Clone)]
pub enum HoleFn {
    /// Identically zero (the trivial continuous extension).
    Zero,
    /// Arbitrary function of Cartesian position.
    Analytic(Arc<dyn Fn(Point) -> Result<f64, EvalError> + Send + Sync>),
}

impl HoleFn {
    pub fn eval(&self, p: Point) -> Result<f64, EvalError> {
        match self {
            HoleFn::Zero => Ok(0.0),
            HoleFn::Analytic(f) => f(p),
        }
    }

    pub fn from_scalar_func(func: ScalarFunc) -> HoleFn {
        HoleFn::Analytic(Arc::new(move |p: Point| func.eval(&[p.x1, p.x2])))
    }

    pub fn from_closure(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> HoleFn {
        HoleFn::Analytic(Arc::new(move |p: Point| Ok(f(p))))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, HoleFn::Zero)
    }
}

impl std::fmt::Debug for HoleFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HoleFn::Zero => f.write_str("HoleFn::Zero"),
            HoleFn::Analytic(_) => f.write_str("HoleFn::Analytic(..)"),
        }
    }
}

/// A function on the full closed disk: annulus grid values plus an analytic
/// hole function, continuous across the inner circle within `compat_tol`.
#[derive(Debug, Clone)]
pub struct ExtendedField {
    annulus: Field,
    hole: HoleFn,
}

impl ExtendedField {
    /// Glues annulus data to a hole function, checking continuity across the
    /// inner circle at every boundary node.
    pub fn new(annulus: Field, hole: HoleFn) -> Result<ExtendedField, GeometryError> {
        let tol = compat_tol(&annulus);
        for j in 0..annulus.grid().n_theta() {
            let p = annulus.grid().node_position(0, j);
            let hole_value = hole.eval(p)?;
            let diff = (annulus.value(0, j) - hole_value).abs();
            if diff > tol {
                return Err(GeometryError::Compatibility { j, diff, tol });
            }
        }
        Ok(ExtendedField { annulus, hole })
    }

    /// Annulus data extended by zero into the hole; requires a vanishing
    /// inner boundary ring.
    pub fn zero_extension(annulus: Field) -> Result<ExtendedField, GeometryError> {
        ExtendedField::new(annulus, HoleFn::Zero)
    }

    pub fn annulus(&self) -> &Field {
        &self.annulus
    }

    pub fn hole(&self) -> &HoleFn {
        &self.hole
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        self.annulus.grid()
    }

    /// Point evaluation on the closed disk: hole function for
    /// `|p| <= r_inner`, bilinear interpolation in `(r, theta)` on the
    /// annulus, with points within `geom_tol` beyond the outer circle
    /// clamped onto it.
    pub fn eval(&self, p: Point) -> Result<f64, GeometryError> {
        let grid = self.annulus.grid();
        let domain = grid.domain();
        let norm = p.norm();
        if norm <= domain.r_inner() {
            return Ok(self.hole.eval(p)?);
        }
        if norm > domain.r_outer() + domain.geom_tol() {
            return Err(GeometryError::OutsideDomain {
                norm,
                limit: domain.r_outer() + domain.geom_tol(),
            });
        }
        let r = norm.min(domain.r_outer());
        let theta = p.angle();

        let n_theta = grid.n_theta();
        let fi = ((r - domain.r_inner()) / grid.dr()).floor();
        let i = (fi as usize).min(grid.n_r() - 1);
        let tr = ((r - grid.radius(i)) / grid.dr()).clamp(0.0, 1.0);
        let fj = (theta / grid.dtheta()).floor();
        let j = (fj as usize).min(n_theta - 1);
        let tt = ((theta - grid.angle(j)) / grid.dtheta()).clamp(0.0, 1.0);
        let jn = (j + 1) % n_theta;

        let v00 = self.annulus.value(i, j);
        let v10 = self.annulus.value(i + 1, j);
        let v01 = self.annulus.value(i, jn);
        let v11 = self.annulus.value(i + 1, jn);
        Ok((1.0 - tr) * ((1.0 - tt) * v00 + tt * v01) + tr * ((1.0 - tt) * v10 + tt * v11))
    }

    /// Supremum of `|self - other|` over the discrete sample set: all
    /// annulus nodes plus the hole sample lattice. This is the library-wide
    /// discrete proxy for the supremum norm on the disk.
    pub fn sup_diff(&self, other: &ExtendedField) -> Result<f64, GeometryError> {
        if self.annulus.grid() != other.annulus.grid() {
            return Err(GeometryError::GridMismatch);
        }
        let mut m = 0.0f64;
        for (a, b) in self.annulus.values().iter().zip(other.annulus.values()) {
            m = m.max((a - b).abs());
        }
        if !(self.hole.is_zero() && other.hole.is_zero()) {
            for p in hole_sample_points(self.annulus.grid()) {
                m = m.max((self.hole.eval(p)? - other.hole.eval(p)?).abs());
            }
        }
        Ok(m)
    }

    /// Discrete supremum of `|self|` over annulus nodes and hole samples.
    pub fn sup_abs(&self) -> Result<f64, GeometryError> {
        let mut m = self.annulus.sup_abs();
        if !self.hole.is_zero() {
            for p in hole_sample_points(self.annulus.grid()) {
                m = m.max(self.hole.eval(p)?.abs());
            }
        }
        Ok(m)
    }
}

fn compat_tol(annulus: &Field) -> f64 {
    1e-8 * (1.0 + annulus.sup_abs())
}

/// The hole sample lattice shared by quadrature and supremum norms: polar
/// product points with radial nodes at cell midpoints, so the coordinate
/// singularity at the origin is never sampled.
pub fn hole_sample_points(grid: &Arc<PolarGrid>) -> impl Iterator<Item = Point> + '_ {
    let n_r_hole = grid.hole_n_r();
    let h = grid.domain().r_inner() / n_r_hole as f64;
    let n_theta = grid.n_theta();
    let dtheta = 2.0 * PI / n_theta as f64;
    (0..n_r_hole).flat_map(move |k| {
        let r = (k as f64 + 0.5) * h;
        (0..n_theta).map(move |l| Point::from_polar(r, l as f64 * dtheta))
    })
}

/// Compensated (Kahan) summation; quadrature sums must not drift.
#[derive(Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Quadrature over the full disk: exact cell areas per annulus node plus a
/// midpoint polar product rule on the hole.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    grid: Arc<PolarGrid>,
    annulus_weights: Vec<f64>,
    hole_points: Vec<Point>,
    hole_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn build(grid: Arc<PolarGrid>) -> QuadratureRule {
        let domain = *grid.domain();
        let dr = grid.dr();
        let dtheta = grid.dtheta();
        let mut annulus_weights = Vec::with_capacity(grid.node_count());
        for i in 0..=grid.n_r() {
            // radial extents of the cell owned by ring i, clipped to the annulus
            let r_lo = if i == 0 {
                domain.r_inner()
            } else {
                domain.r_inner() + (i as f64 - 0.5) * dr
            };
            let r_hi = if i == grid.n_r() {
                domain.r_outer()
            } else {
                domain.r_inner() + (i as f64 + 0.5) * dr
            };
            let w = 0.5 * (r_hi * r_hi - r_lo * r_lo) * dtheta;
            for _ in 0..grid.n_theta() {
                annulus_weights.push(w);
            }
        }

        let n_r_hole = grid.hole_n_r();
        let h = domain.r_inner() / n_r_hole as f64;
        let n_theta = grid.n_theta();
        let dtheta_hole = 2.0 * PI / n_theta as f64;
        let mut hole_points = Vec::with_capacity(n_r_hole * n_theta);
        let mut hole_weights = Vec::with_capacity(n_r_hole * n_theta);
        for k in 0..n_r_hole {
            let r_lo = k as f64 * h;
            let r_hi = (k as f64 + 1.0) * h;
            let r_mid = (k as f64 + 0.5) * h;
            let w = 0.5 * (r_hi * r_hi - r_lo * r_lo) * dtheta_hole;
            for l in 0..n_theta {
                hole_points.push(Point::from_polar(r_mid, l as f64 * dtheta_hole));
                hole_weights.push(w);
            }
        }

        QuadratureRule {
            grid,
            annulus_weights,
            hole_points,
            hole_weights,
        }
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    /// Sum of the annulus weights (equals the annulus area up to rounding).
    pub fn annulus_area(&self) -> f64 {
        let mut s = KahanSum::default();
        for &w in &self.annulus_weights {
            s.add(w);
        }
        s.sum
    }

    /// Sum of the hole weights (equals the hole area up to rounding).
    pub fn hole_area(&self) -> f64 {
        let mut s = KahanSum::default();
        for &w in &self.hole_weights {
            s.add(w);
        }
        s.sum
    }

    pub fn hole_points(&self) -> &[Point] {
        &self.hole_points
    }

    /// Integral of `u` over the full disk.
    pub fn integrate(&self, u: &ExtendedField) -> Result<f64, GeometryError> {
        self.integrate_with(u, |_, v| Ok(v))
    }

    /// Integral of a plain annulus field over the annulus alone (no hole
    /// contribution).
    pub fn integrate_annulus(&self, field: &Field) -> Result<f64, GeometryError> {
        if &self.grid != field.grid() {
            return Err(GeometryError::GridMismatch);
        }
        let mut s = KahanSum::default();
        for (w, v) in self.annulus_weights.iter().zip(field.values()) {
            s.add(w * v);
        }
        Ok(s.sum)
    }

    /// Integral of `g(x, u(x))` over the full disk; `g` receives the sample
    /// position and the sampled value of `u` there.
    pub fn integrate_with(
        &self,
        u: &ExtendedField,
        g: impl Fn(Point, f64) -> Result<f64, EvalError>,
    ) -> Result<f64, GeometryError> {
        if &self.grid != u.grid() {
            return Err(GeometryError::GridMismatch);
        }
        let mut s = KahanSum::default();
        let grid = &self.grid;
        for i in 0..=grid.n_r() {
            for j in 0..grid.n_theta() {
                let idx = grid.idx(i, j);
                let p = grid.node_position(i, j);
                s.add(self.annulus_weights[idx] * g(p, u.annulus().value(i, j))?);
            }
        }
        for (p, &w) in self.hole_points.iter().zip(&self.hole_weights) {
            s.add(w * g(*p, u.hole().eval(*p)?)?);
        }
        Ok(s.sum)
    }
}
