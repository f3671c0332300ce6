//! Closed-form radial solutions on annuli and a 1D finite-difference
//! cross-check.
//!
//! Radially symmetric problems for the negative Laplacian reduce to the ODE
//! `-u'' - u'/r = load` on `[r1, r2]`. Harmonic profiles `a + b ln r` and
//! constant-load (torsion) profiles `-c r^2/4 + a ln r + b` cover every
//! closed form the 2D test suite needs; everything else goes through the
//! tridiagonal solver, which is implemented independently of the 2D path.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RadialError {
    #[error("invalid radial interval: need 0 < r1 < r2, got ({r1}, {r2})")]
    InvalidInterval { r1: f64, r2: f64 },
    #[error("radial grid needs n >= 4, got {0}")]
    TooFewNodes(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    /// `a + b ln r`: solves the homogeneous radial equation.
    Harmonic { a: f64, b: f64 },
    /// `-load r^2/4 + a ln r + b`: solves `-u'' - u'/r = load`.
    Torsion { load: f64, a: f64, b: f64 },
}

/// A closed-form radial profile on `[r1, r2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub kind: ProfileKind,
    pub r1: f64,
    pub r2: f64,
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Harmonic { a, b } => a + b * r.ln(),
            ProfileKind::Torsion { load, a, b } => -load * r * r / 4.0 + a * r.ln() + b,
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Harmonic { b, .. } => b / r,
            ProfileKind::Torsion { load, a, .. } => -load * r / 2.0 + a / r,
        }
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Harmonic { b, .. } => -b / (r * r),
            ProfileKind::Torsion { load, a, .. } => -load / 2.0 - a / (r * r),
        }
    }

    /// The analytic radial operator `-u'' - u'/r` applied to the profile;
    /// reproduces the load (0 for harmonic profiles) up to rounding.
    pub fn radial_residual(&self, r: f64) -> f64 {
        -self.second_derivative(r) - self.derivative(r) / r
    }

    pub fn load(&self) -> f64 {
        match self.kind {
            ProfileKind::Harmonic { .. } => 0.0,
            ProfileKind::Torsion { load, .. } => load,
        }
    }
}

fn check_interval(r1: f64, r2: f64) -> Result<(), RadialError> {
    if !(0.0 < r1 && r1 < r2) {
        return Err(RadialError::InvalidInterval { r1, r2 });
    }
    Ok(())
}

/// The harmonic profile with boundary values `alpha` at `r1`, `beta` at `r2`.
pub fn harmonic_closed_form(
    r1: f64,
    r2: f64,
    alpha: f64,
    beta: f64,
) -> Result<RadialProfile, RadialError> {
    check_interval(r1, r2)?;
    let b = (beta - alpha) / (r2 / r1).ln();
    let a = alpha - b * r1.ln();
    Ok(RadialProfile {
        kind: ProfileKind::Harmonic { a, b },
        r1,
        r2,
    })
}

/// The constant-load profile vanishing at both endpoints:
/// `-u'' - u'/r = c`, `u(r1) = u(r2) = 0`.
pub fn torsion_closed_form(r1: f64, r2: f64, c: f64) -> Result<RadialProfile, RadialError> {
    check_interval(r1, r2)?;
    let a = c * (r2 * r2 - r1 * r1) / (4.0 * (r2 / r1).ln());
    let b = c * r1 * r1 / 4.0 - a * r1.ln();
    Ok(RadialProfile {
        kind: ProfileKind::Torsion { load: c, a, b },
        r1,
        r2,
    })
}

/// Location and value of the maximum of `|p|` over `[r1, r2]`, found from
/// the analytic derivative (endpoints plus the interior stationary point
/// where one exists), never by numeric optimization.
pub fn radial_sup(p: &RadialProfile) -> (f64, f64) {
    let mut candidates = vec![p.r1, p.r2];
    if let ProfileKind::Torsion { load, a, .. } = p.kind {
        if load != 0.0 {
            let r_star_sq = 2.0 * a / load;
            if r_star_sq > 0.0 {
                let r_star = r_star_sq.sqrt();
                if p.r1 < r_star && r_star < p.r2 {
                    candidates.push(r_star);
                }
            }
        }
    }
    let mut best = (p.r1, 0.0f64);
    for r in candidates {
        let v = p.eval(r).abs();
        if v > best.1 {
            best = (r, v);
        }
    }
    best
}

/// Centered-difference solve of `-u'' - u'/r = load(r)` on `n+1` uniform
/// nodes with Dirichlet values `bc = (alpha, beta)`. Second-order accurate.
pub fn radial_fd_solve_with(
    r1: f64,
    r2: f64,
    load: impl Fn(f64) -> f64,
    bc: (f64, f64),
    n: usize,
) -> Result<Vec<f64>, RadialError> {
    check_interval(r1, r2)?;
    if n < 4 {
        return Err(RadialError::TooFewNodes(n));
    }
    let h = (r2 - r1) / n as f64;
    let m = n - 1; // interior unknowns
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for k in 0..m {
        let r = r1 + (k + 1) as f64 * h;
        sub[k] = -1.0 / (h * h) + 1.0 / (2.0 * r * h);
        diag[k] = 2.0 / (h * h);
        sup[k] = -1.0 / (h * h) - 1.0 / (2.0 * r * h);
        rhs[k] = load(r);
    }
    rhs[0] -= sub[0] * bc.0;
    rhs[m - 1] -= sup[m - 1] * bc.1;

    // Thomas sweep; the system is an irreducible M-matrix, no pivoting needed
    for k in 1..m {
        let w = sub[k] / diag[k - 1];
        diag[k] -= w * sup[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    let mut u = vec![0.0; n + 1];
    u[0] = bc.0;
    u[n] = bc.1;
    u[n - 1] = rhs[m - 1] / diag[m - 1];
    for k in (0..m - 1).rev() {
        u[k + 1] = (rhs[k] - sup[k] * u[k + 2]) / diag[k];
    }
    Ok(u)
}

/// Constant-load variant of [`radial_fd_solve_with`].
pub fn radial_fd_solve(
    r1: f64,
    r2: f64,
    load: f64,
    bc: (f64, f64),
    n: usize,
) -> Result<Vec<f64>, RadialError> {
    radial_fd_solve_with(r1, r2, |_| load, bc, n)
}

/// The closed-form supremum of the unit-load torsion solution on `(1, e)`:
/// `(1/8) [ (e^2 - 1) ln((e^2 - 1)/2) + 3 - e^2 ]`.
pub fn unit_torsion_sup() -> f64 {
    let e2 = std::f64::consts::E * std::f64::consts::E;
    0.125 * ((e2 - 1.0) * ((e2 - 1.0) / 2.0).ln() + 3.0 - e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn sample_radii(r1: f64, r2: f64) -> Vec<f64> {
        (0..=20).map(|k| r1 + (r2 - r1) * k as f64 / 20.0).collect()
    }

    #[test]
    fn harmonic_profiles_match_log_forms() {
        let gamma = harmonic_closed_form(1.0, E, 0.0, 1.0).unwrap();
        let delta = harmonic_closed_form(1.0, E, 1.0, 0.0).unwrap();
        for r in sample_radii(1.0, E) {
            assert!((gamma.eval(r) - r.ln()).abs() < 1e-14);
            assert!((delta.eval(r) - (1.0 - r.ln())).abs() < 1e-14);
        }
        let flat = harmonic_closed_form(0.5, 3.0, 2.5, 2.5).unwrap();
        for r in sample_radii(0.5, 3.0) {
            assert_eq!(flat.eval(r), 2.5);
        }
        assert!(harmonic_closed_form(2.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn torsion_profile_matches_quarter_form() {
        let u0 = torsion_closed_form(1.0, E, 1.0).unwrap();
        for r in sample_radii(1.0, E) {
            let expect = 0.25 * ((E * E - 1.0) * r.ln() + 1.0 - r * r);
            assert!((u0.eval(r) - expect).abs() < 1e-14);
        }
        assert!(u0.eval(1.0).abs() < 1e-15);
        assert!(u0.eval(E).abs() < 1e-14);

        let zero = torsion_closed_form(1.0, E, 0.0).unwrap();
        assert_eq!(zero.eval(1.7), 0.0);

        let double = torsion_closed_form(1.0, E, 2.0).unwrap();
        for r in sample_radii(1.0, E) {
            assert!((double.eval(r) - 2.0 * u0.eval(r)).abs() < 1e-13);
        }
    }

    #[test]
    fn analytic_operator_reproduces_load() {
        let profiles = [
            torsion_closed_form(1.0, E, 1.0).unwrap(),
            torsion_closed_form(0.5, 4.0, -2.5).unwrap(),
            harmonic_closed_form(1.0, E, 0.0, 1.0).unwrap(),
            harmonic_closed_form(0.3, 2.0, 1.0, -1.0).unwrap(),
        ];
        for p in profiles {
            let scale = match p.kind {
                ProfileKind::Harmonic { a, b } => a.abs() + b.abs() + 1.0,
                ProfileKind::Torsion { load, a, b } => load.abs() + a.abs() + b.abs() + 1.0,
            };
            for r in sample_radii(p.r1, p.r2) {
                let got = p.radial_residual(r);
                assert!(
                    (got - p.load()).abs() <= 1e-12 * scale,
                    "residual {got} vs load {} at r={r}",
                    p.load()
                );
            }
        }
    }

    #[test]
    fn sup_of_unit_torsion_matches_closed_expression() {
        let u0 = torsion_closed_form(1.0, E, 1.0).unwrap();
        let (r_star, value) = radial_sup(&u0);
        let r_expect = ((E * E - 1.0) / 2.0).sqrt();
        assert!((r_star - r_expect).abs() < 1e-14);
        let direct = unit_torsion_sup();
        assert!(
            (value - direct).abs() <= 1e-14 * direct,
            "{value} vs {direct}"
        );
        // sanity: roughly 0.379
        assert!((value - 0.379).abs() < 1e-3);
    }

    #[test]
    fn sup_of_monotone_and_zero_profiles() {
        let gamma = harmonic_closed_form(1.0, E, 0.0, 1.0).unwrap();
        let (r_star, value) = radial_sup(&gamma);
        assert_eq!(r_star, E);
        assert!((value - 1.0).abs() < 1e-15);

        let zero = torsion_closed_form(2.0, 3.0, 0.0).unwrap();
        assert_eq!(radial_sup(&zero).1, 0.0);
    }

    #[test]
    fn fd_solve_matches_closed_forms() {
        let u0 = torsion_closed_form(1.0, E, 1.0).unwrap();
        let u = radial_fd_solve(1.0, E, 1.0, (0.0, 0.0), 256).unwrap();
        let h = (E - 1.0) / 256.0;
        let mut err = 0.0f64;
        for (k, v) in u.iter().enumerate() {
            err = err.max((v - u0.eval(1.0 + k as f64 * h)).abs());
        }
        assert!(err < 1e-4, "torsion fd error {err}");

        let gamma = harmonic_closed_form(1.0, E, 0.0, 1.0).unwrap();
        let u = radial_fd_solve(1.0, E, 0.0, (0.0, 1.0), 128).unwrap();
        let h = (E - 1.0) / 128.0;
        let mut err = 0.0f64;
        for (k, v) in u.iter().enumerate() {
            err = err.max((v - gamma.eval(1.0 + k as f64 * h)).abs());
        }
        assert!(err < 1e-4, "harmonic fd error {err}");

        let c = 2.75;
        let u = radial_fd_solve(1.0, 2.0, 0.0, (c, c), 16).unwrap();
        for v in u {
            assert!((v - c).abs() <= 1e-13 * c);
        }
    }

    #[test]
    fn fd_solve_is_second_order() {
        let u0 = torsion_closed_form(1.0, E, 1.0).unwrap();
        let mut errors = Vec::new();
        for n in [32usize, 64, 128] {
            let u = radial_fd_solve(1.0, E, 1.0, (0.0, 0.0), n).unwrap();
            let h = (E - 1.0) / n as f64;
            let mut err = 0.0f64;
            for (k, v) in u.iter().enumerate() {
                err = err.max((v - u0.eval(1.0 + k as f64 * h)).abs());
            }
            errors.push(err);
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..5.0).contains(&ratio), "ratios from {errors:?}");
        }
    }
}
