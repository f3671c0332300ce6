//! Config-file parsing: line-based `[section]` / `key = value` format with
//! quoted expression strings.
//!
//! Parsing is total: every malformed file produces a diagnostic naming the
//! line and field, never a panic. Expressions are compiled eagerly so that
//! syntax errors surface at load time.

use crate::CliError;
use annulus_core::elliptic::EllipticOperator;
use annulus_core::exprlang::{compile, ScalarFunc};
use annulus_core::functional::{BoundaryFunctional, DeviationMap, ProblemSpec};
use annulus_core::geometry::{AnnularDomain, Point};
use std::collections::BTreeMap;
use std::path::Path;

/// Raw parsed file: `(section, key) -> (value, line number)`.
struct RawConfig {
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<RawConfig, CliError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    CliError::Config(format!("line {lineno}: unterminated section header"))
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "line {lineno}: expected `key = value`, got `{line}`"
                ))
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!("line {lineno}: empty key")));
            }
            if section.is_empty() {
                return Err(CliError::Config(format!(
                    "line {lineno}: key `{key}` appears before any [section]"
                )));
            }
            let previous = entries.insert(
                (section.clone(), key.clone()),
                (value.trim().to_string(), lineno),
            );
            if let Some((_, first_line)) = previous {
                return Err(CliError::Config(format!(
                    "line {lineno}: duplicate key `{section}.{key}` (first set on line {first_line})"
                )));
            }
        }
        Ok(RawConfig { entries })
    }

    fn get(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|(v, l)| (v.as_str(), *l))
    }

    fn require(&self, section: &str, key: &str) -> Result<(&str, usize), CliError> {
        self.get(section, key)
            .ok_or_else(|| CliError::Config(format!("missing required field `{section}.{key}`")))
    }

    fn f64_of(&self, section: &str, key: &str, value: &str, line: usize) -> Result<f64, CliError> {
        value.parse().map_err(|_| {
            CliError::Config(format!(
                "line {line}: `{section}.{key}` is not a number: `{value}`"
            ))
        })
    }

    fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(section, key) {
            Some((v, line)) => Ok(Some(self.f64_of(section, key, v, line)?)),
            None => Ok(None),
        }
    }

    fn require_f64(&self, section: &str, key: &str) -> Result<f64, CliError> {
        let (v, line) = self.require(section, key)?;
        self.f64_of(section, key, v, line)
    }

    fn require_usize(&self, section: &str, key: &str) -> Result<usize, CliError> {
        let (v, line) = self.require(section, key)?;
        v.parse().map_err(|_| {
            CliError::Config(format!(
                "line {line}: `{section}.{key}` is not a nonnegative integer: `{v}`"
            ))
        })
    }

    fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>, CliError> {
        match self.get(section, key) {
            Some((v, line)) => Ok(Some(v.parse().map_err(|_| {
                CliError::Config(format!(
                    "line {line}: `{section}.{key}` is not a nonnegative integer: `{v}`"
                ))
            })?)),
            None => Ok(None),
        }
    }

    /// Comma-separated float list.
    fn get_f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.get(section, key) {
            Some((v, line)) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    out.push(self.f64_of(section, key, part, line)?);
                }
                if out.is_empty() {
                    return Err(CliError::Config(format!(
                        "line {line}: `{section}.{key}` is an empty list"
                    )));
                }
                Ok(Some(out))
            }
            None => Ok(None),
        }
    }

    /// Bare or quoted string.
    fn get_str(&self, section: &str, key: &str) -> Option<(String, usize)> {
        self.get(section, key)
            .map(|(v, line)| (unquote(v).to_string(), line))
    }

    fn compile_expr(
        &self,
        section: &str,
        key: &str,
        value: &str,
        line: usize,
        vars: &[&str],
    ) -> Result<ScalarFunc, CliError> {
        compile(unquote(value), vars)
            .map_err(|e| CliError::Config(format!("line {line}: `{section}.{key}`: {e}")))
    }

    fn get_expr(
        &self,
        section: &str,
        key: &str,
        vars: &[&str],
        default: Option<f64>,
    ) -> Result<ScalarFunc, CliError> {
        match self.get(section, key) {
            Some((v, line)) => self.compile_expr(section, key, v, line, vars),
            None => match default {
                Some(c) => Ok(ScalarFunc::constant(c, vars)),
                None => Err(CliError::Config(format!(
                    "missing required field `{section}.{key}`"
                ))),
            },
        }
    }
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// Fully typed run configuration.
#[derive(Debug)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub rho: Option<f64>,
    pub rhos: Option<Vec<f64>>,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// Lower-bound family `ell(x1, x2, rho)` for the hypothesis check.
    pub ell: Option<ScalarFunc>,
    pub b_rho: f64,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config `{}`: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let raw = RawConfig::parse(text)?;
    let xy = ["x1", "x2"];

    // [domain]
    let r_inner = raw.require_f64("domain", "r_inner")?;
    let r_outer = raw.require_f64("domain", "r_outer")?;
    let domain = AnnularDomain::new(r_inner, r_outer)
        .map_err(|e| CliError::Config(format!("[domain]: {e}")))?;

    // [grid]
    let n_r = raw.require_usize("grid", "n_r")?;
    let n_theta = raw.require_usize("grid", "n_theta")?;

    // [operator] (optional; defaults to the negative Laplacian)
    let mu = raw.get_expr("operator", "mu", &xy, Some(1.0))?;
    let drift1 = raw.get_expr("operator", "drift1", &xy, Some(0.0))?;
    let drift2 = raw.get_expr("operator", "drift2", &xy, Some(0.0))?;
    let potential = raw.get_expr("operator", "potential", &xy, Some(0.0))?;
    let mu_floor = raw.get_f64("operator", "mu_floor")?.unwrap_or(1e-8);
    let operator = EllipticOperator::new(mu, (drift1, drift2), potential, mu_floor)
        .map_err(|e| CliError::Config(format!("[operator]: {e}")))?;

    // [problem]
    let f = raw.get_expr("problem", "f", &["x1", "x2", "u", "v"], None)?;
    let psi = raw.get_expr("problem", "psi", &xy, None)?;
    let zeta = raw.get_expr("problem", "zeta", &xy, None)?;
    let sigma = parse_sigma(&raw)?;
    let boundary = parse_boundary(&raw)?;

    let spec = ProblemSpec::new(
        domain, n_r, n_theta, operator, f, sigma, psi, zeta, boundary,
    )
    .map_err(|e| CliError::Config(format!("[problem]: {e}")))?;

    // [solver] (optional)
    let rho = raw.get_f64("solver", "rho")?;
    let rhos = raw.get_f64_list("solver", "rhos")?;
    let tol = raw.get_f64("solver", "tol")?.unwrap_or(1e-10);
    let max_iter = raw.get_usize("solver", "max_iter")?.unwrap_or(500);
    let damping = raw.get_f64("solver", "damping")?.unwrap_or(1.0);

    // [hypotheses] (optional); ell may depend on rho
    let ell = match raw.get("hypotheses", "ell") {
        Some((v, line)) => {
            Some(raw.compile_expr("hypotheses", "ell", v, line, &["x1", "x2", "rho"])?)
        }
        None => None,
    };
    let b_rho = raw.get_f64("hypotheses", "b_rho")?.unwrap_or(0.0);

    Ok(RunConfig {
        spec,
        rho,
        rhos,
        tol,
        max_iter,
        damping,
        ell,
        b_rho,
    })
}

fn parse_sigma(raw: &RawConfig) -> Result<DeviationMap, CliError> {
    let xy = ["x1", "x2"];
    let Some((kind, line)) = raw.get_str("problem", "sigma") else {
        return Ok(DeviationMap::Identity);
    };
    match kind.as_str() {
        "identity" => Ok(DeviationMap::Identity),
        "scale" => Ok(DeviationMap::Scale(
            raw.require_f64("problem", "sigma_scale")?,
        )),
        "rotate" => Ok(DeviationMap::Rotate(
            raw.require_f64("problem", "sigma_angle")?,
        )),
        "constant" => Ok(DeviationMap::Constant(Point::new(
            raw.require_f64("problem", "sigma_x1")?,
            raw.require_f64("problem", "sigma_x2")?,
        ))),
        "components" => {
            let (v1, l1) = raw.require("problem", "sigma1")?;
            let s1 = raw.compile_expr("problem", "sigma1", v1, l1, &xy)?;
            let (v2, l2) = raw.require("problem", "sigma2")?;
            let s2 = raw.compile_expr("problem", "sigma2", v2, l2, &xy)?;
            Ok(DeviationMap::Components(s1, s2))
        }
        other => Err(CliError::Config(format!(
            "line {line}: unknown sigma kind `{other}` \
             (expected identity, scale, rotate, constant or components)"
        ))),
    }
}

fn parse_boundary(raw: &RawConfig) -> Result<BoundaryFunctional, CliError> {
    let xy = ["x1", "x2"];
    let (kind, line) = raw
        .get_str("problem", "B")
        .ok_or_else(|| CliError::Config("missing required field `problem.B`".into()))?;
    match kind.as_str() {
        "power_integral" => Ok(BoundaryFunctional::PowerIntegral {
            power: raw.require_f64("problem", "B_power")?,
            weight: raw.get_expr("problem", "B_weight", &xy, Some(1.0))?,
        }),
        "point_eval" => Ok(BoundaryFunctional::PointEval(Point::new(
            raw.require_f64("problem", "B_x1")?,
            raw.require_f64("problem", "B_x2")?,
        ))),
        "linear_integral" => Ok(BoundaryFunctional::LinearIntegral {
            weight: raw.get_expr("problem", "B_weight", &xy, Some(1.0))?,
        }),
        other => Err(CliError::Config(format!(
            "line {line}: unknown B kind `{other}` \
             (expected power_integral, point_eval or linear_integral)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
r_inner = 1.0
r_outer = 2.0

[grid]
n_r = 8
n_theta = 16

[problem]
f = "(1+x1^2)*exp(-u-v)"
psi = "x1^2+x2^2"
zeta = "1"
sigma = scale
sigma_scale = 0.5
B = power_integral
B_power = 2
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.spec.n_r, 8);
        assert_eq!(cfg.spec.n_theta, 16);
        assert_eq!(cfg.max_iter, 500);
        assert!(cfg.rho.is_none());
        assert!(cfg.ell.is_none());
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let err = parse("[domain]\nr_inner = abc\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("domain.r_inner"), "{err}");

        let err = parse(MINIMAL.replace("B_power = 2", "").as_str())
            .unwrap_err()
            .to_string();
        assert!(err.contains("problem.B_power"), "{err}");

        let err = parse("[domain]\nr_inner 1.0\n").unwrap_err().to_string();
        assert!(err.contains("expected `key = value`"), "{err}");

        let bad_expr = MINIMAL.replace("\"x1^2+x2^2\"", "\"x1^^2\"");
        let err = parse(&bad_expr).unwrap_err().to_string();
        assert!(err.contains("problem.psi"), "{err}");
    }

    #[test]
    fn duplicate_keys_rejected() {
        let text = format!("{MINIMAL}\n[solver]\nrho = 1\nrho = 2\n");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn rho_list_parses() {
        let text = format!("{MINIMAL}\n[solver]\nrhos = 0.5, 1.0, 2.0\n");
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.rhos.unwrap(), vec![0.5, 1.0, 2.0]);
    }
}
