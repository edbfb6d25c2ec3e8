//! Flat TOML configuration for the `ibvp` command.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::eigen::HypothesisOptions;
use crate::expr::Expr;
use crate::multiplicity::RPolicy;
use crate::radial::AnnulusProblem;
use crate::shooting::{Problem, ShootingOptions, SlopeRange};
use crate::weights::{
    decompose, validate_decomposition, Decomposition, WeightFunction, DEFAULT_GRID, DEFAULT_SIGN_TOL,
};

/// Every key a config file may contain. Shown by `--help`.
pub const KEYS_HELP: &str = "\
CONFIG KEYS (flat TOML; unknown keys are rejected):
  length          domain length L                          (1-D problems)
  weight          a(x) as an expression in x; in r for `radial`
  mu              number, or a list of numbers for `sweep`  [default 1]
  sigma, tau      explicit hump endpoints (lists, both or neither)
  g               g(s) as an expression in s
  d_min, d_max    slope range                               [0, 5]
  slope_grid      number of slope grid intervals            [500]
  rtol, atol      integrator tolerances                     [1e-10, 1e-12]
  bc_tol          accepted |u(L)|                            [1e-9]
  sign_tol        sign threshold for the decomposition      [1e-12]
  curv_tol        concavity/convexity slack                 [1e-6]
  decomp_grid     decomposition sampling points             [4096]
  u_cap           escape bound on |u|                        [1e6]
  output_points   trajectory grid points                    [2001]
  r               explicit small threshold (skips choose_r)
  delta_fraction  choose_r margin as a fraction of lambda0  [0.1]
  r_grid          choose_r candidate count                  [400]
  s_lo, s_hi      growth-estimate windows                   [1e-10, 1e8]
  eig_rel_tol     eigenvalue bisection tolerance            [1e-10]
  out_dir         output directory (same as --out)
  dim, r1, r2     annulus dimension and radii               (`radial`)

Overrides: --set key=value, where value is TOML (bare words are strings).
Expressions: + - * / ^, unary minus, pi, sin cos exp log atan abs sqrt,
max(a, b), min(a, b).";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: Some(key.into()),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        ConfigError {
            key: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "config key `{k}`: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub length: Option<f64>,
    pub weight: Option<String>,
    pub mu: Option<MuSpec>,
    pub sigma: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub g: Option<String>,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub slope_grid: Option<usize>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub bc_tol: Option<f64>,
    pub sign_tol: Option<f64>,
    pub curv_tol: Option<f64>,
    pub decomp_grid: Option<usize>,
    pub u_cap: Option<f64>,
    pub output_points: Option<usize>,
    pub r: Option<f64>,
    pub delta_fraction: Option<f64>,
    pub r_grid: Option<usize>,
    pub s_lo: Option<f64>,
    pub s_hi: Option<f64>,
    pub eig_rel_tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub dim: Option<u32>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
}

const STRING_KEYS: [&str; 3] = ["weight", "g", "out_dir"];

fn parse_override(item: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| ConfigError::general(format!("override `{item}` is not key=value")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"));
    let value = match parsed {
        Some(v) if v.is_str() || !STRING_KEYS.contains(&key.as_str()) => v,
        _ => toml::Value::String(raw.to_string()),
    };
    Ok((key, value))
}

impl Config {
    /// Parses TOML text, then applies `key=value` overrides.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| ConfigError::general(e.to_string().trim_end().to_string()))?;
        for item in overrides {
            let (k, v) = parse_override(item)?;
            table.insert(k, v);
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::general(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    /// The Figure-1 reference problem.
    pub fn figure1() -> Self {
        Config {
            length: Some(crate::figure1::LENGTH),
            weight: Some(crate::figure1::WEIGHT.into()),
            mu: Some(MuSpec::One(crate::figure1::MU)),
            g: Some(crate::figure1::NONLINEARITY.into()),
            d_min: Some(0.0),
            d_max: Some(crate::figure1::D_MAX),
            slope_grid: Some(crate::figure1::GRID),
            ..Default::default()
        }
    }

    fn positive(key: &str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
        let v = v.unwrap_or(default);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(ConfigError::new(key, format!("must be positive, got {v}")))
        }
    }

    fn expr(key: &str, src: Option<&String>, var: &str) -> Result<Expr, ConfigError> {
        let src = src.ok_or_else(|| ConfigError::new(key, "missing"))?;
        Expr::parse(src, var).map_err(|e| ConfigError::new(key, e.to_string()))
    }

    pub fn shooting_options(&self) -> Result<ShootingOptions, ConfigError> {
        let d = ShootingOptions::default();
        Ok(ShootingOptions {
            rtol: Self::positive("rtol", self.rtol, d.rtol)?,
            atol: Self::positive("atol", self.atol, d.atol)?,
            u_cap: Self::positive("u_cap", self.u_cap, d.u_cap)?,
            output_points: match self.output_points {
                Some(m) if m < 5 => return Err(ConfigError::new("output_points", "must be >= 5")),
                Some(m) => m,
                None => d.output_points,
            },
            bc_tol: Self::positive("bc_tol", self.bc_tol, d.bc_tol)?,
            curv_tol: Self::positive("curv_tol", self.curv_tol, d.curv_tol)?,
            ..d
        })
    }

    pub fn hypothesis_options(&self) -> Result<HypothesisOptions, ConfigError> {
        let d = HypothesisOptions::default();
        let s_lo = Self::positive("s_lo", self.s_lo, d.s_lo)?;
        let s_hi = Self::positive("s_hi", self.s_hi, d.s_hi)?;
        Ok(HypothesisOptions {
            s_lo,
            s_hi,
            rel_tol: Self::positive("eig_rel_tol", self.eig_rel_tol, d.rel_tol)?,
            ..d
        })
    }

    pub fn slopes(&self) -> Result<SlopeRange, ConfigError> {
        let min = self.d_min.unwrap_or(0.0);
        let max = self.d_max.unwrap_or(5.0);
        let grid = self.slope_grid.unwrap_or(500);
        if !(min >= 0.0) {
            return Err(ConfigError::new("d_min", format!("must be >= 0, got {min}")));
        }
        if !(max > min && max.is_finite()) {
            return Err(ConfigError::new("d_max", format!("must exceed d_min = {min}, got {max}")));
        }
        if grid < 2 {
            return Err(ConfigError::new("slope_grid", "must be >= 2"));
        }
        Ok(SlopeRange { min, max, grid })
    }

    pub fn r_policy(&self) -> Result<RPolicy, ConfigError> {
        if let Some(r) = self.r {
            return Ok(RPolicy::Explicit(Self::positive("r", Some(r), 0.0)?));
        }
        let delta_fraction = self.delta_fraction.unwrap_or(0.1);
        if !(delta_fraction > 0.0 && delta_fraction < 1.0) {
            return Err(ConfigError::new(
                "delta_fraction",
                format!("must lie in (0, 1), got {delta_fraction}"),
            ));
        }
        let r_grid = self.r_grid.unwrap_or(400);
        if r_grid < 2 {
            return Err(ConfigError::new("r_grid", "must be >= 2"));
        }
        Ok(RPolicy::Choose {
            delta_fraction,
            r_grid,
        })
    }

    pub fn mu_values(&self) -> Result<Vec<f64>, ConfigError> {
        let values = match &self.mu {
            None => vec![1.0],
            Some(MuSpec::One(m)) => vec![*m],
            Some(MuSpec::Many(v)) => v.clone(),
        };
        if values.is_empty() {
            return Err(ConfigError::new("mu", "empty list"));
        }
        if let Some(bad) = values.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
            return Err(ConfigError::new("mu", format!("must be >= 0, got {bad}")));
        }
        Ok(values)
    }

    /// The single `mu` of a non-sweep run.
    pub fn mu(&self) -> Result<f64, ConfigError> {
        match self.mu_values()?.as_slice() {
            [m] => Ok(*m),
            _ => Err(ConfigError::new("mu", "a list is only accepted by `sweep`")),
        }
    }

    fn sign_tol(&self) -> Result<f64, ConfigError> {
        Self::positive("sign_tol", self.sign_tol, DEFAULT_SIGN_TOL)
    }

    fn decomp_grid(&self) -> Result<usize, ConfigError> {
        match self.decomp_grid.unwrap_or(DEFAULT_GRID) {
            n if n >= 2 => Ok(n),
            _ => Err(ConfigError::new("decomp_grid", "must be >= 2")),
        }
    }

    pub fn weight(&self, mu: f64) -> Result<WeightFunction, ConfigError> {
        let length = self.length.ok_or_else(|| ConfigError::new("length", "missing"))?;
        let length = Self::positive("length", Some(length), 1.0)?;
        let a = Self::expr("weight", self.weight.as_ref(), "x")?;
        WeightFunction::from_expr(a, mu, length).map_err(|e| ConfigError::new("mu", e.to_string()))
    }

    /// Explicit `sigma`/`tau` when given (validated), otherwise detected.
    pub fn decomposition(&self, w: &WeightFunction) -> Result<Decomposition, DecompositionError> {
        let tol = self.sign_tol()?;
        match (&self.sigma, &self.tau) {
            (Some(s), Some(t)) => {
                let d = Decomposition::new(s.clone(), t.clone(), w.length())
                    .map_err(|e| ConfigError::new("sigma", e.to_string()))?;
                let report = validate_decomposition(w, &d, tol);
                match report.violation {
                    None => Ok(d),
                    Some(v) => Err(ConfigError::new("sigma", format!("decomposition rejected: {v}")).into()),
                }
            }
            (None, None) => Ok(decompose(w, tol, self.decomp_grid()?)?),
            (Some(_), None) => Err(ConfigError::new("tau", "missing (sigma is set)").into()),
            (None, Some(_)) => Err(ConfigError::new("sigma", "missing (tau is set)").into()),
        }
    }

    pub fn g(&self) -> Result<Expr, ConfigError> {
        Self::expr("g", self.g.as_ref(), "s")
    }

    /// Weight, decomposition and nonlinearity at the given `mu`.
    pub fn problem(&self, mu: f64) -> Result<Problem, DecompositionError> {
        let w = self.weight(mu)?;
        let d = self.decomposition(&w)?;
        let g = self.g()?;
        Problem::new(w, d, g).map_err(|e| ConfigError::new("g", e.to_string()).into())
    }

    pub fn annulus(&self) -> Result<AnnulusProblem, ConfigError> {
        let dim = self.dim.ok_or_else(|| ConfigError::new("dim", "missing"))?;
        let r1 = self.r1.ok_or_else(|| ConfigError::new("r1", "missing"))?;
        let r2 = self.r2.ok_or_else(|| ConfigError::new("r2", "missing"))?;
        let a = Self::expr("weight", self.weight.as_ref(), "r")?;
        let g = self.g()?;
        AnnulusProblem::new(dim, r1, r2, a, self.mu()?, g).map_err(|e| ConfigError::new("dim", e.to_string()))
    }

    pub fn annulus_decomposition(&self, ap: &AnnulusProblem) -> Result<Decomposition, DecompositionError> {
        Ok(ap.radial_decomposition(self.sign_tol()?, self.decomp_grid()?)?)
    }
}

/// Decomposition problems are config errors when the user supplied the
/// humps, numeric errors when detection fails.
#[derive(Debug)]
pub enum DecompositionError {
    Config(ConfigError),
    Numeric(crate::Error),
}

impl From<ConfigError> for DecompositionError {
    fn from(e: ConfigError) -> Self {
        DecompositionError::Config(e)
    }
}

impl From<crate::Error> for DecompositionError {
    fn from(e: crate::Error) -> Self {
        DecompositionError::Numeric(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_toml_with_overrides() {
        let text = "length = 1.0\nweight = \"sin(3*pi*x)\"\nmu = 0.5\ng = \"s^3\"\n";
        let c = Config::from_toml(text, &["mu = [1, 2]".into(), "slope_grid=100".into()]).unwrap();
        assert_eq!(c.mu, Some(MuSpec::Many(vec![1.0, 2.0])));
        assert_eq!(c.slope_grid, Some(100));
        assert_eq!(c.length, Some(1.0));
        let c = Config::from_toml(text, &["weight=x*(1-x)".into(), "g=1".into()]).unwrap();
        assert_eq!(c.weight.as_deref(), Some("x*(1-x)"));
        assert_eq!(c.g.as_deref(), Some("1"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = Config::from_toml("lenght = 1.0\n", &[]).unwrap_err();
        assert!(e.message.contains("lenght"), "{e}");
    }

    #[test]
    fn bad_expression_names_key_and_offset() {
        let c = Config::from_toml("length = 1\nweight = \"sin(3*x\"\ng = \"s\"\n", &[]).unwrap();
        let e = c.weight(1.0).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("weight"));
        assert!(e.to_string().contains("byte 7"), "{e}");
    }

    #[test]
    fn invariants_checked() {
        let c = Config::from_toml("d_min = 2\nd_max = 1\n", &[]).unwrap();
        assert_eq!(c.slopes().unwrap_err().key.as_deref(), Some("d_max"));
        let c = Config::from_toml("rtol = -1\n", &[]).unwrap();
        assert_eq!(c.shooting_options().unwrap_err().key.as_deref(), Some("rtol"));
        let c = Config::from_toml("mu = [0.5, 1]\n", &[]).unwrap();
        assert!(c.mu().is_err());
        assert_eq!(c.mu_values().unwrap(), vec![0.5, 1.0]);
    }

    #[test]
    fn explicit_decomposition_is_validated() {
        let text = "length = 1\nweight = \"sin(3*pi*x)\"\nsigma = [0.0, 0.5]\ntau = [0.2, 1.0]\n";
        let c = Config::from_toml(text, &[]).unwrap();
        let w = c.weight(1.0).unwrap();
        assert!(matches!(c.decomposition(&w), Err(DecompositionError::Config(_))));
    }
}
