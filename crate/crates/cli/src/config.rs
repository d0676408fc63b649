//! Flat `section.key = value` configuration files.
//!
//! Lines starting with `#` (after optional whitespace) are comments, as is
//! anything after a `#` on a value line. Every key must appear in [`KEYS`];
//! unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use edes_wave_core::oracle_fd::{Boundary, FdRunConfig};
use edes_wave_core::quadrature::QuadratureConfig;
use edes_wave_core::{Point, ProblemSpec, SpatialDim};

use crate::catalog;

/// Every key a config file may set.
pub const KEYS: &[&str] = &[
    "problem.dim",
    "phi0.kind",
    "phi0.value",
    "phi0.slope",
    "phi0.offset",
    "phi0.center",
    "phi0.width",
    "phi0.amplitude",
    "phi1.kind",
    "phi1.value",
    "phi1.slope",
    "phi1.offset",
    "phi1.center",
    "phi1.width",
    "phi1.amplitude",
    "source.kind",
    "source.value",
    "source.center",
    "source.width",
    "source.amplitude",
    "source.exponent",
    "source.a",
    "source.f0",
    "quad.abs_tol",
    "quad.rel_tol",
    "quad.max_depth",
    "quad.base_order",
    "quad.grading_exponent",
    "eval.points",
    "eval.random_points",
    "eval.box",
    "eval.times",
    "ic.k_min",
    "ic.k_max",
    "ic.tolerance",
    "fd.t0",
    "fd.t_end",
    "fd.cfl",
    "fd.boundary",
    "fd.spacing",
    "fd.points",
    "fd.checkpoints",
    "fd.tolerance",
    "huygens.times",
    "huygens.samples",
    "huygens.tolerance",
    "huygens.interior_threshold",
    "kernel.samples",
    "kernel.max_phi",
    "kernel.tolerance",
    "decay.p",
    "decay.q",
    "decay.s",
    "decay.t_min",
    "decay.t_max",
    "decay.samples",
    "decay.spacing",
    "decay.half_width",
    "decay.mass_width",
    "decay.refinement_check",
    "decay.slope_margin",
    "decay.band",
    "output.dir",
    "output.prefix",
    "run.seed",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io {
        path: PathBuf,
        message: String,
    },
    Syntax {
        line: usize,
        message: String,
    },
    UnknownKey {
        line: usize,
        key: String,
    },
    DuplicateKey {
        line: usize,
        key: String,
        first: usize,
    },
    Value {
        key: String,
        message: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => {
                write!(f, "config: cannot read {}: {message}", path.display())
            }
            ConfigError::Syntax { line, message } => write!(f, "config line {line}: {message}"),
            ConfigError::UnknownKey { line, key } => {
                write!(f, "config line {line}: unknown key `{key}`")
            }
            ConfigError::DuplicateKey { line, key, first } => {
                write!(
                    f,
                    "config line {line}: key `{key}` already set on line {first}"
                )
            }
            ConfigError::Value { key, message } => write!(f, "config key `{key}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn value_err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed key/value pairs, before any interpretation.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `section.key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !key.contains('.') || key.split('.').any(str::is_empty) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("key `{key}` is not of the form section.key"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("key `{key}` has no value"),
                });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if let Some(prev) = entries.get(key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                    first: prev.line,
                });
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(RawConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.str(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| value_err(key, format!("cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated numbers.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.str(key).map(|v| parse_list(key, v)).transpose()
    }

    /// Semicolon-separated points of comma-separated coordinates.
    pub fn points(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>, ConfigError> {
        self.str(key)
            .map(|v| v.split(';').map(|p| parse_list(key, p)).collect())
            .transpose()
    }
}

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .map_err(|e| value_err(key, format!("cannot parse `{s}` in list: {e}")))
        })
        .collect()
}

/// Sample points for `solve`: explicit, random, or both.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub points: Vec<Point>,
    pub random_points: usize,
    pub box_half_width: f64,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcConfig {
    pub k_min: i32,
    pub k_max: i32,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub run: FdRunConfig,
    pub spacing: f64,
    /// Points per axis; `None` picks a box that holds the support and cone.
    pub points: Option<usize>,
    pub checkpoints: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HuygensConfig {
    pub times: Vec<f64>,
    pub samples: usize,
    pub tolerance: f64,
    pub interior_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub samples: usize,
    pub max_phi: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayConfig {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub spacing: f64,
    pub half_width: Option<f64>,
    pub mass_width: f64,
    pub refinement_check: bool,
    pub slope_margin: f64,
    pub band: f64,
}

/// Fully interpreted configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub quad: QuadratureConfig,
    pub eval: EvalConfig,
    pub ic: IcConfig,
    pub oracle: OracleConfig,
    pub huygens: HuygensConfig,
    pub kernel: KernelConfig,
    pub decay: DecayConfig,
    pub output_dir: PathBuf,
    pub output_prefix: Option<String>,
    pub seed: u64,
}

fn point_in(dim: SpatialDim, key: &str, coords: &[f64]) -> Result<Point, ConfigError> {
    dim.point(coords).map_err(|e| value_err(key, e.to_string()))
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let n: usize = raw
            .get("problem.dim")?
            .ok_or_else(|| value_err("problem.dim", "required"))?;
        let dim = SpatialDim::new(n).map_err(|e| value_err("problem.dim", e.to_string()))?;

        let defaults = QuadratureConfig::default();
        let quad = QuadratureConfig {
            abs_tol: raw.get_or("quad.abs_tol", defaults.abs_tol)?,
            rel_tol: raw.get_or("quad.rel_tol", defaults.rel_tol)?,
            max_depth: raw.get_or("quad.max_depth", defaults.max_depth)?,
            base_order: raw.get_or("quad.base_order", defaults.base_order)?,
            grading_exponent: raw.get_or("quad.grading_exponent", defaults.grading_exponent)?,
        };
        quad.validate()
            .map_err(|e| value_err("quad", e.to_string()))?;

        let mut spec = ProblemSpec::new(dim).with_quad(quad);
        spec.phi0 = catalog::data(raw, "phi0", dim)?;
        spec.phi1 = catalog::data(raw, "phi1", dim)?;
        spec.source = catalog::source(raw, dim)?;

        let points = raw
            .points("eval.points")?
            .unwrap_or_default()
            .iter()
            .map(|p| point_in(dim, "eval.points", p))
            .collect::<Result<Vec<_>, _>>()?;
        let eval = EvalConfig {
            points,
            random_points: raw.get_or("eval.random_points", 0)?,
            box_half_width: raw.get_or("eval.box", 2.0)?,
            times: raw.list("eval.times")?.unwrap_or_else(|| vec![1.0]),
        };
        if eval.times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(value_err("eval.times", "times must be positive"));
        }

        let ic = IcConfig {
            k_min: raw.get_or("ic.k_min", 3)?,
            k_max: raw.get_or("ic.k_max", 10)?,
            tolerance: raw.get_or("ic.tolerance", 1e-3)?,
        };
        if ic.k_min > ic.k_max {
            return Err(value_err("ic.k_min", "must not exceed ic.k_max"));
        }

        let fd_defaults = FdRunConfig::default();
        let boundary = match raw.str("fd.boundary").unwrap_or("periodic") {
            "periodic" => Boundary::Periodic,
            "dirichlet" => Boundary::ZeroDirichlet,
            other => {
                return Err(value_err(
                    "fd.boundary",
                    format!("expected periodic or dirichlet, got `{other}`"),
                ))
            }
        };
        let run = FdRunConfig {
            t0: raw.get_or("fd.t0", fd_defaults.t0)?,
            t_end: raw.get_or("fd.t_end", fd_defaults.t_end)?,
            cfl: raw.get_or("fd.cfl", fd_defaults.cfl)?,
            boundary,
        };
        run.validate().map_err(|e| value_err("fd", e.to_string()))?;
        let oracle = OracleConfig {
            run,
            spacing: raw.get_or("fd.spacing", 0.1)?,
            points: raw.get("fd.points")?,
            checkpoints: raw
                .list("fd.checkpoints")?
                .unwrap_or_else(|| vec![run.t_end]),
            tolerance: raw.get_or("fd.tolerance", 0.01)?,
        };

        let huygens = HuygensConfig {
            times: raw.list("huygens.times")?.unwrap_or_else(|| vec![1.0, 8.0]),
            samples: raw.get_or("huygens.samples", 50)?,
            tolerance: raw.get_or("huygens.tolerance", 1e-8)?,
            interior_threshold: raw.get_or("huygens.interior_threshold", 1e-6)?,
        };
        let kernel = KernelConfig {
            samples: raw.get_or("kernel.samples", 1000)?,
            max_phi: raw.get_or("kernel.max_phi", 10.0)?,
            tolerance: raw.get_or("kernel.tolerance", 1e-12)?,
        };
        let decay = DecayConfig {
            p: raw.get_or("decay.p", 1.2)?,
            q: raw.get_or("decay.q", 6.0)?,
            s: raw.get_or("decay.s", 0.75)?,
            t_min: raw.get_or("decay.t_min", 1.0)?,
            t_max: raw.get_or("decay.t_max", 100.0)?,
            samples: raw.get_or("decay.samples", 13)?,
            spacing: raw.get_or("decay.spacing", 0.3)?,
            half_width: raw.get("decay.half_width")?,
            mass_width: raw.get_or("decay.mass_width", 1.0)?,
            refinement_check: raw.get_or("decay.refinement_check", true)?,
            slope_margin: raw.get_or("decay.slope_margin", 0.1)?,
            band: raw.get_or("decay.band", 2.0)?,
        };
        if !(decay.t_min > 0.0 && decay.t_min < decay.t_max && decay.samples >= 2) {
            return Err(value_err(
                "decay",
                "needs 0 < t_min < t_max and at least 2 samples",
            ));
        }

        Ok(RunConfig {
            spec,
            quad,
            eval,
            ic,
            oracle,
            huygens,
            kernel,
            decay,
            output_dir: PathBuf::from(raw.str("output.dir").unwrap_or(".")),
            output_prefix: raw.str("output.prefix").map(str::to_string),
            seed: raw.get_or("run.seed", 0)?,
        })
    }

    pub fn dim(&self) -> SpatialDim {
        self.spec.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let raw =
            RawConfig::parse("# header\n\nproblem.dim = 3 # trailing\n  # indented\n").unwrap();
        assert_eq!(raw.get::<usize>("problem.dim").unwrap(), Some(3));
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = RawConfig::parse("problem.dim = 1\nproblem.dimm = 2\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 2,
                key: "problem.dimm".into()
            }
        );
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            RawConfig::parse("dim = 1"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            RawConfig::parse("problem.dim"),
            Err(ConfigError::Syntax { .. })
        ));
        assert!(matches!(
            RawConfig::parse("problem.dim ="),
            Err(ConfigError::Syntax { .. })
        ));
        assert!(matches!(
            RawConfig::parse("problem.dim = 1\nproblem.dim = 2"),
            Err(ConfigError::DuplicateKey {
                line: 2,
                first: 1,
                ..
            })
        ));
    }

    #[test]
    fn lists_and_points() {
        let raw = RawConfig::parse("eval.times = 1, 2.5,4\neval.points = 0,0; 1, -2\n").unwrap();
        assert_eq!(raw.list("eval.times").unwrap(), Some(vec![1.0, 2.5, 4.0]));
        assert_eq!(
            raw.points("eval.points").unwrap(),
            Some(vec![vec![0.0, 0.0], vec![1.0, -2.0]])
        );
        assert!(RawConfig::parse("eval.times = 1, x")
            .unwrap()
            .list("eval.times")
            .is_err());
    }

    #[test]
    fn run_config_defaults_and_validation() {
        let cfg = RunConfig::from_raw(&RawConfig::parse("problem.dim = 2").unwrap()).unwrap();
        assert_eq!(cfg.quad, QuadratureConfig::default());
        assert_eq!(cfg.ic.k_max, 10);
        assert!(RunConfig::from_raw(&RawConfig::parse("").unwrap()).is_err());
        assert!(RunConfig::from_raw(&RawConfig::parse("problem.dim = 4").unwrap()).is_err());
        let bad_point = RawConfig::parse("problem.dim = 2\neval.points = 1,2,3").unwrap();
        assert!(RunConfig::from_raw(&bad_point).is_err());
        let bad_quad = RawConfig::parse("problem.dim = 1\nquad.abs_tol = -1").unwrap();
        assert!(RunConfig::from_raw(&bad_quad).is_err());
    }
}
