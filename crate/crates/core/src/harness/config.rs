//! Experiment configuration: `key = value` files, flag overrides and
//! validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::airy::{AiryDiscretization, DEFAULT_CUTOFF, DEFAULT_MESH};
use crate::eig::{EigConfig, DEFAULT_REL_TOL};
use crate::{Error, Result};

/// Keys accepted in a config file; they match the long flag names.
pub const CONFIG_KEYS: &[&str] = &[
    "seed", "out", "workers", "n", "p", "q", "beta", "reps", "mesh", "cutoff", "tol",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Product,
    Single,
    TwReference,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Product => "product",
            Mode::Single => "single",
            Mode::TwReference => "tw-reference",
        }
    }
}

/// Partially specified settings, from a file or from flags.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub beta: Option<f64>,
    pub reps: Option<usize>,
    pub mesh: Option<f64>,
    pub cutoff: Option<f64>,
    pub tol: Option<f64>,
}

fn parse_value<T: FromStr>(path: &Path, line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| {
        Error::Config(format!(
            "{}:{line}: cannot parse value {raw:?} for key `{key}`",
            path.display()
        ))
    })
}

impl Settings {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut s = Settings::default();
        let mut seen = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{line}: expected `key = value`", path.display()))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(prev) = seen.insert(key.to_string(), line) {
                return Err(Error::Config(format!(
                    "{}:{line}: key `{key}` already set on line {prev}",
                    path.display()
                )));
            }
            match key {
                "seed" => s.seed = Some(parse_value(path, line, key, value)?),
                "out" => s.out = Some(PathBuf::from(value)),
                "workers" => s.workers = Some(parse_value(path, line, key, value)?),
                "n" => s.n = Some(parse_value(path, line, key, value)?),
                "p" => s.p = Some(parse_value(path, line, key, value)?),
                "q" => s.q = Some(parse_value(path, line, key, value)?),
                "beta" => s.beta = Some(parse_value(path, line, key, value)?),
                "reps" => s.reps = Some(parse_value(path, line, key, value)?),
                "mesh" => s.mesh = Some(parse_value(path, line, key, value)?),
                "cutoff" => s.cutoff = Some(parse_value(path, line, key, value)?),
                "tol" => s.tol = Some(parse_value(path, line, key, value)?),
                other => {
                    return Err(Error::Config(format!(
                        "{}:{line}: unknown key `{other}` (allowed: {})",
                        path.display(),
                        CONFIG_KEYS.join(", ")
                    )))
                }
            }
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overridden_by(self, flags: &Settings) -> Settings {
        Settings {
            seed: flags.seed.or(self.seed),
            out: flags.out.clone().or(self.out),
            workers: flags.workers.or(self.workers),
            n: flags.n.or(self.n),
            p: flags.p.or(self.p),
            q: flags.q.or(self.q),
            beta: flags.beta.or(self.beta),
            reps: flags.reps.or(self.reps),
            mesh: flags.mesh.or(self.mesh),
            cutoff: flags.cutoff.or(self.cutoff),
            tol: flags.tol.or(self.tol),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub beta: f64,
    pub reps: usize,
    pub seed: u64,
    pub tol: f64,
    pub mesh: f64,
    pub cutoff: f64,
    pub out: PathBuf,
    pub workers: usize,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    /// Fills unset fields with defaults (`n = 100`, `p = q = n`, `beta = 1`,
    /// `reps = 1000`, `seed = 0`) and validates.
    pub fn resolve(mode: Mode, s: &Settings) -> Result<Self> {
        let n = s.n.unwrap_or(100);
        let p = s.p.unwrap_or(n);
        let config = Self {
            mode,
            n,
            p,
            q: s.q.unwrap_or(p),
            beta: s.beta.unwrap_or(1.0),
            reps: s.reps.unwrap_or(1000),
            seed: s.seed.unwrap_or(0),
            tol: s.tol.unwrap_or(DEFAULT_REL_TOL),
            mesh: s.mesh.unwrap_or(DEFAULT_MESH),
            cutoff: s.cutoff.unwrap_or(DEFAULT_CUTOFF),
            out: s.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            workers: s.workers.unwrap_or_else(default_workers),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.reps == 0 {
            return bad("reps must be >= 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be positive and finite, got {}", self.beta));
        }
        match self.mode {
            Mode::Product => {
                if self.n == 0 || self.n > self.p || self.p > self.q {
                    return bad(format!(
                        "product mode requires 1 <= n <= p <= q, got n = {}, p = {}, q = {}",
                        self.n, self.p, self.q
                    ));
                }
            }
            Mode::Single => {
                if self.n == 0 || self.n > self.p {
                    return bad(format!(
                        "single mode requires 1 <= n <= p, got n = {}, p = {}",
                        self.n, self.p
                    ));
                }
            }
            Mode::TwReference => {}
        }
        self.eig_config()?;
        self.airy()?;
        Ok(())
    }

    pub fn eig_config(&self) -> Result<EigConfig> {
        EigConfig::new(self.tol, None).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn airy(&self) -> Result<AiryDiscretization> {
        AiryDiscretization::new(self.beta, self.mesh, self.cutoff).map_err(|e| Error::Config(e.to_string()))
    }

    /// File stem for this run's artifacts.
    pub fn label(&self) -> String {
        match self.mode {
            Mode::Product => format!(
                "product-n{}-p{}-q{}-beta{}-seed{}",
                self.n, self.p, self.q, self.beta, self.seed
            ),
            Mode::Single => format!("single-n{}-p{}-beta{}-seed{}", self.n, self.p, self.beta, self.seed),
            Mode::TwReference => format!(
                "tw-beta{}-mesh{}-cutoff{}-seed{}",
                self.beta, self.mesh, self.cutoff, self.seed
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Settings> {
        Settings::parse(text, Path::new("test.conf"))
    }

    #[test]
    fn parses_keys_and_comments() {
        let s = parse("# sweep\nn = 64\n p=80 \nbeta = 2.5\n\nseed = 9\nout = results\n").unwrap();
        assert_eq!(s.n, Some(64));
        assert_eq!(s.p, Some(80));
        assert_eq!(s.beta, Some(2.5));
        assert_eq!(s.seed, Some(9));
        assert_eq!(s.out, Some(PathBuf::from("results")));
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = parse("n = 4\nsize = 5\n").unwrap_err().to_string();
        assert!(err.contains("test.conf:2"), "{err}");
        assert!(err.contains("unknown key"), "{err}");
    }

    #[test]
    fn bad_value_and_syntax_report_line() {
        assert!(parse("n = four").unwrap_err().to_string().contains("test.conf:1"));
        assert!(parse("\nn 4").unwrap_err().to_string().contains("test.conf:2"));
        assert!(parse("n = 4\nn = 5").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = parse("n = 4\nbeta = 2\nreps = 10").unwrap();
        let flags = Settings {
            beta: Some(3.0),
            ..Default::default()
        };
        let merged = file.overridden_by(&flags);
        assert_eq!(merged.n, Some(4));
        assert_eq!(merged.beta, Some(3.0));
        assert_eq!(merged.reps, Some(10));
    }

    #[test]
    fn product_ordering_enforced() {
        let s = Settings {
            n: Some(10),
            p: Some(9),
            q: Some(12),
            ..Default::default()
        };
        assert!(matches!(ExperimentConfig::resolve(Mode::Product, &s), Err(Error::Config(_))));
        let s = Settings {
            n: Some(10),
            p: Some(12),
            q: Some(11),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(Mode::Product, &s).is_err());
        assert!(ExperimentConfig::resolve(Mode::Single, &s).is_ok());
    }

    #[test]
    fn overrides_are_range_checked() {
        let s = Settings {
            mesh: Some(0.5),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(Mode::TwReference, &s).is_err());
        let s = Settings {
            tol: Some(0.5),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(Mode::Product, &s).is_err());
        let s = Settings {
            reps: Some(0),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(Mode::Single, &s).is_err());
    }
}
