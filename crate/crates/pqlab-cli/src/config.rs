//! Flat key-value run configuration.
//!
//! One `key = value` pair per line, keys in dotted sections (`spec.p`,
//! `mesh.n`, `schedule.eps`). `#` starts a comment. List values are either
//! comma-separated numbers or one of the range forms `lin:a:b:n`
//! (n points, endpoints included) and `geom:a:b:n` (log-spaced).
//!
//! A run manifest is written in exactly this format with every resolved
//! value made explicit, so a manifest is itself a valid configuration that
//! reproduces the run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use pqlab::ProblemSpec;

/// Errors that should stop a run before any computation starts (exit 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`", lineno + 1));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return err(format!("line {}: empty key", lineno + 1));
            }
            if map.insert(key.clone(), value).is_some() {
                return err(format!("line {}: duplicate key `{key}`", lineno + 1));
            }
        }
        Ok(Config { map })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key)
            .ok_or_else(|| ConfigError(format!("missing required key `{key}`")))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, ConfigError> {
        parse_f64(self.require(key)?, key)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            Some(v) => parse_f64(v, key),
            None => Ok(default),
        }
    }

    pub fn require_u32(&self, key: &str) -> Result<u32, ConfigError> {
        self.require(key)?
            .parse()
            .map_err(|e| ConfigError(format!("key `{key}`: {e}")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|e| ConfigError(format!("key `{key}`: {e}"))),
            None => Ok(default),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|e| ConfigError(format!("key `{key}`: {e}"))),
            None => Ok(default),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Comma list or `lin:a:b:n` / `geom:a:b:n` range.
    pub fn require_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        parse_list(self.require(key)?, key)
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.get(key) {
            Some(v) => parse_list(v, key),
            None => Ok(default.to_vec()),
        }
    }

    /// Problem description from the `spec.*` section. Validation failures are
    /// configuration errors: no computation may start from an invalid spec.
    pub fn problem_spec(&self) -> Result<ProblemSpec, ConfigError> {
        let radius = self.f64_or("spec.radius", 1.0)?;
        let spec = ProblemSpec {
            dim: self.require_u32("spec.N")?,
            p: self.require_f64("spec.p")?,
            q: self.require_f64("spec.q")?,
            s: self.require_f64("spec.s")?,
            b: self.f64_or("spec.b", 0.0)?,
            nu: self.f64_or("spec.nu", 0.0)?,
            mu: self.f64_or("spec.mu", 0.0)?,
            radius,
            rho: self.f64_or("spec.rho", radius)?,
        };
        spec.validated()
            .map_err(|e| ConfigError(format!("invalid spec: {e}")))
    }

    /// Mesh resolution from the `mesh.*` section.
    pub fn mesh_params(&self) -> Result<(usize, f64), ConfigError> {
        Ok((
            self.usize_or("mesh.n", 256)?,
            self.f64_or("mesh.grading", 1.0)?,
        ))
    }

    /// Concentration schedule: `schedule.eps` paired with `schedule.delta`
    /// (same length), or coupled as delta = eps^kappa via `schedule.kappa`,
    /// or delta = 1 when neither is given.
    pub fn schedule(&self) -> Result<Vec<(f64, f64)>, ConfigError> {
        let eps = self.require_list("schedule.eps")?;
        if eps.is_empty() {
            return err("schedule.eps is empty");
        }
        if let Some(deltas) = self.get("schedule.delta") {
            let deltas = parse_list(deltas, "schedule.delta")?;
            if deltas.len() != eps.len() {
                return err(format!(
                    "schedule.delta has {} entries, schedule.eps has {}",
                    deltas.len(),
                    eps.len()
                ));
            }
            return Ok(eps.into_iter().zip(deltas).collect());
        }
        if let Some(kappa) = self.get("schedule.kappa") {
            let kappa = parse_f64(kappa, "schedule.kappa")?;
            if !(0.0..1.0).contains(&kappa) {
                return err(format!("schedule.kappa = {kappa}, need [0, 1)"));
            }
            return Ok(eps.iter().map(|&e| (e, e.powf(kappa))).collect());
        }
        Ok(eps.into_iter().map(|e| (e, 1.0)).collect())
    }
}

fn parse_f64(v: &str, key: &str) -> Result<f64, ConfigError> {
    v.parse()
        .map_err(|e| ConfigError(format!("key `{key}`: {e}")))
}

fn parse_list(v: &str, key: &str) -> Result<Vec<f64>, ConfigError> {
    let v = v.trim();
    if let Some(range) = v.strip_prefix("lin:").map(|r| (r, false)).or_else(|| {
        v.strip_prefix("geom:").map(|r| (r, true))
    }) {
        let (body, geometric) = range;
        let parts: Vec<&str> = body.split(':').collect();
        if parts.len() != 3 {
            return err(format!("key `{key}`: range form needs a:b:n"));
        }
        let a = parse_f64(parts[0], key)?;
        let b = parse_f64(parts[1], key)?;
        let n: usize = parts[2]
            .parse()
            .map_err(|e| ConfigError(format!("key `{key}`: {e}")))?;
        if n < 2 {
            return err(format!("key `{key}`: range needs at least 2 points"));
        }
        if geometric && (a <= 0.0 || b <= 0.0) {
            return err(format!("key `{key}`: geometric range needs positive endpoints"));
        }
        let pts = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if geometric {
                    (a.ln() + t * (b.ln() - a.ln())).exp()
                } else {
                    a + t * (b - a)
                }
            })
            .collect();
        return Ok(pts);
    }
    v.split(',')
        .map(|piece| parse_f64(piece.trim(), key))
        .collect()
}
