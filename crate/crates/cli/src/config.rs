//! `key=value` run configuration.
//!
//! One assignment per line; `#` starts a comment. Lists are comma separated.
//! Named cases: `test1`, `test2`, `test3`. `case=custom` enables the data keys
//! `domain`, `alpha`, `lower`, `upper`, `chi`, `kappa`, `f`, `y_target`,
//! `e_target`, with piecewise-constant coefficients and constant vector data.

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: key '{key}': {message}")]
    Key {
        line: usize,
        key: String,
        message: String,
    },
    #[error("missing required key '{0}'")]
    Missing(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineMode {
    Uniform,
    Adaptive,
}

/// Data of a user-defined problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomSpec {
    /// A structured domain name or a path to an MSH file.
    pub domain: String,
    pub alpha: f64,
    /// One entry per subdomain, or a single entry applied to all.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub chi: Vec<f64>,
    pub kappa: Vec<f64>,
    pub f: [f64; 3],
    pub y_target: [f64; 3],
    pub e_target: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaseSpec {
    Named(String),
    Custom(CustomSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: CaseSpec,
    pub refine: RefineMode,
    /// Number of uniform meshes.
    pub levels: usize,
    /// Overrides the initial resolution of structured domains.
    pub n0: Option<usize>,
    pub max_cells: usize,
    pub max_iters: usize,
    pub theta_mark: f64,
    pub tol_ssn: f64,
    pub tol_linear: f64,
    pub out: Option<PathBuf>,
    /// Write a VTK file every `vtk_every` iterations; 0 disables output.
    pub vtk_every: usize,
}

const NAMED_CASES: [&str; 3] = ["test1", "test2", "test3"];
const CUSTOM_KEYS: [&str; 9] = [
    "domain", "alpha", "lower", "upper", "chi", "kappa", "f", "y_target", "e_target",
];
const RUN_KEYS: [&str; 11] = [
    "case",
    "refine",
    "levels",
    "n0",
    "max_cells",
    "max_iters",
    "theta_mark",
    "tol_ssn",
    "tol_linear",
    "out",
    "vtk_every",
];

struct Entry {
    line: usize,
    value: String,
}

struct Entries(HashMap<String, Entry>);

impl Entries {
    fn key_err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Key {
            line: self.0.get(key).map_or(0, |e| e.line),
            key: key.to_owned(),
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.0
            .get(key)
            .map(|e| {
                e.value
                    .parse::<T>()
                    .map_err(|_| self.key_err(key, format!("cannot parse '{}'", e.value)))
            })
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.0
            .get(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| self.key_err(key, format!("cannot parse '{}'", t.trim())))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()
    }

    fn vector(&self, key: &str) -> Result<Option<[f64; 3]>, ConfigError> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 3 => Ok(Some([v[0], v[1], v[2]])),
            Some(v) => Err(self.key_err(key, format!("expected 3 components, got {}", v.len()))),
        }
    }

    fn unit_interval(
        &self,
        key: &str,
        default: f64,
        closed_above: bool,
    ) -> Result<f64, ConfigError> {
        let v = self.parse::<f64>(key)?.unwrap_or(default);
        let ok = v > 0.0 && if closed_above { v <= 1.0 } else { v < 1.0 };
        if !ok {
            let range = if closed_above { "(0, 1]" } else { "(0, 1)" };
            return Err(self.key_err(key, format!("{v} must lie in {range}")));
        }
        Ok(v)
    }
}

/// Parses a configuration text, filling in defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected key=value, found '{content}'"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !RUN_KEYS.contains(&key) && !CUSTOM_KEYS.contains(&key) {
            return Err(ConfigError::Key {
                line,
                key: key.to_owned(),
                message: "unknown key".into(),
            });
        }
        let entry = Entry {
            line,
            value: value.to_owned(),
        };
        if let Some(prev) = map.insert(key.to_owned(), entry) {
            return Err(ConfigError::Key {
                line,
                key: key.to_owned(),
                message: format!("already set on line {}", prev.line),
            });
        }
    }
    let e = Entries(map);

    let case_name =
        e.0.get("case")
            .ok_or(ConfigError::Missing("case"))?
            .value
            .clone();
    let case = if case_name == "custom" {
        CaseSpec::Custom(custom_spec(&e)?)
    } else if NAMED_CASES.contains(&case_name.as_str()) {
        if let Some(k) = CUSTOM_KEYS.iter().find(|k| e.0.contains_key(**k)) {
            return Err(e.key_err(k, "only allowed with case=custom"));
        }
        CaseSpec::Named(case_name)
    } else {
        return Err(e.key_err(
            "case",
            format!("unknown case '{case_name}', expected test1, test2, test3 or custom"),
        ));
    };

    let refine = match e.0.get("refine").map(|v| v.value.as_str()) {
        None | Some("adaptive") => RefineMode::Adaptive,
        Some("uniform") => RefineMode::Uniform,
        Some(other) => {
            return Err(e.key_err(
                "refine",
                format!("'{other}' is neither uniform nor adaptive"),
            ))
        }
    };
    let levels = e.parse::<usize>("levels")?.unwrap_or(4);
    if levels == 0 {
        return Err(e.key_err("levels", "must be at least 1"));
    }
    let n0 = e.parse::<usize>("n0")?;
    if n0 == Some(0) {
        return Err(e.key_err("n0", "must be at least 1"));
    }
    let max_cells = e.parse::<usize>("max_cells")?.unwrap_or(100_000);
    let max_iters = e.parse::<usize>("max_iters")?.unwrap_or(50);
    if max_iters == 0 {
        return Err(e.key_err("max_iters", "must be at least 1"));
    }
    Ok(RunConfig {
        case,
        refine,
        levels,
        n0,
        max_cells,
        max_iters,
        theta_mark: e.unit_interval("theta_mark", 0.5, true)?,
        tol_ssn: e.unit_interval("tol_ssn", 1e-9, false)?,
        tol_linear: e.unit_interval("tol_linear", 1e-10, false)?,
        out: e.0.get("out").map(|v| PathBuf::from(&v.value)),
        vtk_every: e.parse::<usize>("vtk_every")?.unwrap_or(0),
    })
}

fn custom_spec(e: &Entries) -> Result<CustomSpec, ConfigError> {
    let domain =
        e.0.get("domain")
            .map(|v| v.value.clone())
            .ok_or(ConfigError::Missing("domain"))?;
    let alpha = e
        .parse::<f64>("alpha")?
        .ok_or(ConfigError::Missing("alpha"))?;
    if !(alpha > 0.0) {
        return Err(e.key_err("alpha", "must be positive"));
    }
    let lower = e.list("lower")?.ok_or(ConfigError::Missing("lower"))?;
    let upper = e.list("upper")?.ok_or(ConfigError::Missing("upper"))?;
    let f = e.vector("f")?.ok_or(ConfigError::Missing("f"))?;
    Ok(CustomSpec {
        domain,
        alpha,
        lower,
        upper,
        chi: e.list("chi")?.unwrap_or_else(|| vec![1.0]),
        kappa: e.list("kappa")?.unwrap_or_else(|| vec![1.0]),
        f,
        y_target: e.vector("y_target")?.unwrap_or([0.0; 3]),
        e_target: e.vector("e_target")?.unwrap_or([0.0; 3]),
    })
}
