//! Initial-condition descriptors: built-in shapes or stored samples.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use curveflow::{make_grid, Field, SupportField};

use crate::error::ConfigError;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Circle {
        r: f64,
    },
    PerturbedCircle {
        r: f64,
        k: u32,
        eps: f64,
    },
    /// Snapshot JSON (uses its `S` array) or plain text with one sample per
    /// line (last column when there are several).
    File(PathBuf),
}

fn invalid(message: String) -> ConfigError {
    ConfigError::Invalid {
        key: "initial",
        message,
    }
}

fn number<T: std::str::FromStr>(word: Option<&str>, what: &str) -> Result<T, ConfigError> {
    word.ok_or_else(|| invalid(format!("missing {what}")))?
        .parse()
        .map_err(|_| invalid(format!("bad {what} `{}`", word.unwrap_or_default())))
}

impl InitialCondition {
    /// Parses a descriptor. Relative paths are resolved against `base_dir`
    /// and must exist.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let mut words = text.split_whitespace();
        let ic = match words.next() {
            Some("circle") => {
                let r = number(words.next(), "radius")?;
                InitialCondition::Circle { r }
            }
            Some("perturbed_circle") => {
                let r = number(words.next(), "radius")?;
                let k = number(words.next(), "wavenumber")?;
                let eps = number(words.next(), "amplitude")?;
                InitialCondition::PerturbedCircle { r, k, eps }
            }
            Some(_) => {
                let raw = PathBuf::from(text.trim());
                let path = match base_dir {
                    Some(base) if raw.is_relative() => base.join(raw),
                    _ => raw,
                };
                if !path.is_file() {
                    return Err(invalid(format!("no such file {}", path.display())));
                }
                return Ok(InitialCondition::File(path));
            }
            None => return Err(invalid("empty descriptor".into())),
        };
        if let Some(extra) = words.next() {
            return Err(invalid(format!("unexpected `{extra}`")));
        }
        Ok(ic)
    }

    /// Samples the initial support function on `n` points. Stored samples
    /// of a different length are resampled spectrally.
    pub fn build(&self, n: usize) -> anyhow::Result<SupportField<f64>> {
        let grid = make_grid::<f64>(n)?;
        Ok(match self {
            InitialCondition::Circle { r } => SupportField::circle(grid, *r),
            InitialCondition::PerturbedCircle { r, k, eps } => {
                SupportField::perturbed_circle(grid, *r, *k, *eps)
            }
            InitialCondition::File(path) => {
                let values = read_samples(path)?;
                let own = make_grid::<f64>(values.len())?;
                SupportField::new(Field::new(own, values)?.resample(&grid))
            }
        })
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Circle { r } => write!(f, "circle {r:?}"),
            InitialCondition::PerturbedCircle { r, k, eps } => {
                write!(f, "perturbed_circle {r:?} {k} {eps:?}")
            }
            InitialCondition::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// Support samples from a snapshot JSON or a text file.
pub fn read_samples(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(&text)?;
        let s = doc
            .get("S")
            .and_then(|v| v.as_array())
            .ok_or_else(|| anyhow::anyhow!("{}: no `S` array", path.display()))?;
        return s
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| anyhow::anyhow!("{}: non-numeric sample", path.display()))
            })
            .collect();
    }
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let last = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .rfind(|w| !w.is_empty());
        let v: f64 = last
            .unwrap_or_default()
            .parse()
            .map_err(|_| anyhow::anyhow!("{}:{}: bad sample `{line}`", path.display(), i + 1))?;
        values.push(v);
    }
    Ok(values)
}
