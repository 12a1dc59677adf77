//! Flat INI configuration: one section per subcommand, command-line flags
//! layered on top.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "LABLAB_SEED";

#[derive(Debug, Default)]
pub struct Config {
    ini: Option<Ini>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let ini = Ini::load_from_str(&text).map_err(|e| CliError::config("config", e.to_string()))?;
        Ok(Self { ini: Some(ini) })
    }

    pub fn section(&self, name: &str) -> Section {
        let values = self
            .ini
            .as_ref()
            .and_then(|ini| ini.section(Some(name)))
            .map(|props| props.iter().map(|(k, v)| (k.to_string(), v.trim().to_string())).collect())
            .unwrap_or_default();
        Section {
            name: name.to_string(),
            values,
        }
    }
}

/// Settings of one subcommand. Lookups with a default record the default,
/// so [`Section::echo`] reproduces the run.
#[derive(Debug, Clone)]
pub struct Section {
    name: String,
    values: BTreeMap<String, String>,
}

impl Section {
    pub fn set(&mut self, key: &str, value: Option<&String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.trim().to_string());
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::config(key, format!("cannot parse {v:?}: {e}"))))
            .transpose()
    }

    pub fn require<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::config(key, format!("missing from [{}]", self.name)))
    }

    pub fn get_or<T>(&mut self, key: &str, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.get(key)? {
            Some(v) => Ok(v),
            None => {
                self.values.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    /// `flag > LABLAB_SEED > seed key`; absence is an error.
    pub fn resolve_seed(&mut self, flag: Option<u64>) -> Result<u64> {
        let seed = match (flag, std::env::var(SEED_ENV).ok()) {
            (Some(s), _) => s,
            (None, Some(env)) => env
                .trim()
                .parse()
                .map_err(|e| CliError::config(SEED_ENV, format!("cannot parse {env:?}: {e}")))?,
            (None, None) => self.require("seed")?,
        };
        self.values.insert("seed".into(), seed.to_string());
        Ok(seed)
    }

    pub fn echo(&self) -> String {
        let mut out = format!("[{}]\n", self.name);
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// `log:lo:hi:points` or an explicit comma separated list.
pub fn parse_grid(key: &str, spec: &str) -> Result<Vec<f64>> {
    let bad = |m: String| CliError::config(key, m);
    if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(bad(format!("expected log:lo:hi:points, got {spec:?}")));
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad(format!("bad lower end {lo:?}")))?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad(format!("bad upper end {hi:?}")))?;
        let n: usize = n.trim().parse().map_err(|_| bad(format!("bad point count {n:?}")))?;
        return lablab::estimators::log_grid(lo, hi, n).map_err(|e| bad(e.to_string()));
    }
    let grid: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("bad grid value {s:?}"))))
        .collect::<Result<_>>()?;
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|x| !x.is_finite()) {
        return Err(bad("grid must be finite and strictly increasing".into()));
    }
    Ok(grid)
}

/// Comma separated values of one type.
pub fn parse_list<T>(key: &str, spec: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| CliError::config(key, format!("cannot parse {s:?}: {e}"))))
        .collect()
}
