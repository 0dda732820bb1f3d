//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must be
//! consumed by the subcommand that reads the file; leftovers are reported as
//! unknown keys. Values actually used (including defaults) are recorded so
//! reports can embed the resolved configuration.
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim();
            if key.is_empty() {
                bail!("line {}: empty key", lineno + 1);
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                bail!("line {}: duplicate key `{key}`", lineno + 1);
            }
        }
        Ok(Config { entries, ..Default::default() })
    }

    /// Overrides (or adds) a value, e.g. from a command-line flag.
    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    fn lookup<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.consumed.insert(key.to_string());
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => {
                let value = raw
                    .parse::<T>()
                    .map_err(|e| anyhow!("config key `{key}`: cannot parse `{raw}`: {e}"))?;
                self.resolved.insert(key.to_string(), raw.clone());
                Ok(Some(value))
            }
        }
    }

    pub fn get<T>(&mut self, key: &str, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.lookup(key)? {
            Some(v) => Ok(v),
            None => {
                self.resolved.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    /// Comma-separated list.
    pub fn list<T>(&mut self, key: &str, default: &str) -> Result<Vec<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.consumed.insert(key.to_string());
        let raw = self.entries.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.resolved.insert(key.to_string(), raw.clone());
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<T>().map_err(|e| anyhow!("config key `{key}`: cannot parse `{s}`: {e}")))
            .collect()
    }

    /// Errors on keys nobody asked for.
    pub fn finish(&self) -> Result<()> {
        let unknown: Vec<&str> = self
            .entries
            .keys()
            .filter(|k| !self.consumed.contains(*k))
            .map(String::as_str)
            .collect();
        if !unknown.is_empty() {
            bail!("unknown config keys: {}", unknown.join(", "));
        }
        Ok(())
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_files() {
        let mut c = Config::parse("# comment\n\nsigma = 0.35\n grid.n=512 \nbranch = focusing\n").unwrap();
        assert_eq!(c.get("sigma", 0.0).unwrap(), 0.35);
        assert_eq!(c.get("grid.n", 64usize).unwrap(), 512);
        assert_eq!(c.get::<String>("branch", "x".into()).unwrap(), "focusing");
        assert_eq!(c.get("dt", 1e-3).unwrap(), 1e-3);
        c.finish().unwrap();
        assert_eq!(c.resolved()["dt"], "0.001");
        assert_eq!(c.resolved()["grid.n"], "512");
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Config::parse("sigma 0.35").is_err());
        assert!(Config::parse("= 3").is_err());
        assert!(Config::parse("a = 1\na = 2").is_err());
        let mut c = Config::parse("sigma = abc").unwrap();
        assert!(c.get("sigma", 0.0).is_err());
    }

    #[test]
    fn unknown_keys_are_reported() {
        let mut c = Config::parse("sigma = 0.3\nsgima = 0.4").unwrap();
        c.get("sigma", 0.0).unwrap();
        let err = c.finish().unwrap_err().to_string();
        assert!(err.contains("sgima"));
    }

    #[test]
    fn lists_and_overrides() {
        let mut c = Config::parse("xsb.s = 0.26, 0.5 ,1").unwrap();
        assert_eq!(c.list::<f64>("xsb.s", "").unwrap(), vec![0.26, 0.5, 1.0]);
        assert_eq!(c.list::<f64>("other", "2,3").unwrap(), vec![2.0, 3.0]);
        c.set("seed", 9);
        assert_eq!(c.get("seed", 0u64).unwrap(), 9);
    }
}
