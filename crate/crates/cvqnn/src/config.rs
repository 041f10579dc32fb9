//! Plain `key = value` config files, merged below command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    /// Blank lines and `#` comments are skipped. Keys may use `-` or `_`.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("config line {}: expected 'key = value'", i + 1)))?;
            let key = normalize(key);
            let value = value.trim().trim_matches('"').to_string();
            if key.is_empty() {
                return Err(CliError::config(format!("config line {}: empty key", i + 1)));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::config(format!("config line {}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        Self::parse(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> CliResult<()> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::config(format!("unknown config key '{k}' (allowed: {})", allowed.join(", ")))),
            None => Ok(()),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.values
            .get(key)
            .map(|v| v.parse().map_err(|_| CliError::config(format!("config key '{key}': cannot parse '{v}'"))))
            .transpose()
    }

    /// `flag`, else the config value, else `default`.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    pub fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        Ok(match flag {
            Some(v) => Some(v),
            None => self.get(key)?,
        })
    }
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_errors() {
        let c = ConfigFile::parse("# run\nseed = 7\nbatch-size = 16 # small\nmodel = \"dv\"\n").unwrap();
        assert_eq!(c.resolve(None, "seed", 0u64).unwrap(), 7);
        assert_eq!(c.resolve(Some(3), "seed", 0u64).unwrap(), 3);
        assert_eq!(c.resolve(None, "batch_size", 32usize).unwrap(), 16);
        assert_eq!(c.resolve(None, "epochs", 50usize).unwrap(), 50);
        assert_eq!(c.get::<String>("model").unwrap().as_deref(), Some("dv"));
        assert!(c.check_keys(&["seed", "batch_size", "model"]).is_ok());
        assert!(matches!(c.check_keys(&["seed"]), Err(CliError::Config(_))));
        assert!(c.get::<usize>("model").is_err());
        assert!(ConfigFile::parse("seed 7").is_err());
        assert!(ConfigFile::parse("seed = 1\nseed = 2").is_err());
    }
}
