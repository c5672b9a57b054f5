//! `key = value` configuration files. `#` starts a comment; blank lines are
//! ignored; keys use the long flag names (`-` and `_` are interchangeable).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Io(String),
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config key `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
}

fn normalise(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: n + 1, message: format!("expected `key = value`, got `{line}`") })?;
            let key = normalise(k);
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: n + 1, message: "empty key".into() });
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The flag value if given, else the parsed file value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| ConfigError::Value { key: key.to_string(), message: e.to_string() }))
            .transpose()
    }

    /// Boolean switch: set by the flag or by `true`/`false` in the file.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, ConfigError> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    pub fn reject_unknown(&self, known: &[&str]) -> Result<(), ConfigError> {
        let unknown: Vec<String> = self.values.keys().filter(|k| !known.contains(&k.as_str())).cloned().collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::UnknownKeys(unknown))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let c = ConfigFile::parse("# comment\nseed = 7\nlearning_rate=0.01 # trailing\n\ndeterministic = true\n").unwrap();
        assert_eq!(c.pick::<u64>(None, "seed").unwrap(), Some(7));
        assert_eq!(c.pick::<u64>(Some(3), "seed").unwrap(), Some(3));
        assert_eq!(c.pick::<f64>(None, "learning-rate").unwrap(), Some(0.01));
        assert!(c.switch(false, "deterministic").unwrap());
        assert!(c.reject_unknown(&["seed", "learning-rate"]).is_err());
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(ConfigFile::parse("seed 7"), Err(ConfigError::Syntax { line: 1, .. })));
        let c = ConfigFile::parse("seed = x").unwrap();
        assert!(c.pick::<u64>(None, "seed").is_err());
    }
}
