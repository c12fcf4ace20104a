//! Flat `key = value` configuration files. `#` starts a comment; blank lines
//! are ignored; each key may appear once.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlatConfig {
    entries: BTreeMap<String, String>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i as u64 + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim().to_owned();
            if entries.insert(key.clone(), value.trim().to_owned()).is_some() {
                return Err(Error::config(key, "given more than once"));
            }
        }
        Ok(FlatConfig { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parse `key` with `FromStr` if present.
    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::config(key, e.to_string())))
            .transpose()
    }

    /// Comma-separated list under `key`.
    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim()
                            .parse::<T>()
                            .map_err(|e| Error::config(key, format!("`{}`: {e}", item.trim())))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Fails naming the first key not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(Error::config(
                k,
                format!("unknown key (expected one of: {})", allowed.join(", ")),
            )),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_lists() {
        let cfg = FlatConfig::parse("# comment\nseed = 7\n\nvals = 1, 2,3 # trailing\n").unwrap();
        assert_eq!(cfg.parsed::<u64>("seed").unwrap(), Some(7));
        assert_eq!(cfg.list::<u32>("vals").unwrap(), Some(vec![1, 2, 3]));
        assert_eq!(cfg.parsed::<u64>("missing").unwrap(), None);
    }

    #[test]
    fn errors_name_the_key() {
        let cfg = FlatConfig::parse("seed = x\n").unwrap();
        let err = cfg.parsed::<u64>("seed").unwrap_err();
        assert!(err.to_string().contains("`seed`"), "{err}");
        let err = cfg.reject_unknown(&["n"]).unwrap_err();
        assert!(err.to_string().contains("`seed`"));
        assert!(FlatConfig::parse("a = 1\na = 2\n").is_err());
        assert!(FlatConfig::parse("novalue\n").is_err());
    }
}
