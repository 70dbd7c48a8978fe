//! Flat `key = value` configuration files.
//!
//! Lines starting with `#` and blank lines are ignored. Keys are
//! case-sensitive; repeating a key is an error.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::text::{read_bytes, utf8_lines};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(source_name: &str, bytes: &[u8]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in utf8_lines(source_name, bytes)?.into_iter().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source_name, i + 1, "expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(source_name, i + 1, "empty key"));
            }
            if entries.insert(key.to_owned(), value.trim().to_owned()).is_some() {
                return Err(Error::parse(source_name, i + 1, format!("duplicate key {key:?}")));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&path.display().to_string(), &read_bytes(path)?)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Applies `overrides` on top of `self`.
    pub fn merged(mut self, overrides: &KeyValues) -> Self {
        for (k, v) in overrides.iter() {
            self.set(k, v);
        }
        self
    }

    /// The entries whose keys are in `keys`.
    pub fn subset(&self, keys: &[&str]) -> KeyValues {
        KeyValues {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keys.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fails on the first key not in `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!("unknown key {k:?}"))),
            None => Ok(()),
        }
    }

    /// Parses `key` into `slot` when present.
    pub fn read_into<T>(&self, key: &str, slot: &mut T) -> Result<()>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if let Some(raw) = self.get(key) {
            *slot = raw
                .parse()
                .map_err(|e| Error::Config(format!("{key} = {raw:?}: {e}")))?;
        }
        Ok(())
    }
}

impl fmt::Display for KeyValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.iter() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
