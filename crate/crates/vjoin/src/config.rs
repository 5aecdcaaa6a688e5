//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` lines are comments, blank lines are
//! ignored. Consumers pull the keys they understand with `take*` and call
//! `finish`, which rejects anything left over so typos fail loudly instead
//! of silently running defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KvConfig {
    entries: BTreeMap<String, (String, usize)>,
    source: String,
}

impl KvConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("{}:{}: expected key = value", source, idx + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::config(format!("{}:{}: empty key", source, idx + 1)));
            }
            if let Some((_, first)) = entries.insert(key.to_string(), (value.to_string(), idx + 1))
            {
                return Err(Error::config(format!(
                    "{}:{}: key {:?} already set on line {}",
                    source,
                    idx + 1,
                    key,
                    first
                )));
            }
        }
        Ok(KvConfig {
            entries,
            source: source.to_string(),
        })
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    pub fn take_parsed<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                Error::config(format!("{}: key {:?}: {}: {}", self.source, key, v, e))
            }),
        }
    }

    /// Comma-separated list; empty items are rejected.
    pub fn take_list<T>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    if item.is_empty() {
                        return Err(Error::config(format!(
                            "{}: key {:?}: empty list item",
                            self.source, key
                        )));
                    }
                    item.parse::<T>().map_err(|e| {
                        Error::config(format!("{}: key {:?}: {}: {}", self.source, key, item, e))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Errors on any key nobody consumed.
    pub fn finish(self) -> Result<()> {
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            return Err(Error::config(format!(
                "{}:{}: unknown key {:?}",
                self.source, line, key
            )));
        }
        Ok(())
    }
}
