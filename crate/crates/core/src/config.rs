//! Plain-text configuration blocks and the tab-separated list files used for
//! lexicons, stop lists and faux amis.

use std::str::FromStr;

use crate::error::{Result, SimrError};

/// `key: value` lines. Blank lines and lines starting with `#` are skipped.
#[derive(Clone, Debug, Default)]
pub struct KeyValues {
    entries: Vec<(usize, String, String)>,
}

impl KeyValues {
    pub fn parse(input: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in input.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| {
                SimrError::parse(i + 1, format!("expected `key: value`, got `{line}`"))
            })?;
            let key = key.trim();
            if entries.iter().any(|(_, k, _)| k == key) {
                return Err(SimrError::parse(i + 1, format!("duplicate key `{key}`")));
            }
            entries.push((i + 1, key.to_string(), value.trim().to_string()));
        }
        Ok(KeyValues { entries })
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &str, &str)> {
        self.entries
            .iter()
            .map(|(l, k, v)| (*l, k.as_str(), v.as_str()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(_, _, v)| v.as_str())
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map_or(0, |(l, _, _)| *l)
    }

    /// Parses `key` if present.
    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| SimrError::parse(self.line_of(key), format!("{key}: {e}"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parse_opt(key)?
            .ok_or_else(|| SimrError::InvalidConfig(format!("missing key `{key}`")))
    }

    /// Fails on any key not in `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        match self
            .entries
            .iter()
            .find(|(_, k, _)| !known.contains(&k.as_str()))
        {
            Some((line, key, _)) => Err(SimrError::parse(*line, format!("unknown key `{key}`"))),
            None => Ok(()),
        }
    }
}

/// Parses a UTF-8 tab-separated file with exactly `columns` fields per line.
/// `#` comment lines and blank lines are skipped.
pub fn parse_columns(input: &str, columns: usize) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(|f| f.trim().to_string()).collect();
        if fields.len() != columns || fields.iter().any(String::is_empty) {
            return Err(SimrError::parse(
                i + 1,
                format!("expected {columns} non-empty tab-separated field(s)"),
            ));
        }
        rows.push(fields);
    }
    Ok(rows)
}
