use std::fmt;

use crate::error::{Error, Result};

/// Ordered `key = value` report. Keys keep insertion order so reports are
/// byte-identical across runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    /// Appends an entry, replacing an earlier value for the same key.
    pub fn set(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Typed lookup that fails when the key is missing or malformed.
    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("report lacks {key}")))?;
        raw.parse()
            .map_err(|_| Error::Config(format!("report value {raw:?} for {key} is malformed")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Adds every entry of `other` under `prefix.`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &Report) {
        for (k, v) in &other.entries {
            self.set(format!("{prefix}.{k}"), v);
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut report = Report::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key = value, got {line:?}")))?;
            report.set(k.trim(), v.trim());
        }
        Ok(report)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut r = Report::new();
        r.set("a", 1);
        r.set("b", "x y");
        r.set("a", 0.1 + 0.2);
        let back = Report::parse(&r.to_string()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.require::<f64>("a").unwrap(), 0.1 + 0.2);
        assert!(back.require::<f64>("missing").is_err());
    }
}
