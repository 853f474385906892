//! Config files and flag value types.
//!
//! A config file holds one `key = value` pair per line. Keys are the long
//! flag names without the leading dashes (`label`, `omega-range`, ...; `_`
//! and `-` are interchangeable). Blank lines and lines whose first
//! non-blank character is `#` are skipped. A key may appear once. Values
//! given as flags take precedence over the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use tongues::map::OrbitLabel;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-").to_ascii_lowercase()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| CliError::Config {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let key = normalize_key(key);
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
                return Err(bad("malformed key"));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(bad(&format!("duplicate key {key}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Reject keys the running command does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::UnknownKey(k.clone())),
            None => Ok(()),
        }
    }

    /// The flag value if given, else the parsed file value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| {
                v.parse().map_err(|e: T::Err| CliError::BadValue {
                    key: key.to_string(),
                    value: v.to_string(),
                    msg: e.to_string(),
                })
            })
            .transpose()
    }

    pub fn pick_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn require<T>(&self, flag: Option<T>, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.pick(flag, key)?.ok_or_else(|| CliError::Missing(key.to_string()))
    }
}

/// `p,m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSpec(pub OrbitLabel);

impl FromStr for LabelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (p, m) = s.split_once(',').ok_or("expected p,m")?;
        let p: u64 = p.trim().parse().map_err(|e| format!("period: {e}"))?;
        let m: u64 = m.trim().parse().map_err(|e| format!("winding: {e}"))?;
        OrbitLabel::new(p, m).map(LabelSpec).map_err(|e| e.to_string())
    }
}

impl Serialize for LabelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{},{}", self.0.p(), self.0.m()))
    }
}

/// `lo,hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
        let lo = lo.trim().parse().map_err(|e| format!("{e}"))?;
        let hi = hi.trim().parse().map_err(|e| format!("{e}"))?;
        Ok(Span { lo, hi })
    }
}

/// `NxM` cells along `Omega` and `ktilde`, or `N` for a square grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub omega: usize,
    pub ktilde: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{e}"));
        match s.split_once(['x', 'X']) {
            Some((a, b)) => Ok(GridSpec {
                omega: parse(a)?,
                ktilde: parse(b)?,
            }),
            None => {
                let n = parse(s)?;
                Ok(GridSpec { omega: n, ktilde: n })
            }
        }
    }
}

/// Comma-separated numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(FloatList)
    }
}
