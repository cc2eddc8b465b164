//! `key = value` configuration files. Command-line flags take precedence.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const KEYS: &[&str] = &[
    "image_size",
    "epsilon",
    "alpha_a",
    "k",
    "mu",
    "max_iters",
    "weights",
    "improve",
    "denoise",
    "jobs",
    "seed",
];

#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    origin: String,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}:{}: expected `key = value`", n + 1))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                bail!("{origin}:{}: unknown key `{k}` (known: {})", n + 1, KEYS.join(", "));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Config {
            values,
            origin: origin.to_string(),
        })
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        debug_assert!(KEYS.contains(&key));
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("{}: `{key} = {v}`: {e}", self.origin)))
            .transpose()
    }

    /// Flag value if given, else the config value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

/// Comma-separated list such as `8,16,24`.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| anyhow!("`{t}` in `{s}`: {e}")))
        .collect()
}
