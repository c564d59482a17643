//! Flat `key = value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

pub const KEYS: &[&str] = &[
    "corpus",
    "baseline_lexicon",
    "lexicon",
    "bigram_lexicon",
    "embeddings",
    "rules",
    "out_dir",
    "split_ratio",
    "seed",
    "stratified",
    "no_split",
    "min_count",
    "modes",
    "segmentation",
    "eval_scope",
    "classifiers",
    "tail_scaling",
    "extract_scope",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    /// Entries as written, before path resolution; the hash is taken over these.
    given: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parses `key = value` lines. `#` starts a comment line; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", idx + 1))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                bail!("config line {}: unknown key `{key}`", idx + 1);
            }
            cfg.set(key, value.trim());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        cfg.resolve_relative_to(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes path-valued keys relative to the config file's directory.
    fn resolve_relative_to(&mut self, base: &Path) {
        for key in [
            "corpus",
            "baseline_lexicon",
            "lexicon",
            "bigram_lexicon",
            "embeddings",
            "rules",
            "out_dir",
        ] {
            if let Some(v) = self.values.get_mut(key) {
                let p = Path::new(v.as_str());
                if p.is_relative() && !v.is_empty() {
                    *v = base.join(p).to_string_lossy().into_owned();
                }
            }
        }
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        debug_assert!(KEYS.contains(&key), "unknown config key {key}");
        self.values.insert(key.to_owned(), value.to_string());
        self.given.insert(key.to_owned(), value.to_string());
    }

    pub fn set_opt<T: Display>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .filter(|v| !v.is_empty())
    }

    pub fn value<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("invalid value `{v}` for `{key}`: {e}"))
            })
            .transpose()
    }

    pub fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(other) => bail!("invalid value `{other}` for `{key}`: expected true or false"),
        }
    }

    /// A path that must exist.
    pub fn existing_path(&self, key: &str) -> Result<Option<PathBuf>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => {
                let p = PathBuf::from(v);
                if !p.exists() {
                    bail!("`{key}` points to {}, which does not exist", p.display());
                }
                Ok(Some(p))
            }
        }
    }

    pub fn required_path(&self, key: &str) -> Result<PathBuf> {
        self.existing_path(key)?.ok_or_else(|| {
            anyhow!(
                "`{key}` is required (set it in the config or pass --{})",
                key.replace('_', "-")
            )
        })
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.value("seed")?.unwrap_or(0))
    }

    /// SHA-256 over the sorted entries as written.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.given {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Provenance lines for report headers, without comment markers.
    pub fn provenance(&self, command: &str) -> Result<Vec<String>> {
        Ok(vec![
            format!("polarlex {}", env!("CARGO_PKG_VERSION")),
            format!("command {command}"),
            format!("config_sha256 {}", self.hash()),
            format!("seed {}", self.seed()?),
        ])
    }
}

pub fn comment_block(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}
