//! Plain-text `key = value` configuration files.
//!
//! Precedence everywhere: built-in default, then the config file, then the
//! command-line flag. Keys are consumed as they are read; leftovers are
//! reported as errors so a misspelled key cannot silently fall back to its
//! default. No environment variables are consulted.

use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug)]
pub struct KeyValues {
    source: String,
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn empty() -> KeyValues {
        KeyValues { source: "<no config file>".to_string(), entries: BTreeMap::new() }
    }

    pub fn load(path: &Path) -> Result<KeyValues> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut entries = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow!("{}:{}: expected key = value, got {line:?}", path.display(), ln + 1)
            })?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                bail!("{}:{}: duplicate key {key:?}", path.display(), ln + 1);
            }
        }
        Ok(KeyValues { source: path.display().to_string(), entries })
    }

    /// Removes and returns the raw value for `key`.
    pub fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn take_parsed<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("{}: key {key}: {e} (value {raw:?})", self.source)),
        }
    }

    /// Errors on keys nothing consumed.
    pub fn finish(self) -> Result<()> {
        if self.entries.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        bail!("{}: unknown keys: {}", self.source, keys.join(", "));
    }
}

/// Parses a comma-separated list, ignoring blank entries.
pub fn parse_list<T>(what: &str, raw: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    let mut out = Vec::new();
    for tok in raw.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        out.push(tok.parse().map_err(|e| anyhow!("{what}: bad entry {tok:?}: {e}"))?);
    }
    if out.is_empty() {
        bail!("{what}: empty list");
    }
    Ok(out)
}

/// Flag beats file beats default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_config(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_keys_comments_and_blanks() {
        let f = write_config("# comment\n\nruns = 3\n  task=cartpole\n");
        let mut kv = KeyValues::load(f.path()).unwrap();
        assert_eq!(kv.take_parsed::<usize>("runs").unwrap(), Some(3));
        assert_eq!(kv.take("task").as_deref(), Some("cartpole"));
        kv.finish().unwrap();
    }

    #[test]
    fn leftover_keys_are_errors() {
        let f = write_config("rnus = 3\n");
        let kv = KeyValues::load(f.path()).unwrap();
        let err = kv.finish().unwrap_err();
        assert!(err.to_string().contains("rnus"), "{err}");
    }

    #[test]
    fn rejects_duplicates_and_bare_lines() {
        let f = write_config("a = 1\na = 2\n");
        assert!(KeyValues::load(f.path()).unwrap_err().to_string().contains("duplicate"));
        let f = write_config("just a line\n");
        let err = KeyValues::load(f.path()).unwrap_err();
        assert!(err.to_string().contains("key = value"), "{err}");
    }

    #[test]
    fn bad_values_name_the_key() {
        let f = write_config("runs = many\n");
        let mut kv = KeyValues::load(f.path()).unwrap();
        let err = kv.take_parsed::<usize>("runs").unwrap_err();
        assert!(err.to_string().contains("runs"), "{err}");
    }

    #[test]
    fn list_parsing_trims_and_types() {
        let nodes: Vec<usize> = parse_list("max_nodes", "1, 3,7").unwrap();
        assert_eq!(nodes, vec![1, 3, 7]);
        assert!(parse_list::<usize>("max_nodes", " , ").is_err());
        assert!(parse_list::<f64>("alphas", "0.1,x").unwrap_err().to_string().contains("alphas"));
    }
}
