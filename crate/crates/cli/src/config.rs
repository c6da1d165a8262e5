//! Merging of config-file values with command-line flags.
//!
//! A config file is TOML. Top-level `seed` and `out` apply to every command;
//! a table named after the subcommand holds that command's options, spelled
//! as their long flags. Flags given on the command line win.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

const GLOBAL_KEYS: [&str; 2] = ["seed", "out"];

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    table: Table,
    path: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let table: Table = text
            .parse()
            .with_context(|| format!("parsing config {}", path.display()))?;
        for (key, value) in &table {
            if !GLOBAL_KEYS.contains(&key.as_str()) && !value.is_table() {
                bail!(
                    "config {}: unknown top-level key `{key}` (command options go in a [command] table)",
                    path.display()
                );
            }
        }
        Ok(ConfigFile {
            table,
            path: Some(path.to_path_buf()),
        })
    }

    pub fn seed(&self) -> Result<Option<u64>> {
        match self.table.get("seed") {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => bail!("config seed must be a non-negative integer, got {v}"),
        }
    }

    pub fn out(&self) -> Result<Option<PathBuf>> {
        match self.table.get("out") {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(PathBuf::from(s))),
            Some(v) => bail!("config out must be a string, got {v}"),
        }
    }

    /// Options for `command`: the config table overlaid with the flags.
    pub fn resolve<T>(&self, command: &str, flags: &T) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
    {
        let mut merged = match self.table.get(command) {
            Some(Value::Table(t)) => t.clone(),
            Some(_) => bail!("config key `{command}` must be a table"),
            None => Table::new(),
        };
        let given = Table::try_from(flags).context("collecting flags")?;
        merged.extend(given);
        let where_ = match &self.path {
            Some(p) => format!("config {} [{command}]", p.display()),
            None => format!("[{command}]"),
        };
        let resolved: T = Value::Table(merged.clone())
            .try_into()
            .with_context(|| format!("{where_}: invalid option"))?;
        let known: BTreeSet<String> = Table::try_from(&resolved)?.keys().cloned().collect();
        if let Some(bad) = merged.keys().find(|k| !known.contains(*k)) {
            bail!("{where_}: unknown option `{bad}`");
        }
        Ok(resolved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(rename_all = "kebab-case")]
    struct Opts {
        threshold: Option<f64>,
        max_iterations: Option<usize>,
        input: Option<PathBuf>,
    }

    fn config(text: &str) -> ConfigFile {
        ConfigFile {
            table: text.parse().unwrap(),
            path: None,
        }
    }

    #[test]
    fn flags_win_over_file() {
        let c = config("seed = 4\n[fit]\nthreshold = 0.9\nmax-iterations = 20\n");
        let flags = Opts {
            threshold: Some(0.8),
            ..Default::default()
        };
        let r = c.resolve("fit", &flags).unwrap();
        assert_eq!(r.threshold, Some(0.8));
        assert_eq!(r.max_iterations, Some(20));
        assert_eq!(c.seed().unwrap(), Some(4));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let c = config("[fit]\nthreshhold = 0.9\n");
        let err = c.resolve("fit", &Opts::default()).unwrap_err();
        assert!(format!("{err:#}").contains("threshhold"));
    }

    #[test]
    fn wrong_types_are_rejected() {
        let c = config("[fit]\nmax-iterations = \"many\"\n");
        assert!(c.resolve("fit", &Opts::default()).is_err());
    }
}
