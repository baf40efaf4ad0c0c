//! Flat `key=value` config files mirroring the flag names, so a whole
//! parameter study can ship as a committed text file and be rerun
//! verbatim. Flags always override file values.

use crate::CliError;
use std::collections::BTreeMap;
use std::path::Path;

/// Every key any subcommand understands. Unknown keys are rejected rather
/// than ignored — a typo silently falling back to a default would corrupt
/// a reproduction run.
const KNOWN_KEYS: &[&str] = &[
    "arrival_rate",
    "build_rate",
    "generate_rate",
    "block_size",
    "tol",
    "tail_eps",
    "level_cap",
    "seed",
    "horizon",
    "warmup",
    "batches",
    "sweep_parameter",
    "sweep_from",
    "sweep_to",
    "sweep_step",
    "sweep_values",
    "output",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    pairs: BTreeMap<String, String>,
}

impl ConfigFile {
    /// Loads a config file, or returns an empty config when no path is
    /// given.
    pub fn load(path: Option<&Path>) -> Result<ConfigFile, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::parse(&text)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<ConfigFile, String> {
        let mut pairs = BTreeMap::new();
        for (number, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected key=value, got {raw:?}", number + 1));
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(format!("line {}: unknown key {key:?}", number + 1));
            }
            if pairs.insert(key.to_string(), value.to_string()).is_some() {
                return Err(format!("line {}: duplicate key {key:?}", number + 1));
            }
        }
        Ok(ConfigFile { pairs })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(KNOWN_KEYS.contains(&key), "lookup of unknown config key {key}");
        self.pairs.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Usage(format!("config key {key}: cannot parse value {raw:?}"))
            }),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.parsed(key)
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.parsed(key)
    }

    pub fn u32(&self, key: &str) -> Result<Option<u32>, CliError> {
        self.parsed(key)
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.parsed(key)
    }
}

/// Flag value, else config value, else the built-in default.
pub fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag value, else config value, else a usage error naming the flag.
pub fn require<T>(flag: Option<T>, file: Option<T>, flag_name: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::Usage(format!("missing required parameter --{flag_name}")))
}
