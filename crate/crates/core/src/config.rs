//! Run-level configuration: the training hyperparameters plus the
//! dataset/split/output settings the CLI needs.
//!
//! Sources are layered in a fixed precedence: built-in defaults, then a
//! config file (an explicit `--config` path, or `$SANINTENT_CONFIG_DIR/
//! sanintent.cfg` when the variable is set and the file exists), then
//! individual command-line flags. Every value is expressible in each
//! layer, the file and the flags share the same key spelling, and the
//! fully resolved configuration is written next to every training run for
//! audit.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::dataset::Format;
use crate::error::{Error, Result};
use crate::training::TrainConfig;

/// Environment variable naming the directory searched for a default
/// `sanintent.cfg` when no `--config` flag is given.
pub const CONFIG_DIR_VAR: &str = "SANINTENT_CONFIG_DIR";

/// File name looked up inside [`CONFIG_DIR_VAR`].
pub const CONFIG_FILE_NAME: &str = "sanintent.cfg";

/// Everything a CLI run needs beyond the model hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    /// Input dataset; required by `train`, `evaluate`, and `dataset stats`.
    pub dataset: Option<PathBuf>,
    pub format: Format,
    /// Fraction of the whole corpus held out as the test split.
    pub test_fraction: f64,
    /// Fraction of the remaining (non-test) portion held out for
    /// validation.
    pub val_fraction: f64,
    /// Where `train` writes checkpoint.bin, history.jsonl, resolved.cfg.
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: TrainConfig::default(),
            dataset: None,
            format: Format::Jsonl,
            test_fraction: 0.1,
            val_fraction: 0.1,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Applies one `key=value` assignment, delegating unmatched keys to
    /// the training config (which rejects unknown names).
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "format" => self.format = Format::parse(value)?,
            "test_fraction" => {
                self.test_fraction = value.parse().map_err(|_| {
                    Error::Config(format!("invalid value '{value}' for config key '{key}'"))
                })?
            }
            "val_fraction" => {
                self.val_fraction = value.parse().map_err(|_| {
                    Error::Config(format!("invalid value '{value}' for config key '{key}'"))
                })?
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return self.train.apply_kv(key, value),
        }
        Ok(())
    }

    /// Parses a config file's text on top of `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "config line {} is not a key=value assignment: '{raw}'",
                    idx + 1
                ))
            })?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        self.validate()
    }

    /// Reads and merges a config file.
    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file '{}': {e}", path.display()))
        })?;
        self.merge_text(&text).map_err(|e| {
            Error::Config(format!("in config file '{}': {}", path.display(), bare(e)))
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        for (name, v) in [
            ("test_fraction", self.test_fraction),
            ("val_fraction", self.val_fraction),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!(
                    "{name} must lie in [0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Ratios for the three-way split: test_fraction comes off the whole
    /// corpus, then val_fraction comes off the remainder.
    pub fn split_ratios(&self) -> (f64, f64, f64) {
        let test = self.test_fraction;
        let val = (1.0 - test) * self.val_fraction;
        (1.0 - test - val, val, test)
    }

    /// Full `key=value` rendering: training keys first (alphabetical),
    /// then the run keys (alphabetical). Parsing this text reproduces the
    /// config exactly.
    pub fn to_kv(&self) -> String {
        let mut s = self.train.to_kv();
        if let Some(d) = &self.dataset {
            s.push_str(&format!("dataset={}\n", d.display()));
        }
        s.push_str(&format!("format={}\n", self.format.as_str()));
        s.push_str(&format!("out_dir={}\n", self.out_dir.display()));
        s.push_str(&format!("test_fraction={}\n", self.test_fraction));
        s.push_str(&format!("val_fraction={}\n", self.val_fraction));
        s
    }

    /// FNV-1a hash of the resolved config text, stamped into evaluation
    /// reports so results can be traced to the exact settings.
    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a(self.to_kv().as_bytes()))
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// The default config file implied by the environment, if any: a
/// readable `sanintent.cfg` inside `$SANINTENT_CONFIG_DIR`. Pure in the
/// directory argument so it can be tested without touching the process
/// environment.
pub fn default_config_file(config_dir: Option<OsString>) -> Option<PathBuf> {
    let dir = config_dir?;
    if dir.is_empty() {
        return None;
    }
    let path = PathBuf::from(dir).join(CONFIG_FILE_NAME);
    path.is_file().then_some(path)
}

/// Resolves the layered configuration: defaults, then the config file
/// (`explicit` wins over the environment default), then `overrides` in
/// order.
pub fn resolve(
    explicit: Option<&Path>,
    env_config_dir: Option<OsString>,
    overrides: &[(String, String)],
) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    match explicit {
        Some(path) => cfg.merge_file(path)?,
        None => {
            if let Some(path) = default_config_file(env_config_dir) {
                cfg.merge_file(&path)?;
            }
        }
    }
    for (key, value) in overrides {
        cfg.apply_kv(key, value).map_err(|e| {
            Error::Config(format!("in flag --{}: {}", key.replace('_', "-"), bare(e)))
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Message text without the class prefix, for nesting inside another
/// config error.
fn bare(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}
