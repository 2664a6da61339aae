//! Flat `key=value` configuration files and run manifests.
//!
//! Keys are long flag names without the leading dashes. Keys under `meta.`
//! carry bookkeeping (subcommand, input hashes) and are not flags. A manifest
//! written by one run is itself a valid config file for the same subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use clap::{ArgAction, ArgMatches, Command};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Flags that describe where or how fast a run happens, not what it computes.
/// They never enter a manifest.
pub const NON_REPRODUCIBLE: &[&str] = &["config", "out-dir", "threads"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub entries: Vec<Entry>,
    pub meta: BTreeMap<String, String>,
}

pub fn parse_config(text: &str, origin: &str) -> Result<ConfigFile, CliError> {
    let mut cfg = ConfigFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key=value", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(CliError::Config(format!("{origin}:{}: empty key", i + 1)));
        }
        if let Some(meta) = key.strip_prefix("meta.") {
            cfg.meta.insert(meta.to_owned(), value.to_owned());
        } else {
            cfg.entries.push(Entry {
                key: key.to_owned(),
                value: value.to_owned(),
                line: i + 1,
            });
        }
    }
    Ok(cfg)
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Turn config entries into command-line tokens for subcommand `sub`.
///
/// The tokens go before the user's own arguments; with `args_override_self`
/// the later (user) occurrence of a flag wins.
pub fn to_tokens(cfg: &ConfigFile, sub: &Command, origin: &str) -> Result<Vec<String>, CliError> {
    if let Some(cmd) = cfg.meta.get("command") {
        if cmd != sub.get_name() {
            return Err(CliError::Config(format!(
                "{origin} was written by `{cmd}`, not `{}`",
                sub.get_name()
            )));
        }
    }
    let mut tokens = Vec::new();
    for e in &cfg.entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(e.key.as_str()) && e.key != "config")
            .ok_or_else(|| {
                CliError::Config(format!(
                    "{origin}:{}: unknown key `{}` for `{}`",
                    e.line,
                    e.key,
                    sub.get_name()
                ))
            })?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            let on = parse_bool(&e.value).ok_or_else(|| {
                CliError::Config(format!(
                    "{origin}:{}: `{}` expects true or false",
                    e.line, e.key
                ))
            })?;
            if on {
                tokens.push(format!("--{}", e.key));
            }
        } else {
            tokens.push(format!("--{}={}", e.key, e.value));
        }
    }
    Ok(tokens)
}

/// Content hash in the style of a git blob object: SHA-256 over
/// `"blob <len>\0"` followed by the bytes.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    format!("sha256:{}", hex::encode(h.finalize()))
}

pub fn file_hash(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(blob_hash(&bytes))
}

/// Every effective setting of a parsed subcommand, in declaration order.
pub fn effective_settings(sub: &Command, matches: &ArgMatches) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for arg in sub.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if NON_REPRODUCIBLE.contains(&long)
            || matches!(arg.get_action(), ArgAction::Help | ArgAction::Version)
        {
            continue;
        }
        let id = arg.get_id().as_str();
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            out.push((long.to_owned(), matches.get_flag(id).to_string()));
        } else if let Some(raw) = matches.get_raw(id) {
            let vals: Vec<_> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            out.push((long.to_owned(), vals.join(",")));
        }
    }
    out
}

/// A run manifest, rendered as a config file.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub command: String,
    pub settings: Vec<(String, String)>,
    pub inputs: Vec<(String, String)>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# ebpred run manifest; rerun with `ebpred {} --config <this file>`\n",
            self.command
        ));
        s.push_str(&format!("meta.command={}\n", self.command));
        s.push_str(&format!("meta.version={}\n", env!("CARGO_PKG_VERSION")));
        for (k, v) in &self.settings {
            s.push_str(&format!("{k}={v}\n"));
        }
        for (k, h) in &self.inputs {
            s.push_str(&format!("meta.input.{k}={h}\n"));
        }
        s
    }
}

/// Check that inputs named in a manifest still hash to the recorded values.
///
/// Only inputs whose path was taken from the manifest are checked; a path
/// overridden on the command line is a deliberate change.
pub fn verify_inputs(cfg: &ConfigFile, effective: &[(String, String)]) -> Result<(), CliError> {
    for (meta_key, recorded) in &cfg.meta {
        let Some(key) = meta_key.strip_prefix("input.") else {
            continue;
        };
        let Some(from_cfg) = cfg.entries.iter().rev().find(|e| e.key == key) else {
            continue;
        };
        let Some((_, used)) = effective.iter().find(|(k, _)| k == key) else {
            continue;
        };
        if *used != from_cfg.value {
            continue;
        }
        if file_hash(Path::new(used))? != *recorded {
            return Err(CliError::InputMismatch {
                key: key.to_owned(),
                path: used.clone(),
            });
        }
    }
    Ok(())
}
