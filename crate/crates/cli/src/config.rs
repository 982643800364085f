//! Flat `key=value` run configuration files. Keys are flag names without
//! the leading dashes; values given on the command line take precedence.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::error::{invalid, CliError, CliResult};

pub fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key=value, got `{line}`", i + 1)))?;
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(invalid(format!("config line {}: empty key", i + 1)));
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

pub fn render_config(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn read_config(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

/// Splices the entries of any `--config FILE` into the argument list just
/// after the subcommand, so that explicit flags (which come later) override
/// them.
pub fn expand_config_args(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(sub) = argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1) else {
        return Ok(argv);
    };
    let mut path = None;
    let mut i = sub + 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--config" {
            path = argv.get(i + 1).cloned();
            i += 1;
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        }
        i += 1;
    }
    let Some(path) = path else { return Ok(argv) };
    let pairs = read_config(Path::new(&path))?;
    let mut out: Vec<OsString> = argv[..=sub].to_vec();
    for (k, v) in pairs {
        if k != "config" {
            out.push(OsString::from(format!("--{k}={v}")));
        }
    }
    out.extend_from_slice(&argv[sub + 1..]);
    Ok(out)
}
