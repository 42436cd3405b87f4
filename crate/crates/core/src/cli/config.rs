//! `--config <file>` support.
//!
//! The file holds `key=value` lines naming long flags without the dashes.
//! Its entries are spliced in right after the subcommand name, ahead of the
//! user's own flags; since every flag overrides earlier occurrences of
//! itself, explicit flags win.

use std::ffi::OsString;
use std::fs;

use super::{CliError, CliResult};

pub fn expand_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::msg(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let mut injected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::msg(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().trim_start_matches("--");
        if key == "config" {
            return Err(CliError::msg(format!("config line {}: nested config files are not supported", i + 1)));
        }
        match value.trim() {
            "true" => injected.push(OsString::from(format!("--{key}"))),
            "false" => {}
            v => {
                injected.push(OsString::from(format!("--{key}")));
                injected.push(OsString::from(v));
            }
        }
    }

    // first bare token after the program name is the subcommand
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if s == "--config" {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            sub = Some(i);
            break;
        }
        i += 1;
    }
    let Some(sub) = sub else {
        return Ok(args);
    };
    let mut out = args[..=sub].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn find_config(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(OsString::from(v));
        }
    }
    None
}
