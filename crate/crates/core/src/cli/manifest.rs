use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgMatches, Command};

use super::{CliError, CliResult};

/// Record of one CLI run, written as `<out>.manifest`.
#[derive(Debug)]
pub struct Manifest {
    subcommand: String,
    flags: Vec<(String, String)>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    entries: Vec<(String, String)>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &Command, matches: &ArgMatches) -> Self {
        // walk the declared arguments so flattened group ids stay out
        let mut flags: Vec<(String, String)> = command
            .get_arguments()
            .filter_map(|arg| {
                let id = arg.get_id().as_str();
                let raw = matches.try_get_raw(id).ok()??;
                let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                Some((id.to_owned(), values.join(",")))
            })
            .collect();
        flags.sort();
        Manifest {
            subcommand: command.get_name().to_owned(),
            flags,
            inputs: Vec::new(),
            outputs: Vec::new(),
            entries: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_owned());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_owned());
    }

    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_owned(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "subcommand={}", self.subcommand);
        let _ = writeln!(out, "version={}", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.flags {
            let _ = writeln!(out, "flag.{k}={v}");
        }
        for p in &self.inputs {
            let _ = writeln!(out, "input={}", p.display());
        }
        for p in &self.outputs {
            let _ = writeln!(out, "output={}", p.display());
        }
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        let _ = writeln!(out, "wall_time_s={:.3}", self.started.elapsed().as_secs_f64());
        out
    }

    /// Writes `<out>.manifest` and returns its path.
    pub fn write_beside(&self, out: &Path) -> CliResult<PathBuf> {
        let path = manifest_path(out);
        std::fs::write(&path, self.render())
            .map_err(|e| CliError::msg(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}
