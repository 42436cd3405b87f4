//! The `autonn` command-line pipeline.
//!
//! Every subcommand writes its outputs, re-reads them to validate, and then
//! writes a `<out>.manifest` describing the run.

mod config;
mod manifest;
mod math;
mod seis;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::error::Error;

pub use config::expand_config;
pub use manifest::Manifest;

/// Exit code for usage, I/O, parse and dimension errors.
pub const EXIT_FAILURE: i32 = 2;
/// Exit code when a clean section has zero maximum amplitude.
pub const EXIT_ZERO_AMPLITUDE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "autonn", version, about = "Denoising with deep autoassociative neural networks")]
#[command(args_override_self = true)]
pub struct Cli {
    /// File of `key=value` lines supplying flag values; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the process-model training corpus.
    MathGen(math::GenArgs),
    /// Train an autoassociative network on a process-model corpus.
    MathTrain(math::TrainArgs),
    /// Evaluate a trained network on a fresh noisy test set.
    MathEval(math::EvalArgs),
    /// Synthesize a clean seismic section.
    SeisSynth(seis::SynthArgs),
    /// Replace traces of a section with monofrequency sinusoids.
    SeisCorrupt(seis::CorruptArgs),
    /// Train a patch denoiser on a clean section.
    SeisTrain(seis::TrainArgs),
    /// Denoise a section with sliding-window inference.
    SeisDenoise(seis::DenoiseArgs),
    /// Score a denoised section against the clean one.
    SeisEval(seis::EvalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::MathGen(_) => "math-gen",
            Command::MathTrain(_) => "math-train",
            Command::MathEval(_) => "math-eval",
            Command::SeisSynth(_) => "seis-synth",
            Command::SeisCorrupt(_) => "seis-corrupt",
            Command::SeisTrain(_) => "seis-train",
            Command::SeisDenoise(_) => "seis-denoise",
            Command::SeisEval(_) => "seis-eval",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ZeroAmplitude => EXIT_ZERO_AMPLITUDE,
            _ => EXIT_FAILURE,
        };
        CliError { code, message: e.to_string() }
    }
}

impl CliError {
    pub(crate) fn msg(message: impl Into<String>) -> Self {
        CliError { code: EXIT_FAILURE, message: message.into() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.code;
        }
    };
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAILURE } else { 0 };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_FAILURE;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.code;
    }
    let sub = matches.subcommand().map(|(_, m)| m.clone()).expect("subcommand required");
    match dispatch(cli.command, &sub) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn dispatch(command: Command, matches: &ArgMatches) -> CliResult<()> {
    let root = Cli::command();
    let declared = root.find_subcommand(command.name()).expect("every variant is a subcommand");
    let mut manifest = Manifest::new(declared, matches);
    match command {
        Command::MathGen(a) => math::gen(a, &mut manifest),
        Command::MathTrain(a) => math::train(a, &mut manifest),
        Command::MathEval(a) => math::eval(a, &mut manifest),
        Command::SeisSynth(a) => seis::synth(a, &mut manifest),
        Command::SeisCorrupt(a) => seis::corrupt(a, &mut manifest),
        Command::SeisTrain(a) => seis::train(a, &mut manifest),
        Command::SeisDenoise(a) => seis::denoise(a, &mut manifest),
        Command::SeisEval(a) => seis::eval(a, &mut manifest),
    }
}

/// `AUTONN_THREADS` caps the worker pool; 0 or unset means automatic and 1
/// gives a single-threaded run.
fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("AUTONN_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::msg(format!("AUTONN_THREADS must be a non-negative integer, got `{value}`")))?;
    // a second call in the same process (tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// `path` with `suffix` appended to its file name.
pub(crate) fn with_suffix(path: &std::path::Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Writes `text` and confirms the file reads back identically.
pub(crate) fn write_text_checked(path: &std::path::Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::msg(format!("cannot write {}: {e}", path.display())))?;
    let back = std::fs::read_to_string(path)
        .map_err(|e| CliError::msg(format!("cannot re-read {}: {e}", path.display())))?;
    if back != text {
        return Err(CliError::msg(format!("{} did not read back identically", path.display())));
    }
    Ok(())
}

pub(crate) fn parse_index_list(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::msg(format!("bad trace index `{t}`"))))
        .collect()
}

pub(crate) fn parse_range(s: &str) -> CliResult<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| CliError::msg(format!("expected `low,high`, got `{s}`")))?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| CliError::msg(format!("bad number `{t}`")));
    Ok((parse(a)?, parse(b)?))
}
