//! Seismic subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;

use super::math::{TrainFlags, TrainPlan};
use super::{parse_index_list, parse_range, with_suffix, write_text_checked, CliError, CliResult, Manifest};
use crate::metrics::trace_noise_report;
use crate::nn::load_model;
use crate::rng;
use crate::seismic::{
    build_patch_dataset, corrupt_traces, denoise_section, load_section, save_section, section_amax,
    spaced_trace_indices, synth_clean_section, EventSpec, Normalizer, NoisyTraceSpec, PatchPlan, SectionFormat,
    SeismicSection, DEFAULT_PATCH_WIDTH,
};

const CORRUPTION_HEADER: &str = "trace amplitude freq_hz phase";

/// Writes a section in the format implied by its extension and checks that
/// it loads back unchanged.
fn save_checked(section: &SeismicSection, path: &Path) -> CliResult<()> {
    save_section(section, path, SectionFormat::from_path(path))?;
    if &load_section(path, None)? != section {
        return Err(CliError::msg(format!("{} did not round-trip", path.display())));
    }
    Ok(())
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 99)]
    pub traces: usize,
    #[arg(long, default_value_t = 42)]
    pub samples: usize,
    /// Sample interval in seconds.
    #[arg(long, default_value_t = 0.008)]
    pub dt: f64,
    /// Number of random linear events.
    #[arg(long, default_value_t = 6)]
    pub events: usize,
    #[arg(long, default_value_t = 20.0)]
    pub peak_freq: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; `.bin` or `.asec` selects the binary format.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn synth(args: SynthArgs, manifest: &mut Manifest) -> CliResult<()> {
    let spec = EventSpec { peak_freq_hz: args.peak_freq, random_events: args.events, ..EventSpec::default() };
    let section = synth_clean_section(args.traces, args.samples, args.dt, &spec, &mut rng::stream(args.seed, 0))?;
    save_checked(&section, &args.out)?;
    manifest.output(&args.out);
    manifest.record("seed", args.seed);
    manifest.record("amax", format!("{:?}", section_amax(&section)));
    manifest.record("rms", format!("{:?}", section.rms()));
    manifest.write_beside(&args.out)?;
    Ok(())
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CorruptArgs {
    /// Clean input section.
    #[arg(long)]
    pub section: PathBuf,
    /// Comma-separated trace indices to replace; empty leaves the section unchanged.
    #[arg(long, conflicts_with = "count")]
    pub traces: Option<String>,
    /// Number of traces to replace, spread across the section.
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    #[arg(long, default_value = "0.5,1.0")]
    pub amp_range: String,
    #[arg(long, default_value = "110,220")]
    pub freq_range: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn corrupt(args: CorruptArgs, manifest: &mut Manifest) -> CliResult<()> {
    let clean = load_section(&args.section, None)?;
    manifest.input(&args.section);
    let spec = NoisyTraceSpec::new(parse_range(&args.amp_range)?, parse_range(&args.freq_range)?)?;
    let mut rng = rng::stream(args.seed, 0);
    let indices = match &args.traces {
        Some(list) => parse_index_list(list)?,
        None => spaced_trace_indices(clean.n_traces(), args.count, &mut rng)?,
    };
    let (noisy, log) = corrupt_traces(&clean, &indices, &spec, &mut rng)?;
    save_checked(&noisy, &args.out)?;

    let mut text = format!("{CORRUPTION_HEADER}\n");
    for c in &log {
        let s = c.sinusoid;
        let _ = writeln!(text, "{} {:?} {:?} {:?}", c.trace, s.amplitude, s.freq_hz, s.phase);
    }
    let log_path = with_suffix(&args.out, ".corruption");
    write_text_checked(&log_path, &text)?;
    if read_corruption_log(&log_path)? != indices {
        return Err(CliError::msg("corruption log did not round-trip"));
    }

    manifest.output(&args.out);
    manifest.output(&log_path);
    manifest.record("seed", args.seed);
    let list: Vec<String> = indices.iter().map(usize::to_string).collect();
    manifest.record("corrupted_traces", list.join(","));
    manifest.write_beside(&args.out)?;
    Ok(())
}

/// Trace indices listed in a `.corruption` file.
fn read_corruption_log(path: &Path) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::msg(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    if lines.next() != Some(CORRUPTION_HEADER) {
        return Err(CliError::msg(format!("{}: missing header `{CORRUPTION_HEADER}`", path.display())));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            line.split_whitespace()
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| CliError::msg(format!("{}:{}: bad trace index", path.display(), i + 2)))
        })
        .collect()
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Clean training section.
    #[arg(long)]
    pub section: PathBuf,
    #[arg(long, default_value_t = 380_000)]
    pub num_clean: usize,
    #[arg(long, default_value_t = 2)]
    pub noisy_per_clean: usize,
    #[arg(long, default_value_t = DEFAULT_PATCH_WIDTH)]
    pub width: usize,
    #[arg(long, default_value = "378-300-400-300-378")]
    pub layers: String,
    #[arg(long, default_value_t = 50_000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.05)]
    pub val_frac: f64,
    #[arg(long, default_value = "0.5,1.0")]
    pub amp_range: String,
    #[arg(long, default_value = "110,220")]
    pub freq_range: String,
    /// Report the corpus size in the manifest and stop without training.
    #[arg(long)]
    pub count_only: bool,
    #[command(flatten)]
    pub common: TrainFlags,
}

pub fn train(args: TrainArgs, manifest: &mut Manifest) -> CliResult<()> {
    let clean = load_section(&args.section, None)?;
    manifest.input(&args.section);
    let normalizer = Normalizer::from_section(&clean)?;
    let plan = PatchPlan::new(args.num_clean, args.noisy_per_clean)?;
    manifest.record("samples", plan.total_samples());
    manifest.record("amax", format!("{:?}", normalizer.scale()));
    let out = &args.common.out_model;
    if args.count_only {
        manifest.write_beside(out)?;
        println!("{}", plan.total_samples());
        return Ok(());
    }

    let dim = args.width * clean.n_samples();
    let train_plan = TrainPlan {
        layers: &args.layers,
        epochs: args.epochs,
        lr: args.lr,
        batch: args.batch,
        val_frac: args.val_frac,
        flags: &args.common,
    };
    let arch = train_plan.architecture()?;
    if arch.input_dim() != dim || arch.output_dim() != dim {
        return Err(CliError::msg(format!(
            "architecture {arch} does not fit {}-trace windows of {} samples ({dim} values)",
            args.width,
            clean.n_samples()
        )));
    }
    let spec = NoisyTraceSpec::new(parse_range(&args.amp_range)?, parse_range(&args.freq_range)?)?;
    let corpus = build_patch_dataset(&clean, plan, args.width, &spec, &normalizer, args.common.seed)?;
    train_plan.run(corpus, manifest)?;

    let norm_path = with_suffix(out, ".norm");
    write_text_checked(&norm_path, &format!("amax={:?}\nwidth={}\n", normalizer.scale(), args.width))?;
    manifest.output(&norm_path);
    manifest.write_beside(out)?;
    Ok(())
}

fn read_norm_file(path: &Path) -> CliResult<f64> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::msg(format!("cannot read normalizer {}: {e} (pass --normalizer to override)", path.display()))
    })?;
    text.lines()
        .find_map(|l| l.strip_prefix("amax="))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| CliError::msg(format!("{}: no `amax=` line", path.display())))
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DenoiseArgs {
    /// Noisy input section.
    #[arg(long)]
    pub section: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PATCH_WIDTH)]
    pub width: usize,
    /// Amplitude scale used in training; defaults to the model's `.norm` file.
    #[arg(long)]
    pub normalizer: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn denoise(args: DenoiseArgs, manifest: &mut Manifest) -> CliResult<()> {
    let noisy = load_section(&args.section, None)?;
    let model = load_model(&args.model)?;
    manifest.input(&args.section);
    manifest.input(&args.model);
    let scale = match args.normalizer {
        Some(s) => s,
        None => read_norm_file(&with_suffix(&args.model, ".norm"))?,
    };
    let normalizer = Normalizer::new(scale)?;
    let denoised = denoise_section(&noisy, &model, args.width, &normalizer)?;
    save_checked(&denoised, &args.out)?;
    manifest.output(&args.out);
    manifest.record("normalizer", format!("{scale:?}"));
    manifest.write_beside(&args.out)?;
    Ok(())
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[arg(long)]
    pub clean: PathBuf,
    #[arg(long)]
    pub noisy: PathBuf,
    #[arg(long)]
    pub denoised: PathBuf,
    /// Comma-separated corrupted trace indices.
    #[arg(long, required_unless_present = "corruption_log", conflicts_with = "corruption_log")]
    pub traces: Option<String>,
    /// `.corruption` file written by `seis-corrupt`.
    #[arg(long)]
    pub corruption_log: Option<PathBuf>,
    /// Summary output file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn eval(args: EvalArgs, manifest: &mut Manifest) -> CliResult<()> {
    let clean = load_section(&args.clean, None)?;
    let noisy = load_section(&args.noisy, None)?;
    let denoised = load_section(&args.denoised, None)?;
    for p in [&args.clean, &args.noisy, &args.denoised] {
        manifest.input(p);
    }
    let traces = match (&args.traces, &args.corruption_log) {
        (Some(list), _) => parse_index_list(list)?,
        (None, Some(path)) => {
            manifest.input(path);
            read_corruption_log(path)?
        }
        (None, None) => unreachable!("clap requires one of --traces and --corruption-log"),
    };
    let report = trace_noise_report(&clean, &noisy, &denoised, &traces)?;
    let mut text = report.summary();
    for s in &report.scores {
        let _ = writeln!(text, "trace.{}.reduction_pct={:?}", s.index, s.reduction_pct);
    }
    write_text_checked(&args.out, &text)?;
    manifest.output(&args.out);
    manifest.record("mean_reduction_pct", format!("{:?}", report.mean_reduction_pct));
    if let Some(d) = report.relative_distortion() {
        manifest.record("relative_distortion", format!("{d:?}"));
    }
    manifest.write_beside(&args.out)?;
    println!(
        "mean noise reduction: {:.2}% over {} traces; distortion {:.3} of section RMS",
        report.mean_reduction_pct,
        report.scores.len(),
        report.relative_distortion().unwrap_or(f64::NAN)
    );
    Ok(())
}
