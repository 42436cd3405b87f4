//! Process-model subcommands.

use std::path::PathBuf;

use clap::Args;

use super::{with_suffix, write_text_checked, CliError, CliResult, Manifest};
use crate::metrics::{evaluate_with, improvement_dat, read_improvement_dat, trace_dat};
use crate::nn::{load_model, model_to_string, Architecture, MlpModel, Predictor};
use crate::process::{build_math_dataset, build_test_set, dataset_to_string, load_dataset, Composition};
use crate::training::{load_checkpoint, resume, split_dataset, Plateau, TrainConfig, TrainState};

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct GenArgs {
    #[arg(long, default_value_t = 20_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn gen(args: GenArgs, manifest: &mut Manifest) -> CliResult<()> {
    let samples = build_math_dataset(args.count, args.seed)?;
    let text = dataset_to_string(&samples);
    write_text_checked(&args.out, &text)?;
    let back = load_dataset(&args.out)?;
    if back != samples {
        return Err(CliError::msg("dataset did not round-trip"));
    }
    let comp = Composition::of(&samples);
    manifest.output(&args.out);
    manifest.record("seed", args.seed);
    manifest.record("samples", samples.len());
    manifest.record("clean", comp.clean);
    manifest.record("local_scaled", comp.local);
    manifest.record("mean_scaled", comp.mean);
    manifest.write_beside(&args.out)?;
    log::info!("wrote {} samples to {}", samples.len(), args.out.display());
    Ok(())
}

/// Training flags shared by both experiments.
#[derive(Debug, Args, Clone)]
pub struct TrainFlags {
    /// Comma-separated activations, one per layer; default sigmoid hidden, linear output.
    #[arg(long)]
    pub activations: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write `<out-model>.ckpt.<epoch>` every N epochs (0 = never).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    /// Continue from `<out-model>.ckpt.<epoch>`.
    #[arg(long)]
    pub resume_from: Option<usize>,
    /// Stop after this many epochs without relative validation improvement.
    #[arg(long)]
    pub plateau_patience: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub plateau_min_rel: f64,
    #[arg(long)]
    pub out_model: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "20-20-20-20")]
    pub layers: String,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.2)]
    pub val_frac: f64,
    #[command(flatten)]
    pub common: TrainFlags,
}

pub(crate) struct TrainPlan<'a> {
    pub layers: &'a str,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub val_frac: f64,
    pub flags: &'a TrainFlags,
}

impl TrainPlan<'_> {
    pub fn architecture(&self) -> CliResult<Architecture> {
        Ok(Architecture::parse(self.layers, self.flags.activations.as_deref())?)
    }

    pub fn config(&self) -> TrainConfig {
        let f = self.flags;
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch,
            learning_rate: self.lr,
            momentum: f.momentum,
            val_fraction: self.val_frac,
            seed: f.seed,
            shuffle_each_epoch: true,
            checkpoint_every: f.checkpoint_every,
            checkpoint_prefix: (f.checkpoint_every > 0).then(|| f.out_model.clone()),
            plateau: f.plateau_patience.map(|patience| Plateau {
                patience,
                min_rel_improvement: f.plateau_min_rel,
            }),
        }
    }

    /// Splits, trains, writes the model and run log, and fills the manifest.
    pub fn run<S: crate::training::TrainSample>(
        &self,
        samples: Vec<S>,
        manifest: &mut Manifest,
    ) -> CliResult<MlpModel> {
        let arch = self.architecture()?;
        let config = self.config();
        config.validate()?;
        if let Some(first) = samples.first() {
            if first.input().len() != arch.input_dim() || first.target().len() != arch.output_dim() {
                return Err(CliError::msg(format!(
                    "architecture {arch} does not fit samples of length {}",
                    first.input().len()
                )));
            }
        }
        let (train_set, val_set) = split_dataset(samples, self.val_frac, self.flags.seed)?;
        let state = match self.flags.resume_from {
            Some(epoch) => {
                let state = load_checkpoint(&self.flags.out_model, epoch)?;
                if state.model.architecture() != arch {
                    return Err(CliError::msg("checkpoint architecture does not match --layers"));
                }
                state
            }
            None => TrainState::fresh(MlpModel::init(&arch, self.flags.seed)?),
        };
        log::info!(
            "training {arch} on {} samples ({} validation) for {} epochs",
            train_set.len(),
            val_set.len(),
            self.epochs
        );
        let (state, report) = resume(state, &train_set, &val_set, &config)?;

        let out = &self.flags.out_model;
        let text = model_to_string(&state.model);
        write_text_checked(out, &text)?;
        if load_model(out)? != state.model {
            return Err(CliError::msg("model did not round-trip"));
        }
        let log_path = with_suffix(out, ".log");
        write_text_checked(&log_path, &report.run_log())?;

        manifest.output(out);
        manifest.output(&log_path);
        manifest.record("seed", self.flags.seed);
        manifest.record("architecture", &arch);
        manifest.record("train_samples", train_set.len());
        manifest.record("val_samples", val_set.len());
        manifest.record("epochs_run", state.epoch);
        manifest.record("stopped_on_plateau", report.stopped_on_plateau);
        if let Some(last) = report.last() {
            manifest.record("final_train_loss", format!("{:?}", last.train_loss));
            manifest.record("final_val_loss", format!("{:?}", last.val_loss.unwrap_or(f64::NAN)));
        }
        manifest.record("train_wall_time_s", format!("{:.3}", report.wall_time.as_secs_f64()));
        Ok(state.model)
    }
}

pub fn train(args: TrainArgs, manifest: &mut Manifest) -> CliResult<()> {
    let samples = load_dataset(&args.data)?;
    manifest.input(&args.data);
    let plan = TrainPlan {
        layers: &args.layers,
        epochs: args.epochs,
        lr: args.lr,
        batch: args.batch,
        val_frac: args.val_frac,
        flags: &args.common,
    };
    plan.run(samples, manifest)?;
    manifest.write_beside(&args.common.out_model)?;
    Ok(())
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[arg(long, required_unless_present = "perfect_stub")]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Test sample written as a per-point trace file; defaults to 20 when it exists.
    #[arg(long)]
    pub trace_index: Option<usize>,
    /// Replace the model with an oracle that returns the clean target.
    #[arg(long, hide = true)]
    pub perfect_stub: bool,
}

pub fn eval(args: EvalArgs, manifest: &mut Manifest) -> CliResult<()> {
    let test = build_test_set(args.count, args.seed)?;
    let model = match &args.model {
        Some(path) if !args.perfect_stub => {
            let m = load_model(path)?;
            manifest.input(path);
            if m.input_dim() != test[0].input.len() || m.output_dim() != test[0].target.len() {
                return Err(CliError::msg(format!(
                    "model maps {} -> {} but test signals have length {}",
                    m.input_dim(),
                    m.output_dim(),
                    test[0].input.len()
                )));
            }
            Some(m)
        }
        _ => None,
    };
    let denoise = |s: &crate::process::SignalSample| -> crate::Result<Vec<f64>> {
        match &model {
            Some(m) => m.predict(&s.input),
            None => Ok(s.target.clone()),
        }
    };
    let report = evaluate_with(&test, denoise)?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::msg(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let improvement = args.out_dir.join("improvement.dat");
    let text = improvement_dat(&report);
    write_text_checked(&improvement, &text)?;
    let rows = read_improvement_dat(&text)?;
    let file_mean = rows.iter().map(|r| r.1).sum::<f64>() / rows.len().max(1) as f64;
    if (file_mean - report.mean_reduction_pct).abs() > 1e-9 {
        return Err(CliError::msg("improvement file disagrees with in-memory report"));
    }
    manifest.output(&improvement);

    let trace_index = args.trace_index.or((args.count > 20).then_some(20));
    if let Some(idx) = trace_index {
        let sample = test
            .get(idx)
            .ok_or_else(|| CliError::msg(format!("--trace-index {idx} outside test set of {}", args.count)))?;
        let path = args.out_dir.join(format!("trace_{idx}.dat"));
        write_text_checked(&path, &trace_dat(&sample.target, &sample.input, &denoise(sample)?)?)?;
        manifest.output(&path);
    }

    let summary_path = args.out_dir.join("summary.txt");
    let mut summary = report.summary();
    summary.push_str("reference_mean_reduction_pct=90.27\n");
    write_text_checked(&summary_path, &summary)?;
    manifest.output(&summary_path);
    manifest.record("seed", args.seed);
    manifest.record("mean_reduction_pct", format!("{:?}", report.mean_reduction_pct));
    manifest.write_beside(&summary_path)?;
    println!("mean noise reduction: {:.2}% over {} test samples", report.mean_reduction_pct, report.scores.len());
    Ok(())
}
