//! Mini-batch gradient-descent training loop.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::nn::{
    load_model, model_from_str, model_to_string, save_model, sgd_step, BatchWorkspace, GradientBundle, LayerGradient,
    MlpModel,
};
use crate::process::SignalSample;
use crate::rng;
use crate::seismic::PatchSample;

const SPLIT_TAG: u64 = 0x5B17;
const SHUFFLE_TAG: u64 = 0x5487;
const EVAL_CHUNK: usize = 256;

/// A supervised `(input, target)` pair.
pub trait TrainSample: Sync {
    fn input(&self) -> &[f64];
    fn target(&self) -> &[f64];
}

impl TrainSample for SignalSample {
    fn input(&self) -> &[f64] {
        &self.input
    }
    fn target(&self) -> &[f64] {
        &self.target
    }
}

impl TrainSample for PatchSample {
    fn input(&self) -> &[f64] {
        &self.input
    }
    fn target(&self) -> &[f64] {
        &self.target
    }
}

/// Stop when the monitored loss has not improved on its best value by more
/// than `min_rel_improvement` (relative) for `patience` consecutive epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub patience: usize,
    pub min_rel_improvement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub val_fraction: f64,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    /// Write a checkpoint every this many epochs; 0 disables checkpoints.
    pub checkpoint_every: usize,
    /// Checkpoints go to `<prefix>.ckpt.<epoch>`.
    pub checkpoint_prefix: Option<PathBuf>,
    pub plateau: Option<Plateau>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            learning_rate: 0.05,
            momentum: 0.0,
            val_fraction: 0.2,
            seed: 0,
            shuffle_each_epoch: true,
            checkpoint_every: 0,
            checkpoint_prefix: None,
            plateau: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!("val_fraction must be in [0, 1), got {}", self.val_fraction)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.checkpoint_every > 0 && self.checkpoint_prefix.is_none() {
            return Err(Error::Config("checkpoint_every set without a checkpoint path".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based index of the completed epoch.
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` when the validation set is empty.
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub wall_time: Duration,
    /// Number of per-sample gradients that entered an update.
    pub gradient_samples: u64,
    pub stopped_on_plateau: bool,
}

impl TrainReport {
    /// One `epoch <k> train_loss <v> val_loss <v>` line per epoch.
    pub fn run_log(&self) -> String {
        let mut out = String::new();
        for r in &self.epochs {
            let val = r.val_loss.unwrap_or(f64::NAN);
            let _ = writeln!(out, "epoch {} train_loss {:?} val_loss {:?}", r.epoch, r.train_loss, val);
        }
        out
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

/// Shuffles with `seed` and moves `round(val_fraction·N)` samples to validation.
pub fn split_dataset<T>(samples: Vec<T>, val_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::Config(format!("val_fraction must be in [0, 1), got {val_fraction}")));
    }
    let n = samples.len();
    let n_val = (val_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(rng::derive_seed(seed, SPLIT_TAG), 0));
    let mut is_val = vec![false; n];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let (mut train, mut val) = (Vec::with_capacity(n - n_val), Vec::with_capacity(n_val));
    for (s, v) in samples.into_iter().zip(is_val) {
        if v {
            val.push(s);
        } else {
            train.push(s);
        }
    }
    Ok((train, val))
}

/// Mean per-sample squared-error loss of `model` over `samples`.
pub fn evaluate_loss<S: TrainSample>(model: &MlpModel, samples: &[S]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    check_dims(model, &samples[0])?;
    let (in_dim, out_dim) = (model.input_dim(), model.output_dim());
    let mut total = 0.0;
    let mut inputs = Vec::with_capacity(EVAL_CHUNK * in_dim);
    for chunk in samples.chunks(EVAL_CHUNK) {
        inputs.clear();
        for s in chunk {
            check_dims(model, s)?;
            inputs.extend_from_slice(s.input());
        }
        let out = model.forward_batch(&inputs, chunk.len())?;
        for (pred, s) in out.chunks_exact(out_dim).zip(chunk) {
            total += 0.5 * crate::matrix::squared_distance(pred, s.target());
        }
    }
    Ok(total / samples.len() as f64)
}

fn check_dims<S: TrainSample>(model: &MlpModel, s: &S) -> Result<()> {
    if s.input().len() != model.input_dim() {
        return Err(Error::shape("sample input", model.input_dim(), s.input().len()));
    }
    if s.target().len() != model.output_dim() {
        return Err(Error::shape("sample target", model.output_dim(), s.target().len()));
    }
    Ok(())
}

/// Resumable optimizer state: parameters, momentum buffer and completed epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub model: MlpModel,
    pub velocity: GradientBundle,
    pub epoch: usize,
}

impl TrainState {
    pub fn fresh(model: MlpModel) -> Self {
        let velocity = GradientBundle::zeros_like(&model);
        TrainState { model, velocity, epoch: 0 }
    }
}

pub fn checkpoint_path(prefix: &Path, epoch: usize) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(format!(".ckpt.{epoch}"));
    PathBuf::from(name)
}

fn velocity_path(prefix: &Path, epoch: usize) -> PathBuf {
    let mut name = checkpoint_path(prefix, epoch).into_os_string();
    name.push(".velocity");
    PathBuf::from(name)
}

/// Writes the model checkpoint and, beside it, the momentum buffer encoded
/// in the same model format.
pub fn save_checkpoint(state: &TrainState, prefix: &Path) -> Result<PathBuf> {
    let path = checkpoint_path(prefix, state.epoch);
    save_model(&state.model, &path)?;
    let velocity_model = bundle_as_model(&state.model, &state.velocity)?;
    let vpath = velocity_path(prefix, state.epoch);
    std::fs::write(&vpath, model_to_string(&velocity_model)).map_err(|e| Error::file(&vpath, e))?;
    Ok(path)
}

pub fn load_checkpoint(prefix: &Path, epoch: usize) -> Result<TrainState> {
    let model = load_model(checkpoint_path(prefix, epoch))?;
    let vpath = velocity_path(prefix, epoch);
    let velocity = match std::fs::read_to_string(&vpath) {
        Ok(text) => {
            let v = model_from_str(&text)?;
            if v.architecture() != model.architecture() {
                return Err(Error::Config("velocity checkpoint does not match model".into()));
            }
            GradientBundle {
                layers: v
                    .layers()
                    .iter()
                    .map(|l| LayerGradient { weights: l.weights().clone(), bias: l.bias().to_vec() })
                    .collect(),
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => GradientBundle::zeros_like(&model),
        Err(e) => return Err(Error::file(vpath, e)),
    };
    Ok(TrainState { model, velocity, epoch })
}

fn bundle_as_model(model: &MlpModel, bundle: &GradientBundle) -> Result<MlpModel> {
    let layers = model
        .layers()
        .iter()
        .zip(&bundle.layers)
        .map(|(l, g)| crate::nn::DenseLayer::new(g.weights.clone(), g.bias.clone(), l.activation()))
        .collect::<Result<Vec<_>>>()?;
    MlpModel::new(layers)
}

/// Trains from scratch for `config.epochs` epochs.
pub fn train<S: TrainSample>(
    model: MlpModel,
    train_set: &[S],
    val_set: &[S],
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    let (state, report) = resume(TrainState::fresh(model), train_set, val_set, config)?;
    Ok((state.model, report))
}

/// Continues training from `state` up to `config.epochs` completed epochs.
///
/// Epoch `k` shuffles with its own stream derived from `(seed, k)`, so a run
/// resumed from a checkpoint matches an uninterrupted one bit for bit. The
/// returned report covers only the epochs run by this call.
pub fn resume<S: TrainSample>(
    mut state: TrainState,
    train_set: &[S],
    val_set: &[S],
    config: &TrainConfig,
) -> Result<(TrainState, TrainReport)> {
    config.validate()?;
    let started = Instant::now();
    let mut report = TrainReport {
        epochs: Vec::new(),
        wall_time: Duration::ZERO,
        gradient_samples: 0,
        stopped_on_plateau: false,
    };
    if state.epoch >= config.epochs {
        report.wall_time = started.elapsed();
        return Ok((state, report));
    }
    if train_set.is_empty() {
        return Err(Error::Empty);
    }
    for s in train_set.iter().chain(val_set) {
        check_dims(&state.model, s)?;
    }
    if !state.velocity.matches(&state.model) {
        return Err(Error::Config("momentum buffer does not match model".into()));
    }

    let (in_dim, out_dim) = (state.model.input_dim(), state.model.output_dim());
    let mut workspace = BatchWorkspace::new();
    let mut grads = GradientBundle::zeros_like(&state.model);
    let mut inputs = Vec::with_capacity(config.batch_size * in_dim);
    let mut targets = Vec::with_capacity(config.batch_size * out_dim);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let shuffle_seed = rng::derive_seed(config.seed, SHUFFLE_TAG);
    let mut best: Option<f64> = None;
    let mut since_best = 0usize;

    while state.epoch < config.epochs {
        let epoch = state.epoch + 1;
        if config.shuffle_each_epoch {
            order.sort_unstable();
            order.shuffle(&mut rng::stream(shuffle_seed, epoch as u64));
        }

        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            inputs.clear();
            targets.clear();
            for &i in batch {
                inputs.extend_from_slice(train_set[i].input());
                targets.extend_from_slice(train_set[i].target());
            }
            loss_sum += workspace.gradient(&state.model, &inputs, &targets, batch.len(), &mut grads)?;
            sgd_step(&mut state.model, &grads, config.learning_rate, config.momentum, &mut state.velocity)?;
            report.gradient_samples += batch.len() as u64;
        }
        let train_loss = loss_sum / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Config(format!("training diverged at epoch {epoch}")));
        }
        let val_loss = if val_set.is_empty() {
            None
        } else {
            Some(evaluate_loss(&state.model, val_set)?)
        };
        state.epoch = epoch;
        let record = EpochRecord { epoch, train_loss, val_loss };
        log::debug!("epoch {epoch} train_loss {train_loss:.6e} val_loss {:.6e}", val_loss.unwrap_or(f64::NAN));
        report.epochs.push(record);

        if config.checkpoint_every > 0 && epoch.is_multiple_of(config.checkpoint_every) {
            if let Some(prefix) = &config.checkpoint_prefix {
                save_checkpoint(&state, prefix)?;
            }
        }

        if let Some(plateau) = config.plateau {
            let monitored = val_loss.unwrap_or(train_loss);
            match best {
                Some(b) if monitored >= b * (1.0 - plateau.min_rel_improvement) => {
                    since_best += 1;
                    if since_best >= plateau.patience {
                        log::info!("validation plateau after epoch {epoch}");
                        report.stopped_on_plateau = true;
                        break;
                    }
                }
                _ => {
                    best = Some(monitored);
                    since_best = 0;
                }
            }
        }
    }
    report.wall_time = started.elapsed();
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::nn::{ActivationKind, Architecture, DenseLayer, IdentityPredictor, Predictor};

    #[derive(Clone, Debug, PartialEq)]
    struct Pair(Vec<f64>, Vec<f64>);

    impl TrainSample for Pair {
        fn input(&self) -> &[f64] {
            &self.0
        }
        fn target(&self) -> &[f64] {
            &self.1
        }
    }

    fn toy_set(n: usize, seed: u64) -> Vec<Pair> {
        use rand::Rng;
        let mut r = rng::stream(seed, 0);
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
                let y = vec![x[0] + 0.5 * x[1], x[1] - x[2], 0.3 * x[2]];
                Pair(x, y)
            })
            .collect()
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let items: Vec<usize> = (0..20_000).collect();
        let (train, val) = split_dataset(items.clone(), 0.2, 7).unwrap();
        assert_eq!((train.len(), val.len()), (16_000, 4_000));
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, items);

        let (train2, val2) = split_dataset(items.clone(), 0.2, 7).unwrap();
        assert_eq!((train, val), (train2, val2));

        let (train, val) = split_dataset(items, 0.0, 7).unwrap();
        assert_eq!((train.len(), val.len()), (20_000, 0));
        assert!(split_dataset(vec![1, 2], 1.0, 0).is_err());
    }

    #[test]
    fn zero_epochs_returns_model_unchanged() {
        let model = MlpModel::init(&"3-4-3".parse().unwrap(), 1).unwrap();
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let (out, report) = train(model.clone(), &toy_set(10, 1), &[], &cfg).unwrap();
        assert_eq!(out, model);
        assert!(report.epochs.is_empty());
    }

    #[test]
    fn single_sample_linear_loss_decreases() {
        let layer = DenseLayer::new(Matrix::from_vec(1, 1, vec![0.2]).unwrap(), vec![0.0], ActivationKind::Linear)
            .unwrap();
        let model = MlpModel::new(vec![layer]).unwrap();
        let data = vec![Pair(vec![1.5], vec![-0.7])];
        let cfg = TrainConfig { epochs: 10, learning_rate: 0.05, ..TrainConfig::default() };
        let (_, report) = train(model, &data, &[], &cfg).unwrap();
        assert_eq!(report.epochs.len(), 10);
        for w in report.epochs.windows(2) {
            assert!(w[1].train_loss < w[0].train_loss);
        }
    }

    #[test]
    fn validation_never_backpropagated() {
        let model = MlpModel::init(&"3-5-3".parse().unwrap(), 2).unwrap();
        let (train_set, val_set) = split_dataset(toy_set(103, 2), 0.3, 1).unwrap();
        let cfg = TrainConfig { epochs: 4, batch_size: 8, ..TrainConfig::default() };
        let (_, report) = train(model, &train_set, &val_set, &cfg).unwrap();
        assert_eq!(report.gradient_samples, 4 * train_set.len() as u64);
        assert!(report.epochs.iter().all(|r| r.val_loss.is_some()));
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy_set(64, 3);
        let cfg = TrainConfig { epochs: 5, batch_size: 16, momentum: 0.5, seed: 9, ..TrainConfig::default() };
        let model = MlpModel::init(&"3-6-3".parse().unwrap(), 4).unwrap();
        let (a, ra) = train(model.clone(), &data, &data[..8], &cfg).unwrap();
        let (b, rb) = train(model, &data, &data[..8], &cfg).unwrap();
        assert_eq!(model_to_string(&a), model_to_string(&b));
        assert_eq!(ra.run_log(), rb.run_log());
    }

    #[test]
    fn checkpoint_resume_matches_uninterrupted() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("run");
        let data = toy_set(50, 5);
        let model = MlpModel::init(&"3-4-3".parse().unwrap(), 6).unwrap();
        let cfg = TrainConfig {
            epochs: 6,
            batch_size: 7,
            momentum: 0.9,
            learning_rate: 0.02,
            seed: 3,
            checkpoint_every: 3,
            checkpoint_prefix: Some(prefix.clone()),
            ..TrainConfig::default()
        };
        let (full, full_report) = train(model, &data, &[], &cfg).unwrap();
        assert!(checkpoint_path(&prefix, 3).exists());
        assert!(checkpoint_path(&prefix, 6).exists());

        let state = load_checkpoint(&prefix, 3).unwrap();
        assert_eq!(state.epoch, 3);
        let cfg_resume = TrainConfig { checkpoint_every: 0, checkpoint_prefix: None, ..cfg };
        let (resumed, tail) = resume(state, &data, &[], &cfg_resume).unwrap();
        assert_eq!(model_to_string(&resumed.model), model_to_string(&full));
        assert_eq!(tail.epochs, full_report.epochs[3..]);
    }

    #[test]
    fn plateau_stops_early() {
        let layer = DenseLayer::new(Matrix::identity(3), vec![0.0; 3], ActivationKind::Linear).unwrap();
        let model = MlpModel::new(vec![layer]).unwrap();
        // already optimal: identity data, identity model
        let data: Vec<Pair> = toy_set(20, 1).into_iter().map(|p| Pair(p.0.clone(), p.0)).collect();
        let cfg = TrainConfig {
            epochs: 100,
            learning_rate: 1e-3,
            plateau: Some(Plateau { patience: 3, min_rel_improvement: 1e-3 }),
            ..TrainConfig::default()
        };
        let (_, report) = train(model, &data, &data, &cfg).unwrap();
        assert!(report.stopped_on_plateau);
        assert_eq!(report.epochs.len(), 4);
    }

    #[test]
    fn evaluate_loss_examples() {
        let id = MlpModel::new(vec![DenseLayer::new(Matrix::identity(2), vec![0.0; 2], ActivationKind::Linear).unwrap()])
            .unwrap();
        assert_eq!(IdentityPredictor { dim: 2 }.input_dim(), 2);
        let clean = vec![Pair(vec![1.0, 2.0], vec![1.0, 2.0])];
        assert_eq!(evaluate_loss(&id, &clean).unwrap(), 0.0);

        // residuals (1, 0) and (2, 2): losses 0.5 and 4.0, mean 2.25
        let two = vec![Pair(vec![1.0, 0.0], vec![0.0, 0.0]), Pair(vec![2.0, 2.0], vec![0.0, 0.0])];
        assert_eq!(evaluate_loss(&id, &two).unwrap(), 2.25);
        let reversed: Vec<Pair> = two.iter().rev().cloned().collect();
        assert_eq!(evaluate_loss(&id, &reversed).unwrap(), 2.25);
        assert!(matches!(evaluate_loss::<Pair>(&id, &[]), Err(Error::Empty)));
    }

    #[test]
    fn dimension_mismatch_before_any_update() {
        let model = MlpModel::init(&Architecture::parse("2-2", None).unwrap(), 1).unwrap();
        let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
        assert!(matches!(train(model, &toy_set(4, 1), &[], &cfg), Err(Error::Shape { .. })));
    }
}
