//! Two-parameter process model and its noisy training corpus.
//!
//! Signals are `x(t) = t·z·sin θ + (t²/z)·cos θ` sampled on `t = 0.05, 0.10, …, 1.00`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::textio::{header_field, parse_f64, parse_usize, push_row, Lines};

pub const SIGNAL_LEN: usize = 20;
pub const TIME_STEP: f64 = 0.05;
pub const Z_RANGE: (f64, f64) = (0.5, 4.0);
pub const THETA_RANGE: (f64, f64) = (0.3, 1.3);
/// Noise bound used for training injections.
pub const TRAIN_NOISE_FRACTION: f64 = 0.25;
/// Per-sample noise bound range for the test set.
pub const TEST_NOISE_RANGE: (f64, f64) = (0.10, 0.25);

const DATASET_TAG: u64 = 0xDA7A;
const TESTSET_TAG: u64 = 0x7E57;

/// The sampling grid `0.05, 0.10, …, 1.00`.
pub fn time_grid() -> [f64; SIGNAL_LEN] {
    // i·0.05 accumulates error; (i+1)/20 is exact to one rounding.
    std::array::from_fn(|i| (i + 1) as f64 / SIGNAL_LEN as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    pub z: f64,
    pub theta: f64,
}

impl ProcessParams {
    pub fn new(z: f64, theta: f64) -> Result<Self> {
        if !(Z_RANGE.0..=Z_RANGE.1).contains(&z) || !(THETA_RANGE.0..=THETA_RANGE.1).contains(&theta) {
            return Err(Error::Config(format!("process parameters out of range: z={z}, theta={theta}")));
        }
        Ok(ProcessParams { z, theta })
    }
}

/// Evaluates the process model at a single time. Accepts any `z ≠ 0`.
pub fn eval_process(t: f64, params: ProcessParams) -> f64 {
    let (sin, cos) = params.theta.sin_cos();
    t * params.z * sin + t * t / params.z * cos
}

pub fn generate_signal(params: ProcessParams) -> Vec<f64> {
    time_grid().iter().map(|&t| eval_process(t, params)).collect()
}

pub fn sample_params<R: Rng + ?Sized>(rng: &mut R) -> ProcessParams {
    ProcessParams {
        z: rng.gen_range(Z_RANGE.0..=Z_RANGE.1),
        theta: rng.gen_range(THETA_RANGE.0..=THETA_RANGE.1),
    }
}

/// How the per-point noise bound is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseMode {
    /// Bound proportional to `|xᵢ|`.
    LocalScaled,
    /// Bound proportional to `mean(|x|)`.
    MeanScaled,
}

impl NoiseMode {
    /// Integer label used in plot files.
    pub fn class(self) -> u8 {
        match self {
            NoiseMode::LocalScaled => 0,
            NoiseMode::MeanScaled => 1,
        }
    }

    fn token(self) -> &'static str {
        match self {
            NoiseMode::LocalScaled => "local",
            NoiseMode::MeanScaled => "mean",
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(NoiseMode::LocalScaled),
            "mean" => Ok(NoiseMode::MeanScaled),
            other => Err(Error::Config(format!("unknown noise mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub max_fraction: f64,
}

impl NoiseSpec {
    pub fn new(mode: NoiseMode, max_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&max_fraction) {
            return Err(Error::Config(format!("noise fraction {max_fraction} outside [0, 1]")));
        }
        Ok(NoiseSpec { mode, max_fraction })
    }

    /// Per-point bound `a·scaleᵢ` for `signal`.
    pub fn bounds(&self, signal: &[f64]) -> Vec<f64> {
        match self.mode {
            NoiseMode::LocalScaled => signal.iter().map(|x| self.max_fraction * x.abs()).collect(),
            NoiseMode::MeanScaled => {
                let mean_abs = signal.iter().map(|x| x.abs()).sum::<f64>() / signal.len().max(1) as f64;
                vec![self.max_fraction * mean_abs; signal.len()]
            }
        }
    }
}

/// Adds zero-mean uniform noise: `x̃ᵢ = xᵢ + uᵢ·scaleᵢ` with `uᵢ ~ U[−a, a]`.
pub fn inject_noise<R: Rng + ?Sized>(signal: &[f64], spec: NoiseSpec, rng: &mut R) -> Vec<f64> {
    if spec.max_fraction == 0.0 {
        return signal.to_vec();
    }
    let unit = NoiseSpec { max_fraction: 1.0, ..spec }.bounds(signal);
    let a = spec.max_fraction;
    signal
        .iter()
        .zip(unit)
        .map(|(&x, scale)| x + rng.gen_range(-a..=a) * scale)
        .collect()
}

/// Noise that was applied to a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedNoise {
    pub mode: NoiseMode,
    pub fraction: f64,
}

/// A `(possibly noisy input, clean target)` training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub params: ProcessParams,
    pub noise: Option<AppliedNoise>,
}

impl SignalSample {
    pub fn is_noisy(&self) -> bool {
        self.noise.is_some()
    }

    fn clean(params: ProcessParams) -> Self {
        let target = generate_signal(params);
        SignalSample {
            input: target.clone(),
            target,
            params,
            noise: None,
        }
    }

    fn noisy(params: ProcessParams, spec: NoiseSpec, rng: &mut StreamRng) -> Self {
        let target = generate_signal(params);
        SignalSample {
            input: inject_noise(&target, spec, rng),
            target,
            params,
            noise: Some(AppliedNoise {
                mode: spec.mode,
                fraction: spec.max_fraction,
            }),
        }
    }
}

/// Counts of each sample kind in a training corpus of `total` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Composition {
    pub clean: usize,
    pub local: usize,
    pub mean: usize,
}

impl Composition {
    /// Half clean, half noisy; the noisy half splits evenly between modes
    /// (local takes the odd one out when `total/2` is odd).
    pub fn for_total(total: usize) -> Result<Self> {
        if total < 4 || !total.is_multiple_of(2) {
            return Err(Error::Config(format!("dataset size must be even and at least 4, got {total}")));
        }
        let noisy = total / 2;
        let mean = noisy / 2;
        Ok(Composition {
            clean: total - noisy,
            local: noisy - mean,
            mean,
        })
    }

    pub fn of(samples: &[SignalSample]) -> Self {
        let mut c = Composition { clean: 0, local: 0, mean: 0 };
        for s in samples {
            match s.noise.map(|n| n.mode) {
                None => c.clean += 1,
                Some(NoiseMode::LocalScaled) => c.local += 1,
                Some(NoiseMode::MeanScaled) => c.mean += 1,
            }
        }
        c
    }
}

/// Builds the training corpus: clean samples first, then local-scaled, then
/// mean-scaled, each with freshly sampled parameters.
///
/// Sample `i` draws from its own stream, so the result does not depend on the
/// number of worker threads.
pub fn build_math_dataset(total: usize, seed: u64) -> Result<Vec<SignalSample>> {
    let comp = Composition::for_total(total)?;
    let base = rng::derive_seed(seed, DATASET_TAG);
    Ok((0..total)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(base, i as u64);
            let params = sample_params(&mut rng);
            let mode = if i < comp.clean {
                None
            } else if i < comp.clean + comp.local {
                Some(NoiseMode::LocalScaled)
            } else {
                Some(NoiseMode::MeanScaled)
            };
            match mode {
                None => SignalSample::clean(params),
                Some(mode) => {
                    SignalSample::noisy(params, NoiseSpec { mode, max_fraction: TRAIN_NOISE_FRACTION }, &mut rng)
                }
            }
        })
        .collect())
}

/// Builds `count` noisy test samples. Each draws its bound `a` from
/// [`TEST_NOISE_RANGE`]; even indices use local scaling, odd indices mean scaling.
pub fn build_test_set(count: usize, seed: u64) -> Result<Vec<SignalSample>> {
    if count == 0 {
        return Err(Error::Config("test set needs at least one sample".into()));
    }
    let base = rng::derive_seed(seed, TESTSET_TAG);
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(base, i as u64);
            let params = sample_params(&mut rng);
            let a = rng.gen_range(TEST_NOISE_RANGE.0..=TEST_NOISE_RANGE.1);
            let mode = if i % 2 == 0 {
                NoiseMode::LocalScaled
            } else {
                NoiseMode::MeanScaled
            };
            SignalSample::noisy(params, NoiseSpec { mode, max_fraction: a }, &mut rng)
        })
        .collect())
}

pub const DATASET_MAGIC: &str = "AUTONN-DATASET v1";

/// Serializes samples as `is_noisy z theta a mode x1..xn t1..tn` records.
pub fn dataset_to_string(samples: &[SignalSample]) -> String {
    let n = samples.first().map_or(SIGNAL_LEN, |s| s.input.len());
    let mut out = format!("{DATASET_MAGIC} n={n}\n");
    for s in samples {
        let (flag, a, mode) = match s.noise {
            Some(noise) => ("1", noise.fraction, noise.mode.token()),
            None => ("0", 0.0, "none"),
        };
        out.push_str(&format!("{flag} {:?} {:?} {a:?} {mode} ", s.params.z, s.params.theta));
        let mut values = s.input.clone();
        values.extend_from_slice(&s.target);
        push_row(&mut out, &values);
    }
    out
}

pub fn dataset_from_str(text: &str) -> Result<Vec<SignalSample>> {
    let mut lines = Lines::new(text);
    let (ln, header) = lines.expect("dataset header")?;
    if !header.starts_with(DATASET_MAGIC) {
        return Err(Error::parse(ln, format!("expected `{DATASET_MAGIC}`")));
    }
    let n = parse_usize(header_field(header, "n", ln)?, ln)?;

    let mut samples = Vec::new();
    while let Ok((ln, line)) = lines.expect("record") {
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 5 + 2 * n {
            return Err(Error::parse(ln, format!("expected {} fields, found {}", 5 + 2 * n, tokens.len())));
        }
        let params = ProcessParams {
            z: parse_f64(tokens[1], ln)?,
            theta: parse_f64(tokens[2], ln)?,
        };
        let a = parse_f64(tokens[3], ln)?;
        let noise = match (tokens[0], tokens[4]) {
            ("0", "none") => None,
            ("1", mode) => Some(AppliedNoise {
                mode: mode.parse().map_err(|_| Error::parse(ln, format!("bad noise mode `{mode}`")))?,
                fraction: a,
            }),
            _ => return Err(Error::parse(ln, "inconsistent is_noisy/mode fields")),
        };
        let values = tokens[5..]
            .iter()
            .map(|t| parse_f64(t, ln))
            .collect::<Result<Vec<_>>>()?;
        let (input, target) = values.split_at(n);
        if noise.is_none() && input != target {
            return Err(Error::parse(ln, "noise-free record with input != target"));
        }
        samples.push(SignalSample {
            input: input.to_vec(),
            target: target.to_vec(),
            params,
            noise,
        });
    }
    Ok(samples)
}

pub fn save_dataset(samples: &[SignalSample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset_to_string(samples)).map_err(|e| Error::file(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<SignalSample>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    dataset_from_str(&text)
}
