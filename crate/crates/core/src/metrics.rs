//! Denoising scores and plot-ready data files.
//!
//! The residual ratio is `‖z − x‖² / ‖x̃ − x‖²` for clean `x`, noisy `x̃` and
//! denoised `z`. Headline numbers use the reduction percentage
//! `100·(1 − ratio)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::squared_distance;
use crate::nn::Predictor;
use crate::process::SignalSample;
use crate::seismic::{Normalizer, SeismicSection};
use crate::textio::{parse_f64, parse_usize, Lines};

/// Residual noise energy over input noise energy.
pub fn residual_ratio(clean: &[f64], noisy: &[f64], denoised: &[f64]) -> Result<f64> {
    if noisy.len() != clean.len() {
        return Err(Error::shape("noisy vector", clean.len(), noisy.len()));
    }
    if denoised.len() != clean.len() {
        return Err(Error::shape("denoised vector", clean.len(), denoised.len()));
    }
    let noise = squared_distance(noisy, clean);
    if noise == 0.0 {
        return Err(Error::NoiseFree);
    }
    Ok(squared_distance(denoised, clean) / noise)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleScore {
    pub index: usize,
    pub residual_ratio: f64,
    pub reduction_pct: f64,
    pub class: u8,
}

impl SampleScore {
    pub fn new(index: usize, residual_ratio: f64, class: u8) -> Self {
        SampleScore {
            index,
            residual_ratio,
            reduction_pct: 100.0 * (1.0 - residual_ratio),
            class,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scores: Vec<SampleScore>,
    pub mean_reduction_pct: f64,
    pub mean_residual_ratio: f64,
    /// Noise-free samples that were skipped.
    pub skipped: usize,
    /// RMS of `denoised − clean` over traces that were not corrupted.
    pub uncorrupted_rms_distortion: Option<f64>,
    /// RMS amplitude of the clean section.
    pub section_rms: Option<f64>,
}

impl EvalReport {
    pub fn from_scores(scores: Vec<SampleScore>, skipped: usize) -> Self {
        let n = scores.len().max(1) as f64;
        EvalReport {
            mean_reduction_pct: scores.iter().map(|s| s.reduction_pct).sum::<f64>() / n,
            mean_residual_ratio: scores.iter().map(|s| s.residual_ratio).sum::<f64>() / n,
            scores,
            skipped,
            uncorrupted_rms_distortion: None,
            section_rms: None,
        }
    }

    /// Uncorrupted-trace distortion relative to the clean section RMS.
    pub fn relative_distortion(&self) -> Option<f64> {
        match (self.uncorrupted_rms_distortion, self.section_rms) {
            (Some(d), Some(r)) if r > 0.0 => Some(d / r),
            _ => None,
        }
    }

    /// `key=value` summary, one per line.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "samples={}", self.scores.len());
        let _ = writeln!(out, "skipped_noise_free={}", self.skipped);
        let _ = writeln!(out, "mean_reduction_pct={:?}", self.mean_reduction_pct);
        let _ = writeln!(out, "mean_residual_ratio={:?}", self.mean_residual_ratio);
        if let Some(d) = self.uncorrupted_rms_distortion {
            let _ = writeln!(out, "uncorrupted_rms_distortion={d:?}");
        }
        if let Some(r) = self.section_rms {
            let _ = writeln!(out, "section_rms={r:?}");
        }
        if let Some(rel) = self.relative_distortion() {
            let _ = writeln!(out, "relative_distortion={rel:?}");
        }
        out
    }
}

/// Scores `samples` with an arbitrary denoiser. Noise-free samples are skipped
/// and counted.
pub fn evaluate_with<F>(samples: &[SignalSample], mut denoise: F) -> Result<EvalReport>
where
    F: FnMut(&SignalSample) -> Result<Vec<f64>>,
{
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let mut scores = Vec::with_capacity(samples.len());
    let mut skipped = 0;
    for (index, s) in samples.iter().enumerate() {
        if !s.is_noisy() || s.input == s.target {
            log::warn!("test sample {index} is noise-free; skipped");
            skipped += 1;
            continue;
        }
        let z = denoise(s)?;
        let ratio = residual_ratio(&s.target, &s.input, &z)?;
        let class = s.noise.map_or(0, |n| n.mode.class());
        scores.push(SampleScore::new(index, ratio, class));
    }
    Ok(EvalReport::from_scores(scores, skipped))
}

/// Scores `predictor` on noisy test samples; inputs are normalized before and
/// outputs de-normalized after prediction.
pub fn evaluate_model<P: Predictor + ?Sized>(
    predictor: &P,
    samples: &[SignalSample],
    normalizer: &Normalizer,
) -> Result<EvalReport> {
    evaluate_with(samples, |s| {
        let mut x = s.input.clone();
        normalizer.normalize(&mut x);
        let mut z = predictor.predict(&x)?;
        normalizer.denormalize(&mut z);
        Ok(z)
    })
}

/// Scores each corrupted trace of a denoised section, and measures the
/// distortion introduced on the remaining traces.
pub fn trace_noise_report(
    clean: &SeismicSection,
    noisy: &SeismicSection,
    denoised: &SeismicSection,
    corrupted: &[usize],
) -> Result<EvalReport> {
    if !clean.same_dims(noisy) || !clean.same_dims(denoised) {
        return Err(Error::Config("sections must have identical dimensions".into()));
    }
    let mut scores = Vec::with_capacity(corrupted.len());
    for &trace in corrupted {
        if trace >= clean.n_traces() {
            return Err(Error::OutOfRange { index: trace, len: clean.n_traces() });
        }
        let ratio = residual_ratio(&clean.trace(trace), &noisy.trace(trace), &denoised.trace(trace))
            .map_err(|e| match e {
                Error::NoiseFree => Error::UncorruptedTrace { trace },
                other => other,
            })?;
        scores.push(SampleScore::new(trace, ratio, 0));
    }

    let mut sq = 0.0;
    let mut count = 0usize;
    for t in (0..clean.n_traces()).filter(|t| !corrupted.contains(t)) {
        sq += squared_distance(&clean.trace(t), &denoised.trace(t));
        count += clean.n_samples();
    }
    let mut report = EvalReport::from_scores(scores, 0);
    report.uncorrupted_rms_distortion = Some(if count == 0 { 0.0 } else { (sq / count as f64).sqrt() });
    report.section_rms = Some(clean.rms());
    Ok(report)
}

pub const IMPROVEMENT_HEADER: &str = "samples improvement class";
pub const TRACE_HEADER: &str = "x V Vnoisy Vae";

pub fn improvement_dat(report: &EvalReport) -> String {
    let mut out = format!("{IMPROVEMENT_HEADER}\n");
    for s in &report.scores {
        let _ = writeln!(out, "{} {:?} {}", s.index, s.reduction_pct, s.class);
    }
    out
}

/// Writes `samples improvement class` rows: sample index, reduction percentage
/// and noise class.
pub fn emit_improvement_dat(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    if report.scores.is_empty() {
        return Err(Error::Empty);
    }
    let path = path.as_ref();
    fs::write(path, improvement_dat(report)).map_err(|e| Error::file(path, e))
}

/// Parses an improvement file into `(index, reduction_pct, class)` rows.
pub fn read_improvement_dat(text: &str) -> Result<Vec<(usize, f64, u8)>> {
    let mut lines = Lines::new(text);
    let (ln, header) = lines.expect("header")?;
    if header.trim() != IMPROVEMENT_HEADER {
        return Err(Error::parse(ln, format!("expected header `{IMPROVEMENT_HEADER}`")));
    }
    let mut rows = Vec::new();
    while let Ok((ln, line)) = lines.expect("row") {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::parse(ln, "expected 3 columns"));
        }
        let class = parse_usize(f[2], ln)?;
        rows.push((parse_usize(f[0], ln)?, parse_f64(f[1], ln)?, class as u8));
    }
    Ok(rows)
}

pub fn trace_dat(clean: &[f64], noisy: &[f64], denoised: &[f64]) -> Result<String> {
    if noisy.len() != clean.len() || denoised.len() != clean.len() {
        return Err(Error::shape("trace columns", clean.len(), noisy.len().min(denoised.len())));
    }
    let mut out = format!("{TRACE_HEADER}\n");
    for (i, ((v, n), d)) in clean.iter().zip(noisy).zip(denoised).enumerate() {
        let _ = writeln!(out, "{} {v:?} {n:?} {d:?}", i + 1);
    }
    Ok(out)
}

/// Writes `x V Vnoisy Vae` rows with a 1-based data point index.
pub fn emit_trace_dat(clean: &[f64], noisy: &[f64], denoised: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let text = trace_dat(clean, noisy, denoised)?;
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::file(path, e))
}
