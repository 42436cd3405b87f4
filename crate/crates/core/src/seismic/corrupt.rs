use std::f64::consts::TAU;

use rand::Rng;

use super::section::{section_amax, SeismicSection};
use crate::error::{Error, Result};

/// Ranges for monofrequency replacement traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyTraceSpec {
    /// Amplitude as a fraction of the clean section's maximum amplitude.
    pub amp_fraction_range: (f64, f64),
    pub freq_range_hz: (f64, f64),
}

impl Default for NoisyTraceSpec {
    fn default() -> Self {
        NoisyTraceSpec {
            amp_fraction_range: (0.5, 1.0),
            freq_range_hz: (110.0, 220.0),
        }
    }
}

impl NoisyTraceSpec {
    pub fn new(amp_fraction_range: (f64, f64), freq_range_hz: (f64, f64)) -> Result<Self> {
        for (name, (lo, hi)) in [("amplitude", amp_fraction_range), ("frequency", freq_range_hz)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config(format!("{name} range must satisfy 0 < low <= high, got [{lo}, {hi}]")));
            }
        }
        Ok(NoisyTraceSpec { amp_fraction_range, freq_range_hz })
    }

    /// Draws amplitude, frequency and phase for one replacement trace.
    pub fn draw<R: Rng + ?Sized>(&self, a_max: f64, rng: &mut R) -> Sinusoid {
        let (alo, ahi) = self.amp_fraction_range;
        let (flo, fhi) = self.freq_range_hz;
        Sinusoid {
            amplitude: rng.gen_range(alo..=ahi) * a_max,
            freq_hz: rng.gen_range(flo..=fhi),
            phase: rng.gen_range(0.0..TAU),
        }
    }
}

/// `A·sin(2π·f·k·dt + φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub freq_hz: f64,
    pub phase: f64,
}

impl Sinusoid {
    /// Samples the continuous sinusoid at `k·dt`. Frequencies above Nyquist
    /// alias; no anti-alias filtering is applied.
    pub fn sample(&self, n_samples: usize, dt: f64) -> Vec<f64> {
        let cycles_per_sample = self.freq_hz * dt;
        (0..n_samples)
            .map(|k| {
                let cycles = cycles_per_sample * k as f64;
                // reduce to one cycle before scaling by 2π
                let frac = cycles - cycles.floor();
                self.amplitude * (TAU * frac + self.phase).sin()
            })
            .collect()
    }
}

/// Record of one replaced trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceCorruption {
    pub trace: usize,
    pub sinusoid: Sinusoid,
}

/// Replaces each listed trace with a random monofrequency sinusoid.
///
/// Amplitudes are drawn relative to the maximum amplitude of `section`,
/// which is taken to be the clean section.
pub fn corrupt_traces<R: Rng + ?Sized>(
    section: &SeismicSection,
    trace_indices: &[usize],
    spec: &NoisyTraceSpec,
    rng: &mut R,
) -> Result<(SeismicSection, Vec<TraceCorruption>)> {
    if let Some(&bad) = trace_indices.iter().find(|&&i| i >= section.n_traces()) {
        return Err(Error::OutOfRange { index: bad, len: section.n_traces() });
    }
    let mut out = section.clone();
    if trace_indices.is_empty() {
        return Ok((out, Vec::new()));
    }
    let a_max = section_amax(section);
    if a_max == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    let mut log = Vec::with_capacity(trace_indices.len());
    for &trace in trace_indices {
        let sinusoid = spec.draw(a_max, rng);
        out.set_trace(trace, &sinusoid.sample(section.n_samples(), section.dt()));
        log.push(TraceCorruption { trace, sinusoid });
    }
    Ok((out, log))
}

/// `count` distinct trace indices, one drawn uniformly from each of `count`
/// equal-width strata of `[0, n_traces)`. Returned sorted.
pub fn spaced_trace_indices<R: Rng + ?Sized>(n_traces: usize, count: usize, rng: &mut R) -> Result<Vec<usize>> {
    if count > n_traces {
        return Err(Error::Config(format!("cannot pick {count} traces out of {n_traces}")));
    }
    Ok((0..count)
        .map(|i| {
            let lo = i * n_traces / count;
            let hi = (i + 1) * n_traces / count;
            rng.gen_range(lo..hi)
        })
        .collect())
}
