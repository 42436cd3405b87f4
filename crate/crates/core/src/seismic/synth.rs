//! Synthetic clean sections: linear dipping reflectors convolved with a
//! Ricker wavelet.

use std::f64::consts::PI;

use rand::Rng;

use super::section::SeismicSection;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Ricker wavelet `(1 − 2π²f²t²)·exp(−π²f²t²)` centred on `t = 0`.
pub fn ricker(t: f64, peak_freq_hz: f64) -> f64 {
    let a = (PI * peak_freq_hz * t).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

/// One reflector: arrival time `t0 + dip·trace` with the given amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearEvent {
    /// Arrival time at trace 0, seconds.
    pub t0: f64,
    /// Moveout in seconds per trace.
    pub dip: f64,
    pub amplitude: f64,
}

/// Reflectors to place in a synthetic section.
///
/// `events` are placed verbatim; `random_events` more are drawn with `t0`
/// uniform over the record, dip uniform in `dip_range` and amplitude
/// magnitude uniform in `amplitude_range` with a random sign.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub peak_freq_hz: f64,
    pub events: Vec<LinearEvent>,
    pub random_events: usize,
    pub dip_range: (f64, f64),
    pub amplitude_range: (f64, f64),
}

impl Default for EventSpec {
    fn default() -> Self {
        EventSpec {
            peak_freq_hz: 20.0,
            events: Vec::new(),
            random_events: 6,
            dip_range: (-0.002, 0.002),
            amplitude_range: (0.4, 1.0),
        }
    }
}

impl EventSpec {
    pub fn explicit(peak_freq_hz: f64, events: Vec<LinearEvent>) -> Self {
        EventSpec {
            peak_freq_hz,
            events,
            random_events: 0,
            ..EventSpec::default()
        }
    }
}

/// Builds a clean section. The wavelet peak frequency must not exceed
/// `0.4 / (2·dt)`, i.e. 40% of Nyquist.
pub fn synth_clean_section<R: Rng + ?Sized>(
    n_traces: usize,
    n_samples: usize,
    dt: f64,
    spec: &EventSpec,
    rng: &mut R,
) -> Result<SeismicSection> {
    if n_traces == 0 || n_samples == 0 {
        return Err(Error::Config("section dimensions must be at least 1".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!("sampling interval must be positive, got {dt}")));
    }
    let limit = 0.4 / (2.0 * dt);
    if !(spec.peak_freq_hz > 0.0 && spec.peak_freq_hz <= limit) {
        return Err(Error::Config(format!(
            "wavelet peak frequency {} Hz outside (0, {limit}] Hz",
            spec.peak_freq_hz
        )));
    }

    let mut events = spec.events.clone();
    let duration = n_samples as f64 * dt;
    for _ in 0..spec.random_events {
        let t0 = rng.gen_range(0.0..duration);
        let dip = if spec.dip_range.0 < spec.dip_range.1 {
            rng.gen_range(spec.dip_range.0..=spec.dip_range.1)
        } else {
            spec.dip_range.0
        };
        let magnitude = if spec.amplitude_range.0 < spec.amplitude_range.1 {
            rng.gen_range(spec.amplitude_range.0..=spec.amplitude_range.1)
        } else {
            spec.amplitude_range.0
        };
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        events.push(LinearEvent { t0, dip, amplitude: sign * magnitude });
    }

    let amplitudes = Matrix::from_fn(n_samples, n_traces, |k, trace| {
        let t = k as f64 * dt;
        events
            .iter()
            .map(|e| e.amplitude * ricker(t - (e.t0 + e.dip * trace as f64), spec.peak_freq_hz))
            .sum()
    });
    SeismicSection::new(amplitudes, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn ricker_shape() {
        assert_eq!(ricker(0.0, 20.0), 1.0);
        assert!((ricker(0.01, 20.0) - ricker(-0.01, 20.0)).abs() < 1e-15);
        // zero crossings at t = ±1/(π f √2)
        let tz = 1.0 / (PI * 20.0 * 2f64.sqrt());
        assert!(ricker(tz, 20.0).abs() < 1e-15);
    }

    #[test]
    fn no_events_gives_zero_section() {
        let spec = EventSpec::explicit(20.0, vec![]);
        let s = synth_clean_section(5, 10, 0.008, &spec, &mut rng::stream(0, 0)).unwrap();
        assert!(s.amplitudes().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn horizontal_event_gives_identical_traces() {
        let spec = EventSpec::explicit(20.0, vec![LinearEvent { t0: 0.1, dip: 0.0, amplitude: 1.0 }]);
        let s = synth_clean_section(7, 42, 0.008, &spec, &mut rng::stream(0, 0)).unwrap();
        let first = s.trace(0);
        assert!(first.iter().any(|&v| v != 0.0));
        for j in 1..7 {
            assert_eq!(s.trace(j), first);
        }
    }

    #[test]
    fn seeded_synthesis_is_reproducible() {
        let spec = EventSpec::default();
        let a = synth_clean_section(99, 42, 0.008, &spec, &mut rng::stream(3, 0)).unwrap();
        let b = synth_clean_section(99, 42, 0.008, &spec, &mut rng::stream(3, 0)).unwrap();
        let c = synth_clean_section(99, 42, 0.008, &spec, &mut rng::stream(4, 0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_super_nyquist_wavelet() {
        let spec = EventSpec { peak_freq_hz: 30.0, ..EventSpec::default() };
        assert!(synth_clean_section(5, 5, 0.008, &spec, &mut rng::stream(0, 0)).is_err());
        assert!(synth_clean_section(0, 5, 0.008, &EventSpec::default(), &mut rng::stream(0, 0)).is_err());
    }
}
