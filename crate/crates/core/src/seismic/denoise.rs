//! Full-section reconstruction from overlapping windows.

use super::patch::{extract_patch, Normalizer};
use super::section::SeismicSection;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::Predictor;

/// Number of stride-1 windows of `width` traces that contain each trace.
pub fn coverage_counts(n_traces: usize, width: usize) -> Vec<usize> {
    if width == 0 || width > n_traces {
        return vec![0; n_traces];
    }
    let last_start = n_traces - width;
    (0..n_traces)
        .map(|t| {
            let first = t.saturating_sub(width - 1);
            let last = t.min(last_start);
            last + 1 - first
        })
        .collect()
}

/// Runs every stride-1 window through `predictor` and averages, per trace,
/// the predictions of all windows covering it.
///
/// Windows are normalized before prediction and de-normalized after. Averages
/// are accumulated as running means in window order, so identical predictions
/// reproduce their value exactly.
pub fn denoise_section<P: Predictor + ?Sized>(
    section: &SeismicSection,
    predictor: &P,
    width: usize,
    normalizer: &Normalizer,
) -> Result<SeismicSection> {
    let height = section.n_samples();
    let dim = width * height;
    if predictor.input_dim() != dim || predictor.output_dim() != dim {
        return Err(Error::shape("denoising window", dim, predictor.input_dim()));
    }
    if width == 0 || width > section.n_traces() {
        return Err(Error::Config(format!(
            "window width {width} invalid for a section of {} traces",
            section.n_traces()
        )));
    }
    let windows = section.n_traces() - width + 1;

    let mut batch = Vec::with_capacity(windows * dim);
    for start in 0..windows {
        batch.extend(extract_patch(section, start, width)?.flatten());
    }
    normalizer.normalize(&mut batch);
    let mut predicted = predictor.predict_batch(&batch, windows)?;
    normalizer.denormalize(&mut predicted);

    let mut mean = Matrix::zeros(height, section.n_traces());
    let mut seen = vec![0usize; section.n_traces()];
    for (start, window) in predicted.chunks_exact(dim).enumerate() {
        for (j, column) in window.chunks_exact(height).enumerate() {
            let trace = start + j;
            seen[trace] += 1;
            let n = seen[trace] as f64;
            for (r, &v) in column.iter().enumerate() {
                let m = mean.get(r, trace);
                mean.set(r, trace, m + (v - m) / n);
            }
        }
    }
    SeismicSection::new(mean, section.dt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::IdentityPredictor;

    #[test]
    fn coverage_for_99_traces_width_9() {
        let c = coverage_counts(99, 9);
        assert_eq!(c[0], 1);
        assert_eq!(c[98], 1);
        assert!(c[8..=90].iter().all(|&n| n == 9));
        for t in 0..8 {
            assert_eq!(c[t], t + 1);
            assert_eq!(c[98 - t], t + 1);
        }
    }

    #[test]
    fn identity_predictor_reproduces_section() {
        let m = Matrix::from_fn(6, 11, |r, c| ((r * 11 + c) as f64).cos());
        let s = SeismicSection::new(m, 0.004).unwrap();
        let out = denoise_section(&s, &IdentityPredictor { dim: 4 * 6 }, 4, &Normalizer::new(0.7).unwrap()).unwrap();
        for (a, b) in out.amplitudes().as_slice().iter().zip(s.amplitudes().as_slice()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn single_window_when_width_is_full() {
        let m = Matrix::from_fn(3, 2, |r, c| (r + c) as f64);
        let s = SeismicSection::new(m, 1.0).unwrap();
        struct Doubler;
        impl Predictor for Doubler {
            fn input_dim(&self) -> usize {
                6
            }
            fn output_dim(&self) -> usize {
                6
            }
            fn predict_batch(&self, inputs: &[f64], _: usize) -> Result<Vec<f64>> {
                Ok(inputs.iter().map(|v| 2.0 * v).collect())
            }
        }
        let out = denoise_section(&s, &Doubler, 2, &Normalizer::new(2.0).unwrap()).unwrap();
        for (a, b) in out.amplitudes().as_slice().iter().zip(s.amplitudes().as_slice()) {
            assert_eq!(*a, 2.0 * b);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = SeismicSection::zeros(10, 4, 0.008).unwrap();
        let r = denoise_section(&s, &IdentityPredictor { dim: 35 }, 9, &Normalizer::identity());
        assert!(matches!(r, Err(Error::Shape { .. })));
    }
}
