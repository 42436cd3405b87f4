//! Fixed-width trace windows and the patch training corpus.

use rand::Rng;
use rayon::prelude::*;

use super::corrupt::NoisyTraceSpec;
use super::section::{section_amax, SeismicSection};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

pub const DEFAULT_PATCH_WIDTH: usize = 9;
const PATCH_TAG: u64 = 0x9A7C;

/// `width` adjacent traces spanning the full time extent of a section.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub origin_trace: usize,
    /// `height × width`, one column per trace.
    pub values: Matrix,
}

impl Patch {
    pub fn width(&self) -> usize {
        self.values.cols()
    }

    pub fn height(&self) -> usize {
        self.values.rows()
    }

    /// Column-major by trace: trace `j` occupies `[j·height, (j+1)·height)`.
    pub fn flatten(&self) -> Vec<f64> {
        flatten_columns(&self.values)
    }

    pub fn unflatten(flat: &[f64], width: usize, height: usize, origin_trace: usize) -> Result<Self> {
        if flat.len() != width * height {
            return Err(Error::shape("patch vector", width * height, flat.len()));
        }
        Ok(Patch {
            origin_trace,
            values: Matrix::from_fn(height, width, |r, c| flat[c * height + r]),
        })
    }
}

pub(crate) fn flatten_columns(m: &Matrix) -> Vec<f64> {
    let (h, w) = (m.rows(), m.cols());
    let mut out = Vec::with_capacity(h * w);
    for c in 0..w {
        for r in 0..h {
            out.push(m.get(r, c));
        }
    }
    out
}

/// Copies traces `[start_trace, start_trace + width)`.
pub fn extract_patch(section: &SeismicSection, start_trace: usize, width: usize) -> Result<Patch> {
    if width == 0 || width > section.n_traces() {
        return Err(Error::Config(format!(
            "patch width {width} invalid for a section of {} traces",
            section.n_traces()
        )));
    }
    let last_start = section.n_traces() - width;
    if start_trace > last_start {
        return Err(Error::OutOfRange { index: start_trace, len: last_start + 1 });
    }
    let amps = section.amplitudes();
    Ok(Patch {
        origin_trace: start_trace,
        values: Matrix::from_fn(section.n_samples(), width, |r, c| amps.get(r, start_trace + c)),
    })
}

/// Divides amplitudes by a fixed scale, normally the clean section's `A_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    scale: f64,
}

impl Normalizer {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::ZeroAmplitude);
        }
        Ok(Normalizer { scale })
    }

    pub fn identity() -> Self {
        Normalizer { scale: 1.0 }
    }

    pub fn from_section(clean: &SeismicSection) -> Result<Self> {
        Normalizer::new(section_amax(clean))
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn normalize(&self, values: &mut [f64]) {
        if self.scale != 1.0 {
            values.iter_mut().for_each(|v| *v /= self.scale);
        }
    }

    pub fn denormalize(&self, values: &mut [f64]) {
        if self.scale != 1.0 {
            values.iter_mut().for_each(|v| *v *= self.scale);
        }
    }
}

/// A flattened, normalized `(input, clean target)` patch pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub origin_trace: usize,
    /// In-patch index of the replaced trace, if any.
    pub corrupted_trace: Option<usize>,
}

/// Size of a patch corpus: each clean window is followed by its noisy variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchPlan {
    pub num_clean: usize,
    pub noisy_per_clean: usize,
}

impl PatchPlan {
    pub fn new(num_clean: usize, noisy_per_clean: usize) -> Result<Self> {
        if num_clean == 0 {
            return Err(Error::Config("num_clean must be at least 1".into()));
        }
        Ok(PatchPlan { num_clean, noisy_per_clean })
    }

    pub fn total_samples(&self) -> usize {
        self.num_clean * (1 + self.noisy_per_clean)
    }
}

/// Builds the patch corpus from a clean section.
///
/// Windows are drawn uniformly with replacement over all valid start traces.
/// Each noisy variant replaces one uniformly chosen in-patch trace with a fresh
/// sinusoid drawn from `spec` relative to the section's `A_max`. Inputs and
/// targets are divided by `normalizer`. Clean window `c` and its variants come
/// from stream `c`, so the corpus is independent of thread count.
pub fn build_patch_dataset(
    clean: &SeismicSection,
    plan: PatchPlan,
    width: usize,
    spec: &NoisyTraceSpec,
    normalizer: &Normalizer,
    seed: u64,
) -> Result<Vec<PatchSample>> {
    let a_max = section_amax(clean);
    if a_max == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    extract_patch(clean, 0, width)?;
    let starts = clean.n_traces() - width + 1;
    let height = clean.n_samples();
    let base = rng::derive_seed(seed, PATCH_TAG);

    let groups: Vec<Vec<PatchSample>> = (0..plan.num_clean)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(base, c as u64);
            let start = rng.gen_range(0..starts);
            let patch = extract_patch(clean, start, width).expect("start drawn in range");
            let mut target = patch.flatten();
            normalizer.normalize(&mut target);

            let mut group = Vec::with_capacity(1 + plan.noisy_per_clean);
            group.push(PatchSample {
                input: target.clone(),
                target: target.clone(),
                origin_trace: start,
                corrupted_trace: None,
            });
            for _ in 0..plan.noisy_per_clean {
                let trace = rng.gen_range(0..width);
                let mut noise = spec.draw(a_max, &mut rng).sample(height, clean.dt());
                normalizer.normalize(&mut noise);
                let mut input = target.clone();
                input[trace * height..(trace + 1) * height].copy_from_slice(&noise);
                group.push(PatchSample {
                    input,
                    target: target.clone(),
                    origin_trace: start,
                    corrupted_trace: Some(trace),
                });
            }
            group
        })
        .collect();
    Ok(groups.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seismic::synth::{synth_clean_section, EventSpec};

    fn section() -> SeismicSection {
        synth_clean_section(99, 42, 0.008, &EventSpec::default(), &mut rng::stream(11, 0)).unwrap()
    }

    #[test]
    fn full_width_patch_is_section() {
        let s = section();
        let p = extract_patch(&s, 0, 99).unwrap();
        assert_eq!(&p.values, s.amplitudes());
    }

    #[test]
    fn valid_start_range() {
        let s = section();
        let valid = (0..100).filter(|&st| extract_patch(&s, st, 9).is_ok()).count();
        assert_eq!(valid, 91);
        assert!(extract_patch(&s, 91, 9).is_err());
        assert!(extract_patch(&s, 0, 100).is_err());
    }

    #[test]
    fn patch_columns_match_section() {
        let s = section();
        let p = extract_patch(&s, 37, 9).unwrap();
        for j in 0..9 {
            assert_eq!(p.values.column(j), s.trace(37 + j));
        }
        let flat = p.flatten();
        assert_eq!(&flat[3 * 42..4 * 42], s.trace(40).as_slice());
        assert_eq!(Patch::unflatten(&flat, 9, 42, 37).unwrap(), p);
    }

    #[test]
    fn clean_only_corpus() {
        let s = section();
        let norm = Normalizer::from_section(&s).unwrap();
        let plan = PatchPlan::new(20, 0).unwrap();
        let ds = build_patch_dataset(&s, plan, 9, &NoisyTraceSpec::default(), &norm, 1).unwrap();
        assert_eq!(ds.len(), 20);
        for p in &ds {
            assert_eq!(p.input, p.target);
            assert!(p.corrupted_trace.is_none());
            assert!(p.target.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn noisy_variants_differ_in_exactly_one_trace_block() {
        let s = section();
        let norm = Normalizer::from_section(&s).unwrap();
        let plan = PatchPlan::new(30, 2).unwrap();
        let ds = build_patch_dataset(&s, plan, 9, &NoisyTraceSpec::default(), &norm, 2).unwrap();
        assert_eq!(ds.len(), plan.total_samples());
        for p in ds.iter().filter(|p| p.corrupted_trace.is_some()) {
            let differing: Vec<usize> = (0..9)
                .filter(|&j| p.input[j * 42..(j + 1) * 42] != p.target[j * 42..(j + 1) * 42])
                .collect();
            assert_eq!(differing, vec![p.corrupted_trace.unwrap()]);
        }
    }

    #[test]
    fn corpus_is_reproducible() {
        let s = section();
        let norm = Normalizer::from_section(&s).unwrap();
        let plan = PatchPlan::new(10, 2).unwrap();
        let a = build_patch_dataset(&s, plan, 9, &NoisyTraceSpec::default(), &norm, 5).unwrap();
        let b = build_patch_dataset(&s, plan, 9, &NoisyTraceSpec::default(), &norm, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_section_rejected() {
        let zero = SeismicSection::zeros(10, 4, 0.008).unwrap();
        let plan = PatchPlan::new(1, 1).unwrap();
        let r = build_patch_dataset(&zero, plan, 9, &NoisyTraceSpec::default(), &Normalizer::identity(), 0);
        assert!(matches!(r, Err(Error::ZeroAmplitude)));
        assert!(Normalizer::new(0.0).is_err());
        assert!(PatchPlan::new(0, 2).is_err());
    }

    #[test]
    fn full_scale_plan_count() {
        assert_eq!(PatchPlan::new(380_000, 2).unwrap().total_samples(), 1_140_000);
    }
}
