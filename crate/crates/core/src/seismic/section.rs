use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::textio::{format_f64, header_field, parse_f64, parse_usize, push_row, Lines};

/// A 2D seismic section: `n_samples` rows (time) by `n_traces` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SeismicSection {
    dt: f64,
    amplitudes: Matrix,
}

impl SeismicSection {
    pub fn new(amplitudes: Matrix, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("sampling interval must be positive, got {dt}")));
        }
        if amplitudes.rows() == 0 || amplitudes.cols() == 0 {
            return Err(Error::Config("section must have at least one trace and sample".into()));
        }
        if !amplitudes.is_finite() {
            return Err(Error::Config("section amplitudes must be finite".into()));
        }
        Ok(SeismicSection { dt, amplitudes })
    }

    pub fn zeros(n_traces: usize, n_samples: usize, dt: f64) -> Result<Self> {
        SeismicSection::new(Matrix::zeros(n_samples, n_traces), dt)
    }

    pub fn n_traces(&self) -> usize {
        self.amplitudes.cols()
    }

    pub fn n_samples(&self) -> usize {
        self.amplitudes.rows()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn amplitudes(&self) -> &Matrix {
        &self.amplitudes
    }

    pub fn trace(&self, index: usize) -> Vec<f64> {
        self.amplitudes.column(index)
    }

    pub(crate) fn set_trace(&mut self, index: usize, values: &[f64]) {
        self.amplitudes.set_column(index, values);
    }

    pub fn same_dims(&self, other: &SeismicSection) -> bool {
        self.amplitudes.same_shape(&other.amplitudes)
    }

    /// Root-mean-square amplitude over all entries.
    pub fn rms(&self) -> f64 {
        let s = self.amplitudes.as_slice();
        (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt()
    }
}

/// Largest absolute amplitude; zero for an all-zero section.
pub fn section_amax(section: &SeismicSection) -> f64 {
    section
        .amplitudes
        .as_slice()
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// On-disk section encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionFormat {
    Text,
    Binary,
}

impl SectionFormat {
    /// `.bin` and `.asec` files are binary; anything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("asec") => SectionFormat::Binary,
            _ => SectionFormat::Text,
        }
    }
}

pub const SECTION_TEXT_MAGIC: &str = "AUTONN-SECTION v1";
pub const SECTION_BINARY_MAGIC: &[u8; 6] = b"ASEC1\0";
const BINARY_HEADER_LEN: usize = 6 + 4 + 4 + 8;

pub fn section_to_text(section: &SeismicSection) -> String {
    let mut out = format!(
        "{SECTION_TEXT_MAGIC} traces={} samples={} dt={}\n",
        section.n_traces(),
        section.n_samples(),
        format_f64(section.dt)
    );
    for r in 0..section.n_samples() {
        push_row(&mut out, section.amplitudes.row(r));
    }
    out
}

pub fn section_from_text(text: &str) -> Result<SeismicSection> {
    let mut lines = Lines::new(text);
    let (ln, header) = lines.expect("section header")?;
    if !header.starts_with(SECTION_TEXT_MAGIC) {
        return Err(Error::parse(ln, format!("expected `{SECTION_TEXT_MAGIC}`")));
    }
    let traces = parse_usize(header_field(header, "traces", ln)?, ln)?;
    let samples = parse_usize(header_field(header, "samples", ln)?, ln)?;
    let dt = parse_f64(header_field(header, "dt", ln)?, ln)?;

    let mut data = Vec::with_capacity(traces * samples);
    for row in 0..samples {
        let (ln, line) = lines.expect("amplitude row")?;
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != traces {
            return Err(Error::parse(
                ln,
                format!("row {row} has {} values, expected {traces}", values.len()),
            ));
        }
        for v in values {
            data.push(parse_f64(v, ln)?);
        }
    }
    lines.finish()?;
    SeismicSection::new(Matrix::from_vec(samples, traces, data)?, dt)
}

pub fn section_to_binary(section: &SeismicSection) -> Vec<u8> {
    let mut out = Vec::with_capacity(BINARY_HEADER_LEN + 8 * section.amplitudes.as_slice().len());
    out.extend_from_slice(SECTION_BINARY_MAGIC);
    out.extend_from_slice(&(section.n_traces() as u32).to_le_bytes());
    out.extend_from_slice(&(section.n_samples() as u32).to_le_bytes());
    out.extend_from_slice(&section.dt.to_le_bytes());
    for v in section.amplitudes.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn section_from_binary(bytes: &[u8]) -> Result<SeismicSection> {
    if bytes.len() < 6 || &bytes[..6] != SECTION_BINARY_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "missing ASEC1 magic".into(),
        });
    }
    if bytes.len() < BINARY_HEADER_LEN {
        return Err(Error::Format {
            offset: bytes.len(),
            message: "truncated header".into(),
        });
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let f64_at = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let traces = u32_at(6);
    let samples = u32_at(10);
    let dt = f64_at(14);

    let expected = BINARY_HEADER_LEN + 8 * traces * samples;
    if bytes.len() != expected {
        return Err(Error::Format {
            offset: bytes.len().min(expected),
            message: format!("expected {expected} bytes for {traces}x{samples} section, found {}", bytes.len()),
        });
    }
    let data: Vec<f64> = (0..traces * samples)
        .map(|i| f64_at(BINARY_HEADER_LEN + 8 * i))
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format {
            offset: BINARY_HEADER_LEN + 8 * i,
            message: "non-finite amplitude".into(),
        });
    }
    SeismicSection::new(Matrix::from_vec(samples, traces, data)?, dt).map_err(|e| Error::Format {
        offset: 14,
        message: e.to_string(),
    })
}

pub fn save_section(section: &SeismicSection, path: impl AsRef<Path>, format: SectionFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        SectionFormat::Text => section_to_text(section).into_bytes(),
        SectionFormat::Binary => section_to_binary(section),
    };
    fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

/// Loads a section; `None` sniffs the format from the leading magic bytes.
pub fn load_section(path: impl AsRef<Path>, format: Option<SectionFormat>) -> Result<SeismicSection> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    let format = format.unwrap_or(if bytes.starts_with(SECTION_BINARY_MAGIC) {
        SectionFormat::Binary
    } else {
        SectionFormat::Text
    });
    match format {
        SectionFormat::Binary => section_from_binary(&bytes),
        SectionFormat::Text => {
            let text = String::from_utf8(bytes).map_err(|e| Error::Format {
                offset: e.utf8_error().valid_up_to(),
                message: "section text is not UTF-8".into(),
            })?;
            section_from_text(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_section() -> SeismicSection {
        let m = Matrix::from_fn(4, 3, |r, c| ((r * 3 + c) as f64 * 0.731).sin() * 1e-3 - 0.1 * c as f64);
        SeismicSection::new(m, 0.008).unwrap()
    }

    #[test]
    fn amax_examples() {
        assert_eq!(section_amax(&SeismicSection::zeros(3, 2, 0.004).unwrap()), 0.0);
        let single = SeismicSection::new(Matrix::from_vec(1, 1, vec![-3.5]).unwrap(), 1.0).unwrap();
        assert_eq!(section_amax(&single), 3.5);
    }

    #[test]
    fn text_and_binary_round_trip() {
        let s = sample_section();
        let text = section_to_text(&s);
        assert!(text.starts_with("AUTONN-SECTION v1 traces=3 samples=4 dt=0.008\n"));
        let back = section_from_text(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(section_to_text(&back), text);

        let bin = section_to_binary(&s);
        let back = section_from_binary(&bin).unwrap();
        assert_eq!(back, s);
        assert_eq!(section_to_binary(&back), bin);
    }

    #[test]
    fn ragged_text_row_is_named() {
        let text = "AUTONN-SECTION v1 traces=2 samples=2 dt=0.008\n1 2\n3\n";
        let err = section_from_text(text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn missing_rows_are_reported() {
        let text = "AUTONN-SECTION v1 traces=2 samples=3 dt=0.008\n1 2\n3 4\n";
        assert!(matches!(section_from_text(text), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let mut bin = section_to_binary(&sample_section());
        bin[0] = b'X';
        assert!(matches!(section_from_binary(&bin), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn truncated_binary_reports_offset() {
        let bin = section_to_binary(&sample_section());
        let err = section_from_binary(&bin[..bin.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn invalid_dt_rejected() {
        assert!(SeismicSection::zeros(2, 2, 0.0).is_err());
        assert!(section_from_text("AUTONN-SECTION v1 traces=1 samples=1 dt=-1\n0\n").is_err());
    }
}
