//! Shared helpers for the whitespace-separated text formats.
//!
//! Reals are written in Rust's shortest round-trip decimal form (`{:?}`), which
//! parses back to the identical `f64` bit pattern.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:?}");
    }
    out.push('\n');
}

pub fn parse_f64(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid number `{token}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value `{token}`")));
    }
    Ok(v)
}

pub fn parse_usize(token: &str, line: usize) -> Result<usize> {
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid count `{token}`")))
}

pub fn parse_row(text: &str, line: usize) -> Result<Vec<f64>> {
    text.split_whitespace().map(|t| parse_f64(t, line)).collect()
}

/// Line iterator yielding 1-based line numbers.
pub struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next line, or a parse error naming what was expected.
    pub fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(Error::parse(self.last + 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    /// Errors if any non-blank line remains.
    pub fn finish(mut self) -> Result<()> {
        for (i, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                return Err(Error::parse(i + 1, "trailing content"));
            }
        }
        Ok(())
    }
}

/// `key=value` lookup in a whitespace-separated header.
pub fn header_field<'a>(header: &'a str, key: &str, line: usize) -> Result<&'a str> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::parse(line, format!("header missing `{key}=`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn shortest_decimal_round_trips_bitwise(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back = parse_f64(&format_f64(v), 1).unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn header_lookup() {
        let h = "AUTONN-SECTION v1 traces=99 samples=42 dt=0.008";
        assert_eq!(header_field(h, "traces", 1).unwrap(), "99");
        assert_eq!(header_field(h, "dt", 1).unwrap(), "0.008");
        assert!(header_field(h, "n", 1).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(parse_f64("NaN", 3).is_err());
        assert!(parse_f64("inf", 3).is_err());
        assert!(matches!(parse_f64("1.x", 7), Err(Error::Parse { line: 7, .. })));
    }
}
