use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Largest `f64` strictly below 1.
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;
const EXP_CLAMP: f64 = 700.0;

/// Logistic sigmoid, evaluated without overflow.
///
/// The result always lies strictly inside `(0, 1)`: saturated positive inputs
/// return the largest double below one instead of rounding up to `1.0`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-EXP_CLAMP, EXP_CLAMP);
    if x >= 0.0 {
        (1.0 / (1.0 + (-x).exp())).min(ONE_BELOW)
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Sigmoid,
    Linear,
}

impl ActivationKind {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Linear => x,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    pub fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => out * (1.0 - out),
            ActivationKind::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Linear => "linear",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "linear" => Ok(ActivationKind::Linear),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}
