use rand::Rng;

use super::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Affine map followed by an elementwise activation: `act(W·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Matrix,
    bias: Vec<f64>,
    activation: ActivationKind,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: ActivationKind) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::shape("layer bias", weights.rows(), bias.len()));
        }
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: ActivationKind) -> Result<Self> {
        DenseLayer::new(Matrix::zeros(out_dim, in_dim), vec![0.0; out_dim], activation)
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: ActivationKind,
        rng: &mut R,
    ) -> Result<Self> {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = Matrix::from_fn(out_dim, in_dim, |_, _| rng.gen_range(-limit..=limit));
        DenseLayer::new(weights, vec![0.0; out_dim], activation)
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub(crate) fn params_mut(&mut self) -> (&mut Matrix, &mut Vec<f64>) {
        (&mut self.weights, &mut self.bias)
    }
}

/// Returns `(pre, out)` with `pre = W·input + b` and `out = act(pre)`.
pub fn layer_forward(layer: &DenseLayer, input: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if input.len() != layer.in_dim() {
        return Err(Error::shape("layer input", layer.in_dim(), input.len()));
    }
    let mut pre = layer.weights.mul_vec(input)?;
    for (p, b) in pre.iter_mut().zip(&layer.bias) {
        *p += b;
    }
    let act = layer.activation;
    let out = pre.iter().map(|&p| act.apply(p)).collect();
    Ok((pre, out))
}
