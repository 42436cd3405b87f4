use std::fmt;
use std::str::FromStr;

use super::activation::ActivationKind;
use super::layer::{layer_forward, DenseLayer};
use crate::error::{Error, Result};
use crate::matrix::{gemm, View};
use crate::rng;

/// A feed-forward stack of dense layers.
///
/// For an autoassociative network the leading layers play the encoder and the
/// trailing layers the decoder; a trained model is the learnt denoising map.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
}

impl MlpModel {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("a model needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::LayerValidation {
                    layer: k + 1,
                    message: format!(
                        "input dimension {} does not match previous output {}",
                        pair[1].in_dim(),
                        pair[0].out_dim()
                    ),
                });
            }
        }
        Ok(MlpModel { layers })
    }

    /// Glorot-initialized model for `arch`, seeded.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(rng::derive_seed(seed, 0x1417), 0);
        let layers = arch
            .sizes
            .windows(2)
            .zip(&arch.activations)
            .map(|(dims, &act)| DenseLayer::glorot(dims[0], dims[1], act, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        MlpModel::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn architecture(&self) -> Architecture {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(DenseLayer::out_dim));
        Architecture {
            sizes,
            activations: self.layers.iter().map(DenseLayer::activation).collect(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.in_dim() * l.out_dim() + l.out_dim()).sum()
    }

    /// Forward pass over `batch` row-major samples.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
        if inputs.len() != batch * self.input_dim() {
            return Err(Error::shape("batch input", batch * self.input_dim(), inputs.len()));
        }
        let mut current = inputs.to_vec();
        for layer in &self.layers {
            current = batch_layer_forward(layer, &current, batch);
        }
        Ok(current)
    }
}

/// `act(X·Wᵀ + b)` for a row-major batch `X`.
pub(crate) fn batch_layer_forward(layer: &DenseLayer, inputs: &[f64], batch: usize) -> Vec<f64> {
    let (in_dim, out_dim) = (layer.in_dim(), layer.out_dim());
    let mut out = vec![0.0; batch * out_dim];
    for row in out.chunks_exact_mut(out_dim) {
        row.copy_from_slice(layer.bias());
    }
    gemm(
        1.0,
        View::plain(inputs, batch, in_dim),
        View::t(layer.weights().as_slice(), out_dim, in_dim),
        1.0,
        &mut out,
    );
    if layer.activation() != ActivationKind::Linear {
        let act = layer.activation();
        out.iter_mut().for_each(|v| *v = act.apply(*v));
    }
    out
}

/// Layer sizes and activations, e.g. `20-20-20-20` with `sigmoid,sigmoid,linear`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub sizes: Vec<usize>,
    pub activations: Vec<ActivationKind>,
}

impl Architecture {
    /// Sigmoid hidden layers and a linear output layer.
    pub fn autoassociative(sizes: Vec<usize>) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Config("need at least input and output sizes".into()));
        }
        let n = sizes.len() - 1;
        let mut activations = vec![ActivationKind::Sigmoid; n];
        activations[n - 1] = ActivationKind::Linear;
        Architecture::new(sizes, activations)
    }

    pub fn new(sizes: Vec<usize>, activations: Vec<ActivationKind>) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(Error::Config(format!(
                "{} sizes need {} activations, got {}",
                sizes.len(),
                sizes.len().saturating_sub(1),
                activations.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        Ok(Architecture { sizes, activations })
    }

    /// Parses `"a-b-c"` sizes; activations default to sigmoid hidden / linear output.
    pub fn parse(sizes: &str, activations: Option<&str>) -> Result<Self> {
        let sizes = sizes
            .split(['-', ','])
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad layer size `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        match activations {
            None => Architecture::autoassociative(sizes),
            Some(acts) => {
                let acts = acts.split(',').map(str::parse).collect::<Result<Vec<_>>>()?;
                Architecture::new(sizes, acts)
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.sizes.iter().map(usize::to_string).collect();
        let acts: Vec<&str> = self.activations.iter().map(|a| a.name()).collect();
        write!(f, "{} ({})", sizes.join("-"), acts.join(","))
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::parse(s, None)
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&self.input)
    }
}

pub fn mlp_forward(model: &MlpModel, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    let mut cache = ForwardCache {
        input: input.to_vec(),
        pre: Vec::with_capacity(model.layers.len()),
        post: Vec::with_capacity(model.layers.len()),
    };
    for layer in &model.layers {
        let (pre, out) = layer_forward(layer, cache.output())?;
        cache.pre.push(pre);
        cache.post.push(out);
    }
    Ok((cache.output().to_vec(), cache))
}

/// Half the sum of squared residuals.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::shape("loss target", pred.len(), target.len()));
    }
    Ok(0.5 * crate::matrix::squared_distance(pred, target))
}

/// Anything that maps a flattened sample to a same-sized reconstruction.
pub trait Predictor: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;

    /// Predicts `batch` row-major samples at once.
    fn predict_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>>;

    fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.predict_batch(input, 1)
    }
}

impl Predictor for MlpModel {
    fn input_dim(&self) -> usize {
        MlpModel::input_dim(self)
    }

    fn output_dim(&self) -> usize {
        MlpModel::output_dim(self)
    }

    fn predict_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.forward_batch(inputs, batch)
    }
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy)]
pub struct IdentityPredictor {
    pub dim: usize,
}

impl Predictor for IdentityPredictor {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn predict_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<f64>> {
        if inputs.len() != batch * self.dim {
            return Err(Error::shape("batch input", batch * self.dim, inputs.len()));
        }
        Ok(inputs.to_vec())
    }
}
