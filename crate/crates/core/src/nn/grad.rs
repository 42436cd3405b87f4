//! Backpropagation for squared-error loss, plus a central-difference oracle.

use super::activation::ActivationKind;
use super::model::{batch_layer_forward, mlp_forward, mse_loss, MlpModel};
use crate::error::{Error, Result};
use crate::matrix::{gemm, Matrix, View};

/// Gradient of one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Per-layer gradients, shaped like the model they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<LayerGradient>,
}

impl GradientBundle {
    pub fn zeros_like(model: &MlpModel) -> Self {
        GradientBundle {
            layers: model
                .layers()
                .iter()
                .map(|l| LayerGradient {
                    weights: Matrix::zeros(l.out_dim(), l.in_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    pub fn matches(&self, model: &MlpModel) -> bool {
        self.layers.len() == model.layers().len()
            && self.layers.iter().zip(model.layers()).all(|(g, l)| {
                g.weights.rows() == l.out_dim()
                    && g.weights.cols() == l.in_dim()
                    && g.bias.len() == l.out_dim()
            })
    }

    /// All entries, layer by layer, weights before bias.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|g| g.weights.as_slice().iter().chain(&g.bias).copied())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.flatten().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Loss and parameter gradients for one `(input, target)` pair.
pub fn backprop(model: &MlpModel, input: &[f64], target: &[f64]) -> Result<(f64, GradientBundle)> {
    let (output, cache) = mlp_forward(model, input)?;
    let loss = mse_loss(&output, target)?;

    let layers = model.layers();
    let mut grads = GradientBundle::zeros_like(model);
    let last = layers.len() - 1;
    let mut delta: Vec<f64> = output
        .iter()
        .zip(target)
        .zip(&cache.post[last])
        .map(|((o, t), &y)| (o - t) * layers[last].activation().derivative_from_output(y))
        .collect();

    for k in (0..layers.len()).rev() {
        let layer_input = if k == 0 { &cache.input } else { &cache.post[k - 1] };
        let g = &mut grads.layers[k];
        for (r, &d) in delta.iter().enumerate() {
            for (c, &x) in layer_input.iter().enumerate() {
                g.weights.set(r, c, d * x);
            }
        }
        g.bias.copy_from_slice(&delta);

        if k > 0 {
            let w = layers[k].weights();
            let act = layers[k - 1].activation();
            delta = (0..w.cols())
                .map(|c| {
                    let back: f64 = (0..w.rows()).map(|r| w.get(r, c) * delta[r]).sum();
                    back * act.derivative_from_output(cache.post[k - 1][c])
                })
                .collect();
        }
    }
    Ok((loss, grads))
}

/// Central-difference estimate of the gradient of the single-sample loss.
pub fn finite_diff_grad(
    model: &MlpModel,
    input: &[f64],
    target: &[f64],
    epsilon: f64,
) -> Result<GradientBundle> {
    if !(epsilon > 0.0) {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    let loss_at = |m: &MlpModel| -> Result<f64> {
        let (out, _) = mlp_forward(m, input)?;
        mse_loss(&out, target)
    };
    loss_at(model)?;

    let mut probe = model.clone();
    let mut grads = GradientBundle::zeros_like(model);
    for k in 0..model.layers().len() {
        let n_weights = model.layers()[k].weights().as_slice().len();
        let n_bias = model.layers()[k].bias().len();
        for idx in 0..n_weights + n_bias {
            let original = read_param(&probe, k, idx, n_weights);
            write_param(&mut probe, k, idx, n_weights, original + epsilon);
            let plus = loss_at(&probe)?;
            write_param(&mut probe, k, idx, n_weights, original - epsilon);
            let minus = loss_at(&probe)?;
            write_param(&mut probe, k, idx, n_weights, original);

            let d = (plus - minus) / (2.0 * epsilon);
            let g = &mut grads.layers[k];
            if idx < n_weights {
                g.weights.as_mut_slice()[idx] = d;
            } else {
                g.bias[idx - n_weights] = d;
            }
        }
    }
    Ok(grads)
}

fn read_param(model: &MlpModel, layer: usize, idx: usize, n_weights: usize) -> f64 {
    let l = &model.layers()[layer];
    if idx < n_weights {
        l.weights().as_slice()[idx]
    } else {
        l.bias()[idx - n_weights]
    }
}

fn write_param(model: &mut MlpModel, layer: usize, idx: usize, n_weights: usize, value: f64) {
    let (w, b) = model.layers_mut()[layer].params_mut();
    if idx < n_weights {
        w.as_mut_slice()[idx] = value;
    } else {
        b[idx - n_weights] = value;
    }
}

/// Reusable buffers for mini-batch gradient computation.
#[derive(Debug, Default)]
pub struct BatchWorkspace {
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl BatchWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Mean-over-batch gradient of the per-sample loss, written into `grads`.
    ///
    /// Returns the sum of per-sample losses. `inputs` and `targets` hold `batch`
    /// row-major samples. The result equals the average of [`backprop`] over
    /// the batch up to floating-point reassociation.
    pub fn gradient(
        &mut self,
        model: &MlpModel,
        inputs: &[f64],
        targets: &[f64],
        batch: usize,
        grads: &mut GradientBundle,
    ) -> Result<f64> {
        if inputs.len() != batch * model.input_dim() {
            return Err(Error::shape("batch input", batch * model.input_dim(), inputs.len()));
        }
        if targets.len() != batch * model.output_dim() {
            return Err(Error::shape("batch target", batch * model.output_dim(), targets.len()));
        }
        if !grads.matches(model) {
            return Err(Error::Config("gradient bundle does not match model".into()));
        }
        let layers = model.layers();

        self.activations.clear();
        for (k, layer) in layers.iter().enumerate() {
            let input = if k == 0 { inputs } else { &self.activations[k - 1] };
            let out = batch_layer_forward(layer, input, batch);
            self.activations.push(out);
        }

        let last = layers.len() - 1;
        let output = &self.activations[last];
        let mut loss_sum = 0.0;
        for (o, t) in output.chunks_exact(model.output_dim()).zip(targets.chunks_exact(model.output_dim())) {
            loss_sum += 0.5 * crate::matrix::squared_distance(o, t);
        }

        let out_act = layers[last].activation();
        self.delta.clear();
        self.delta.extend(output.iter().zip(targets).map(|(&o, &t)| {
            (o - t) * out_act.derivative_from_output(o)
        }));

        let scale = 1.0 / batch as f64;
        for k in (0..layers.len()).rev() {
            let layer = &layers[k];
            let (in_dim, out_dim) = (layer.in_dim(), layer.out_dim());
            let layer_input: &[f64] = if k == 0 { inputs } else { &self.activations[k - 1] };
            let g = &mut grads.layers[k];

            // dW = deltaᵀ · X / B
            gemm(
                scale,
                View::t(&self.delta, batch, out_dim),
                View::plain(layer_input, batch, in_dim),
                0.0,
                g.weights.as_mut_slice(),
            );
            g.bias.iter_mut().for_each(|b| *b = 0.0);
            for row in self.delta.chunks_exact(out_dim) {
                for (b, d) in g.bias.iter_mut().zip(row) {
                    *b += d;
                }
            }
            g.bias.iter_mut().for_each(|b| *b *= scale);

            if k > 0 {
                self.delta_prev.clear();
                self.delta_prev.resize(batch * in_dim, 0.0);
                gemm(
                    1.0,
                    View::plain(&self.delta, batch, out_dim),
                    View::plain(layer.weights().as_slice(), out_dim, in_dim),
                    0.0,
                    &mut self.delta_prev,
                );
                let act = layers[k - 1].activation();
                if act != ActivationKind::Linear {
                    for (d, &y) in self.delta_prev.iter_mut().zip(layer_input) {
                        *d *= act.derivative_from_output(y);
                    }
                }
                std::mem::swap(&mut self.delta, &mut self.delta_prev);
            }
        }
        Ok(loss_sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, DenseLayer};
    use rand::Rng;

    fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let model = MlpModel::init(&"3-4-3".parse().unwrap(), 1).unwrap();
        let x = [0.1, 0.2, 0.3];
        let (out, _) = mlp_forward(&model, &x).unwrap();
        let (loss, grads) = backprop(&model, &x, &out).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn single_linear_layer_closed_form() {
        let w = Matrix::from_vec(2, 3, vec![0.5, -1.0, 2.0, 0.0, 1.5, -0.5]).unwrap();
        let layer = DenseLayer::new(w, vec![0.1, -0.2], ActivationKind::Linear).unwrap();
        let model = MlpModel::new(vec![layer]).unwrap();
        let x = [1.0, 2.0, -1.0];
        let t = [0.0, 1.0];
        let (pred, _) = mlp_forward(&model, &x).unwrap();
        let resid: Vec<f64> = pred.iter().zip(&t).map(|(p, t)| p - t).collect();
        let (_, grads) = backprop(&model, &x, &t).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(grads.layers[0].weights.get(r, c), resid[r] * x[c]);
            }
        }
        assert_eq!(grads.layers[0].bias, resid);
    }

    #[test]
    fn finite_diff_rejects_nonpositive_epsilon() {
        let model = MlpModel::init(&"2-2".parse().unwrap(), 1).unwrap();
        assert!(finite_diff_grad(&model, &[0.0, 0.0], &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn finite_diff_zero_on_flat_loss() {
        let model = MlpModel::new(vec![DenseLayer::zeros(3, 2, ActivationKind::Linear).unwrap()]).unwrap();
        let grads = finite_diff_grad(&model, &[1.0, 2.0, 3.0], &[0.0, 0.0], 1e-6).unwrap();
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn batch_gradient_is_mean_of_sample_gradients() {
        let arch = Architecture::parse("4-5-3-4", Some("sigmoid,sigmoid,linear")).unwrap();
        let model = MlpModel::init(&arch, 11).unwrap();
        let mut rng = crate::rng::stream(5, 0);
        let batch = 6;
        let inputs = random_vec(&mut rng, batch * 4);
        let targets = random_vec(&mut rng, batch * 4);

        let mut expected = vec![0.0; model.parameter_count()];
        let mut expected_loss = 0.0;
        for (x, t) in inputs.chunks(4).zip(targets.chunks(4)) {
            let (loss, g) = backprop(&model, x, t).unwrap();
            expected_loss += loss;
            for (e, v) in expected.iter_mut().zip(g.flatten()) {
                *e += v / batch as f64;
            }
        }

        let mut grads = GradientBundle::zeros_like(&model);
        let loss = BatchWorkspace::new()
            .gradient(&model, &inputs, &targets, batch, &mut grads)
            .unwrap();
        assert!((loss - expected_loss).abs() < 1e-12);
        for (a, b) in grads.flatten().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn batch_gradient_rejects_bad_shapes() {
        let model = MlpModel::init(&"3-3".parse().unwrap(), 1).unwrap();
        let mut grads = GradientBundle::zeros_like(&model);
        let mut ws = BatchWorkspace::new();
        assert!(ws.gradient(&model, &[0.0; 5], &[0.0; 6], 2, &mut grads).is_err());
        assert!(ws.gradient(&model, &[0.0; 6], &[0.0; 5], 2, &mut grads).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn backprop_matches_central_differences(
            sizes in proptest::collection::vec(1usize..=6, 2..=4),
            sigmoid_mask in 0u8..8,
            seed in 0u64..1000,
        ) {
            let acts = (0..sizes.len() - 1)
                .map(|i| if sigmoid_mask >> i & 1 == 1 { ActivationKind::Sigmoid } else { ActivationKind::Linear })
                .collect();
            let model = MlpModel::init(&Architecture::new(sizes.clone(), acts).unwrap(), seed).unwrap();
            let mut rng = crate::rng::stream(seed, 1);
            let x = random_vec(&mut rng, sizes[0]);
            let y = random_vec(&mut rng, *sizes.last().unwrap());
            let (_, g) = backprop(&model, &x, &y).unwrap();
            let fd = finite_diff_grad(&model, &x, &y, 1e-6).unwrap();
            for (a, b) in g.flatten().iter().zip(fd.flatten()) {
                proptest::prop_assert!((a - b).abs() <= 1e-7 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }
}
