use super::grad::GradientBundle;
use super::model::MlpModel;
use crate::error::{Error, Result};

/// One gradient-descent update with heavy-ball momentum.
///
/// `velocity ← momentum·velocity + grads`, then `θ ← θ − learning_rate·velocity`.
/// With `momentum = 0` this is plain gradient descent.
pub fn sgd_step(
    model: &mut MlpModel,
    grads: &GradientBundle,
    learning_rate: f64,
    momentum: f64,
    velocity: &mut GradientBundle,
) -> Result<()> {
    if !(learning_rate > 0.0) {
        return Err(Error::Config(format!("learning rate must be positive, got {learning_rate}")));
    }
    if !(0.0..1.0).contains(&momentum) {
        return Err(Error::Config(format!("momentum must be in [0, 1), got {momentum}")));
    }
    if !grads.matches(model) || !velocity.matches(model) {
        return Err(Error::Config("gradient shapes do not match the model".into()));
    }

    for ((layer, g), v) in model
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut velocity.layers)
    {
        let (weights, bias) = layer.params_mut();
        update(weights.as_mut_slice(), g.weights.as_slice(), v.weights.as_mut_slice(), learning_rate, momentum);
        update(bias, &g.bias, &mut v.bias, learning_rate, momentum);
    }
    Ok(())
}

#[inline]
fn update(params: &mut [f64], grads: &[f64], velocity: &mut [f64], lr: f64, momentum: f64) {
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity) {
        *v = momentum * *v + g;
        *p -= lr * *v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{mlp_forward, mse_loss, backprop};

    fn fill(grads: &mut GradientBundle, value: f64) {
        for g in &mut grads.layers {
            g.weights.as_mut_slice().iter_mut().for_each(|v| *v = value);
            g.bias.iter_mut().for_each(|v| *v = value);
        }
    }

    fn params(model: &MlpModel) -> Vec<f64> {
        model
            .layers()
            .iter()
            .flat_map(|l| l.weights().as_slice().iter().chain(l.bias()).copied())
            .collect()
    }

    #[test]
    fn zero_gradient_leaves_model_unchanged() {
        let mut model = MlpModel::init(&"3-4-3".parse().unwrap(), 2).unwrap();
        let before = model.clone();
        let grads = GradientBundle::zeros_like(&model);
        let mut velocity = GradientBundle::zeros_like(&model);
        sgd_step(&mut model, &grads, 0.5, 0.9, &mut velocity).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn unit_rate_subtracts_gradient() {
        let mut model = MlpModel::init(&"2-3".parse().unwrap(), 2).unwrap();
        let before = params(&model);
        let mut grads = GradientBundle::zeros_like(&model);
        fill(&mut grads, 0.125);
        let mut velocity = GradientBundle::zeros_like(&model);
        sgd_step(&mut model, &grads, 1.0, 0.0, &mut velocity).unwrap();
        for (a, b) in params(&model).iter().zip(&before) {
            assert_eq!(*a, b - 0.125);
        }
    }

    #[test]
    fn momentum_two_step_unroll() {
        // v1 = g, v2 = 0.9 g + g; total = lr (g + 1.9 g)
        let mut model = MlpModel::init(&"2-2".parse().unwrap(), 4).unwrap();
        let before = params(&model);
        let mut grads = GradientBundle::zeros_like(&model);
        fill(&mut grads, 0.5);
        let mut velocity = GradientBundle::zeros_like(&model);
        let lr = 0.1;
        sgd_step(&mut model, &grads, lr, 0.9, &mut velocity).unwrap();
        sgd_step(&mut model, &grads, lr, 0.9, &mut velocity).unwrap();
        for (a, b) in params(&model).iter().zip(&before) {
            assert!(((b - a) - lr * (0.5 + 1.9 * 0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let mut model = MlpModel::init(&"2-2".parse().unwrap(), 4).unwrap();
        let grads = GradientBundle::zeros_like(&model);
        let mut velocity = GradientBundle::zeros_like(&model);
        assert!(sgd_step(&mut model, &grads, 0.0, 0.0, &mut velocity).is_err());
        assert!(sgd_step(&mut model, &grads, 0.1, 1.0, &mut velocity).is_err());
        let other = MlpModel::init(&"2-3".parse().unwrap(), 4).unwrap();
        let wrong = GradientBundle::zeros_like(&other);
        assert!(sgd_step(&mut model, &wrong, 0.1, 0.0, &mut velocity).is_err());
    }

    #[test]
    fn small_step_does_not_increase_loss() {
        let mut model = MlpModel::init(&"3-5-3".parse().unwrap(), 8).unwrap();
        let x = [0.2, -0.4, 0.9];
        let t = [1.0, 0.0, -1.0];
        let loss0 = mse_loss(&mlp_forward(&model, &x).unwrap().0, &t).unwrap();
        let (_, g) = backprop(&model, &x, &t).unwrap();
        let mut velocity = GradientBundle::zeros_like(&model);
        sgd_step(&mut model, &g, 1e-4, 0.0, &mut velocity).unwrap();
        let loss1 = mse_loss(&mlp_forward(&model, &x).unwrap().0, &t).unwrap();
        assert!(loss1 <= loss0 + 1e-12);
    }
}
