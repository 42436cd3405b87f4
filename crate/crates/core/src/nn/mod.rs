//! Dense multilayer perceptron engine.
//!
//! Forward passes, squared-error loss, backpropagation, a central-difference
//! gradient oracle, momentum SGD and the text model format.

mod activation;
mod grad;
mod io;
mod layer;
mod model;
mod sgd;

pub use activation::{sigmoid, ActivationKind};
pub use grad::{backprop, finite_diff_grad, BatchWorkspace, GradientBundle, LayerGradient};
pub use io::{load_model, model_from_str, model_to_string, save_model, MODEL_MAGIC};
pub use layer::{layer_forward, DenseLayer};
pub use model::{mlp_forward, mse_loss, Architecture, ForwardCache, IdentityPredictor, MlpModel, Predictor};
pub use sgd::sgd_step;
