//! Text model format.
//!
//! ```text
//! AUTONN-MODEL v1
//! <layer count>
//! layer <in> <out> <sigmoid|linear>
//! <out rows of `in` weights>
//! <one row of `out` biases>
//! ...
//! ```
//!
//! Values use shortest round-trip decimal, so loading a saved model restores
//! every parameter bit for bit.

use std::fs;
use std::path::Path;

use super::activation::ActivationKind;
use super::layer::DenseLayer;
use super::model::MlpModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::textio::{parse_row, parse_usize, push_row, Lines};

pub const MODEL_MAGIC: &str = "AUTONN-MODEL v1";

pub fn model_to_string(model: &MlpModel) -> String {
    let mut out = String::new();
    out.push_str(MODEL_MAGIC);
    out.push('\n');
    out.push_str(&format!("{}\n", model.layers().len()));
    for layer in model.layers() {
        out.push_str(&format!(
            "layer {} {} {}\n",
            layer.in_dim(),
            layer.out_dim(),
            layer.activation()
        ));
        for r in 0..layer.out_dim() {
            push_row(&mut out, layer.weights().row(r));
        }
        push_row(&mut out, layer.bias());
    }
    out
}

pub fn model_from_str(text: &str) -> Result<MlpModel> {
    let mut lines = Lines::new(text);
    let (n, magic) = lines.expect("model header")?;
    if magic.trim() != MODEL_MAGIC {
        return Err(Error::parse(n, format!("expected `{MODEL_MAGIC}`")));
    }
    let (n, count) = lines.expect("layer count")?;
    let count = parse_usize(count.trim(), n)?;
    if count == 0 {
        return Err(Error::parse(n, "layer count must be at least 1"));
    }

    let mut layers = Vec::with_capacity(count);
    for k in 0..count {
        let (n, head) = lines.expect("layer header")?;
        let fields: Vec<&str> = head.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "layer" {
            return Err(Error::parse(n, "expected `layer <in> <out> <activation>`"));
        }
        let in_dim = parse_usize(fields[1], n)?;
        let out_dim = parse_usize(fields[2], n)?;
        let activation: ActivationKind = fields[3]
            .parse()
            .map_err(|_| Error::parse(n, format!("unknown activation `{}`", fields[3])))?;
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::LayerValidation {
                layer: k,
                message: "dimensions must be positive".into(),
            });
        }

        let mut weights = Vec::with_capacity(in_dim * out_dim);
        for r in 0..out_dim {
            let (n, row) = lines.expect("weight row")?;
            let row = parse_row(row, n)?;
            if row.len() != in_dim {
                return Err(Error::LayerValidation {
                    layer: k,
                    message: format!("weight row {r} has {} values, expected {in_dim}", row.len()),
                });
            }
            weights.extend(row);
        }
        let (n, bias) = lines.expect("bias row")?;
        let bias = parse_row(bias, n)?;
        if bias.len() != out_dim {
            return Err(Error::LayerValidation {
                layer: k,
                message: format!("bias has {} values but weights have {out_dim} rows", bias.len()),
            });
        }
        let weights = Matrix::from_vec(out_dim, in_dim, weights)?;
        layers.push(DenseLayer::new(weights, bias, activation)?);
    }
    lines.finish()?;
    MlpModel::new(layers)
}

pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| Error::file(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    model_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{mlp_forward, Architecture};

    #[test]
    fn round_trip_preserves_outputs_bitwise() {
        let arch = Architecture::parse("5-7-3-5", Some("sigmoid,linear,sigmoid")).unwrap();
        let model = MlpModel::init(&arch, 77).unwrap();
        let back = model_from_str(&model_to_string(&model)).unwrap();
        assert_eq!(back, model);
        let mut rng = crate::rng::stream(3, 3);
        for _ in 0..100 {
            let x: Vec<f64> = (0..5).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect();
            let a = mlp_forward(&model, &x).unwrap().0;
            let b = mlp_forward(&back, &x).unwrap().0;
            assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let model = MlpModel::init(&"3-4-3".parse().unwrap(), 1).unwrap();
        let text = model_to_string(&model);
        let cut: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(matches!(model_from_str(&cut), Err(Error::Parse { .. })));
    }

    #[test]
    fn bias_length_mismatch_names_layer() {
        let text = "AUTONN-MODEL v1\n2\nlayer 1 1 linear\n1.0\n0.0\nlayer 1 2 linear\n1.0\n2.0\n0.0\n";
        let err = model_from_str(text).unwrap_err();
        assert!(matches!(err, Error::LayerValidation { layer: 1, .. }), "{err}");
    }

    #[test]
    fn bad_number_reports_line() {
        let text = "AUTONN-MODEL v1\n1\nlayer 2 1 sigmoid\n1.0 abc\n0.0\n";
        assert!(matches!(model_from_str(text), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn wrong_magic_rejected() {
        assert!(matches!(model_from_str("AUTONN-MODEL v2\n1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn inconsistent_chain_rejected() {
        let text = "AUTONN-MODEL v1\n2\nlayer 1 1 linear\n1.0\n0.0\nlayer 2 1 linear\n1.0 1.0\n0.0\n";
        assert!(matches!(model_from_str(text), Err(Error::LayerValidation { layer: 1, .. })));
    }
}
