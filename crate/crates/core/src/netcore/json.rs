use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{ActivationKind, HiddenLayer, Mlp};
use crate::error::{Error, Result};

const FORMAT: &str = "swatnn-mlp";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    activation_logits: Vec<Vec<f64>>,
    neuron_mask: Vec<f64>,
    /// Argmax activation per neuron; informational.
    #[serde(default)]
    activations: Vec<ActivationKind>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpDoc {
    format: String,
    version: u32,
    input_dim: usize,
    output_dim: usize,
    activation_order: Vec<ActivationKind>,
    hidden_layers: Vec<LayerDoc>,
    output_weights: Vec<Vec<f64>>,
    output_biases: Vec<f64>,
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(what: &str, rows: Vec<Vec<f64>>, ncols: usize) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let mut flat = Vec::with_capacity(nrows * ncols);
    for (i, r) in rows.into_iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::format(
                "mlp json",
                format!("{what}: row {i} has {} entries, expected {ncols}", r.len()),
            ));
        }
        flat.extend(r);
    }
    Array2::from_shape_vec((nrows, ncols), flat).map_err(|e| Error::format("mlp json", e.to_string()))
}

pub fn mlp_to_json(mlp: &Mlp) -> String {
    let doc = MlpDoc {
        format: FORMAT.into(),
        version: VERSION,
        input_dim: mlp.input_dim,
        output_dim: mlp.output_dim,
        activation_order: ActivationKind::ALL.to_vec(),
        hidden_layers: mlp
            .layers
            .iter()
            .map(|l| LayerDoc {
                weights: rows(&l.weights),
                biases: l.biases.to_vec(),
                activation_logits: rows(&l.act_logits),
                neuron_mask: l.neuron_mask.to_vec(),
                activations: (0..l.width()).map(|h| l.activation(h)).collect(),
            })
            .collect(),
        output_weights: rows(&mlp.output_weights),
        output_biases: mlp.output_biases.to_vec(),
    };
    serde_json::to_string_pretty(&doc).expect("serializing plain data")
}

/// Parses and validates an MLP document.
pub fn mlp_from_json(text: &str) -> Result<Mlp> {
    let doc: MlpDoc = serde_json::from_str(text)?;
    if doc.format != FORMAT {
        return Err(Error::format("mlp json", format!("unexpected format tag `{}`", doc.format)));
    }
    if doc.version != VERSION {
        return Err(Error::format("mlp json", format!("unsupported version {}", doc.version)));
    }
    if doc.activation_order != ActivationKind::ALL {
        return Err(Error::format("mlp json", "activation order differs from leaky_relu, tanh, sigmoid"));
    }
    let mut fan_in = doc.input_dim;
    let mut layers = Vec::with_capacity(doc.hidden_layers.len());
    for (j, l) in doc.hidden_layers.into_iter().enumerate() {
        let n = l.biases.len();
        if l.weights.len() != fan_in {
            return Err(Error::format(
                "mlp json",
                format!("layer {j}: {} weight rows, expected {fan_in}", l.weights.len()),
            ));
        }
        if l.activation_logits.len() != n {
            return Err(Error::format("mlp json", format!("layer {j}: logits row count")));
        }
        layers.push(HiddenLayer {
            weights: matrix("weights", l.weights, n)?,
            biases: Array1::from(l.biases),
            act_logits: matrix("activation_logits", l.activation_logits, ActivationKind::COUNT)?,
            neuron_mask: Array1::from(l.neuron_mask),
        });
        fan_in = n;
    }
    if doc.output_weights.len() != fan_in {
        return Err(Error::format("mlp json", "output weight rows"));
    }
    let output_weights = matrix("output_weights", doc.output_weights, doc.output_dim)?;
    Mlp::new(
        doc.input_dim,
        doc.output_dim,
        layers,
        output_weights,
        Array1::from(doc.output_biases),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn round_trip_preserves_values() {
        let layer = HiddenLayer {
            weights: array![[0.1 + 0.2, -1e-17], [3.0e300, 1.0 / 3.0]],
            biases: array![0.5, -0.25],
            act_logits: array![[1.0, 0.0, 0.0], [0.2, 0.7, -4.4]],
            neuron_mask: array![1.0, 0.123456789],
        };
        let mlp = Mlp::new(2, 1, vec![layer], array![[2.0], [-1.0]], array![0.3]).unwrap();
        let back = mlp_from_json(&mlp_to_json(&mlp)).unwrap();
        assert_eq!(back, mlp);
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(mlp_from_json("{}").is_err());
        assert!(mlp_from_json("not json").is_err());
        let ok = mlp_to_json(
            &Mlp::new(1, 1, vec![], array![[1.0]], array![0.0]).unwrap(),
        );
        assert!(mlp_from_json(&ok).is_ok());
        assert!(mlp_from_json(&ok.replace("swatnn-mlp", "other")).is_err());
        assert!(mlp_from_json(&ok.replace("\"input_dim\": 1", "\"input_dim\": 2")).is_err());
    }
}
