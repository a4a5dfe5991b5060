use std::sync::Arc;

use ndarray::{Array1, Array2};
use swatnn_autograd::{Elementwise, Graph, Var};

use super::{argmax_activation, sigmoid, ActivationKind, EvalConfig, HiddenLayer, MaskMode, Mlp};
use crate::error::{Error, Result};

/// Soft neuron gate as a differentiable elementwise function.
pub struct SoftGate {
    pub threshold: f64,
    pub sharpness: f64,
}

impl Elementwise for SoftGate {
    fn apply(&self, m: f64) -> f64 {
        if m == 0.0 || m == 1.0 {
            m
        } else {
            sigmoid(self.sharpness * (m - self.threshold))
        }
    }

    fn derivative(&self, m: f64, y: f64) -> f64 {
        if m == 0.0 || m == 1.0 {
            0.0
        } else {
            self.sharpness * y * (1.0 - y)
        }
    }
}

/// Graph handles for one hidden layer. Row-shaped quantities are `1 × n`.
#[derive(Clone, Copy, Debug)]
pub struct LayerVars {
    pub weights: Var,
    pub biases: Var,
    pub act_logits: Var,
    pub neuron_mask: Var,
}

/// An [`Mlp`] whose parameters live on a [`Graph`].
#[derive(Clone, Debug)]
pub struct MlpVars {
    pub input_dim: usize,
    pub output_dim: usize,
    pub layers: Vec<LayerVars>,
    pub output_weights: Var,
    pub output_biases: Var,
}

fn row(v: &Array1<f64>) -> Array2<f64> {
    v.clone().insert_axis(ndarray::Axis(0))
}

impl MlpVars {
    fn from_mlp(g: &Graph, mlp: &Mlp, trainable: bool) -> Self {
        let leaf = |t: Array2<f64>| if trainable { g.variable(t) } else { g.constant(t) };
        let layers = mlp
            .layers
            .iter()
            .map(|l| LayerVars {
                weights: leaf(l.weights.clone()),
                biases: leaf(row(&l.biases)),
                act_logits: leaf(l.act_logits.clone()),
                neuron_mask: leaf(row(&l.neuron_mask)),
            })
            .collect();
        MlpVars {
            input_dim: mlp.input_dim,
            output_dim: mlp.output_dim,
            layers,
            output_weights: leaf(mlp.output_weights.clone()),
            output_biases: leaf(row(&mlp.output_biases)),
        }
    }

    /// Every parameter becomes a trainable leaf.
    pub fn variables(g: &Graph, mlp: &Mlp) -> Self {
        Self::from_mlp(g, mlp, true)
    }

    pub fn constants(g: &Graph, mlp: &Mlp) -> Self {
        Self::from_mlp(g, mlp, false)
    }

    /// Reads the current node values back into an [`Mlp`]. Masks are clamped
    /// into `[0, 1]`.
    pub fn to_mlp(&self, g: &Graph) -> Result<Mlp> {
        let flat = |v: Var| -> Array1<f64> { g.value(v).row(0).to_owned() };
        let layers = self
            .layers
            .iter()
            .map(|l| HiddenLayer {
                weights: (*g.value(l.weights)).clone(),
                biases: flat(l.biases),
                act_logits: (*g.value(l.act_logits)).clone(),
                neuron_mask: flat(l.neuron_mask).mapv(|m| m.clamp(0.0, 1.0)),
            })
            .collect();
        Mlp::new(
            self.input_dim,
            self.output_dim,
            layers,
            (*g.value(self.output_weights)).clone(),
            flat(self.output_biases),
        )
    }

    /// Every weight matrix handle, hidden layers first.
    pub fn weight_vars(&self) -> Vec<Var> {
        self.layers
            .iter()
            .map(|l| l.weights)
            .chain(std::iter::once(self.output_weights))
            .collect()
    }
}

/// Differentiable counterpart of [`super::eval_mlp`].
///
/// In soft mode the result is differentiable with respect to every
/// parameter; in hard mode activations and gates are constants derived from
/// the current logits and masks.
pub fn eval_graph(g: &Graph, mlp: &MlpVars, xs: Var, cfg: &EvalConfig) -> Result<Var> {
    if g.shape(xs).1 != mlp.input_dim {
        return Err(Error::Shape(format!(
            "inputs have {} columns, network expects {}",
            g.shape(xs).1,
            mlp.input_dim
        )));
    }
    let mut h = xs;
    for layer in &mlp.layers {
        let pre = g.linear(h, layer.weights, layer.biases);
        let n = g.shape(layer.biases).1;
        let (alpha, gate) = match cfg.mask_mode {
            MaskMode::Soft => {
                let alpha = g.softmax_rows(g.scale(layer.act_logits, 1.0 / cfg.temperature));
                let gate = g.map(
                    layer.neuron_mask,
                    Arc::new(SoftGate {
                        threshold: cfg.neuron_threshold,
                        sharpness: cfg.mask_sharpness,
                    }),
                );
                (alpha, gate)
            }
            MaskMode::Hard => {
                let logits = g.value(layer.act_logits);
                let mask = g.value(layer.neuron_mask);
                let alpha = Array2::from_shape_fn((n, 3), |(j, k)| {
                    argmax_activation(logits.row(j)).one_hot()[k]
                });
                let gate = mask.mapv(|m| if m >= cfg.neuron_threshold { 1.0 } else { 0.0 });
                (g.constant(alpha), g.constant(gate))
            }
        };
        let mut mixed = None;
        for kind in ActivationKind::ALL {
            let k = kind.index();
            let weight_row = g.transpose(g.slice(alpha, 0..n, k..k + 1));
            let act = match kind {
                ActivationKind::LeakyRelu => g.leaky_relu(pre, cfg.leaky_slope),
                ActivationKind::Tanh => g.tanh(pre),
                ActivationKind::Sigmoid => g.sigmoid(pre),
            };
            let term = g.mul_row(act, weight_row);
            mixed = Some(match mixed {
                None => term,
                Some(acc) => g.add(acc, term),
            });
        }
        h = g.mul_row(mixed.expect("three activations"), gate);
    }
    Ok(g.linear(h, mlp.output_weights, mlp.output_biases))
}
