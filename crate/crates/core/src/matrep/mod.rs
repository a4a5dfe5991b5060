//! Fixed-size two-channel matrix representation of an [`Mlp`].
//!
//! Row `h` collects everything attached to neuron `h` of every layer: its
//! outgoing weights, its bias, its activation one-hot row and its activity
//! indicator. Columns, left to right:
//!
//! ```text
//! [W₁ | b₁ | F₁] [W₂ | b₂ | F₂] … [W_L | b_L | F_L] [W_out | b_out] [M]
//!  N    1    A    N    1    A        N    1    A      N       1     L
//! ```
//!
//! `W_j` holds the weights feeding hidden layer `j` (rows index the source
//! neuron, columns the target neuron), `b_j` the biases of layer `j` and
//! `F_j` its activation rows. The validity channel is 1 wherever the value
//! channel carries a real parameter and 0 on padding.

mod codec;
mod graph;
mod sample;

pub use codec::{decode_matrep, decode_matrep_stream, encode_matrep, RepHeader, MATREP_MAGIC};
pub use graph::unpack_graph;
pub use sample::{sample_random_mlp, SamplerRanges};

use std::ops::Range;

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{argmax_activation, ActivationKind, HiddenLayer, Mlp};

/// Neuron threshold used when hardening decoded indicators.
pub const NEURON_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepLayout {
    pub max_neurons: usize,
    pub max_hidden_layers: usize,
    pub num_activations: usize,
    pub input_dim_max: usize,
    pub output_dim_max: usize,
}

impl RepLayout {
    pub fn new(max_neurons: usize, max_hidden_layers: usize, input_dim_max: usize, output_dim_max: usize) -> Result<Self> {
        let layout = RepLayout {
            max_neurons,
            max_hidden_layers,
            num_activations: ActivationKind::COUNT,
            input_dim_max,
            output_dim_max,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_neurons == 0 || self.max_hidden_layers == 0 {
            return Err(Error::Layout("layout needs at least one neuron and one layer".into()));
        }
        if self.num_activations != ActivationKind::COUNT {
            return Err(Error::Layout(format!(
                "layout declares {} activations, only {} are supported",
                self.num_activations,
                ActivationKind::COUNT
            )));
        }
        if self.input_dim_max == 0 || self.output_dim_max == 0 {
            return Err(Error::Layout("boundary dimensions must be positive".into()));
        }
        if self.input_dim_max > self.max_neurons || self.output_dim_max > self.max_neurons {
            return Err(Error::Layout(format!(
                "boundary dimensions ({}, {}) exceed max neurons {}",
                self.input_dim_max, self.output_dim_max, self.max_neurons
            )));
        }
        Ok(())
    }

    /// Total column count `(L+1)(N+1) + L·A + L`.
    pub fn columns(&self) -> usize {
        let (n, l, a) = (self.max_neurons, self.max_hidden_layers, self.num_activations);
        (l + 1) * (n + 1) + l * a + l
    }

    fn hidden_stride(&self) -> usize {
        self.max_neurons + 1 + self.num_activations
    }

    /// Weight columns of hidden block `j` (0-based).
    pub fn weight_cols(&self, j: usize) -> Range<usize> {
        let start = j * self.hidden_stride();
        start..start + self.max_neurons
    }

    pub fn bias_col(&self, j: usize) -> usize {
        j * self.hidden_stride() + self.max_neurons
    }

    pub fn act_cols(&self, j: usize) -> Range<usize> {
        let start = self.bias_col(j) + 1;
        start..start + self.num_activations
    }

    pub fn output_weight_cols(&self) -> Range<usize> {
        let start = self.max_hidden_layers * self.hidden_stride();
        start..start + self.max_neurons
    }

    pub fn output_bias_col(&self) -> usize {
        self.output_weight_cols().end
    }

    pub fn mask_cols(&self) -> Range<usize> {
        let start = self.output_bias_col() + 1;
        start..start + self.max_hidden_layers
    }

    pub fn mask_col(&self, j: usize) -> usize {
        self.mask_cols().start + j
    }

    pub fn check_shape(&self, shape: &NetShape) -> Result<()> {
        if shape.hidden_layers == 0 || shape.hidden_layers > self.max_hidden_layers {
            return Err(Error::Layout(format!(
                "{} hidden layers outside 1..={}",
                shape.hidden_layers, self.max_hidden_layers
            )));
        }
        if shape.input_dim == 0 || shape.input_dim > self.input_dim_max {
            return Err(Error::Layout(format!(
                "input dimension {} outside 1..={}",
                shape.input_dim, self.input_dim_max
            )));
        }
        if shape.output_dim == 0 || shape.output_dim > self.output_dim_max {
            return Err(Error::Layout(format!(
                "output dimension {} outside 1..={}",
                shape.output_dim, self.output_dim_max
            )));
        }
        Ok(())
    }

    /// Validity channel of a packed network with the given shape and
    /// full-width hidden layers.
    pub fn structural_validity(&self, shape: &NetShape) -> Array2<bool> {
        let n = self.max_neurons;
        let mut valid = Array2::from_elem((n, self.columns()), false);
        for j in 0..shape.hidden_layers {
            let fan_in = if j == 0 { shape.input_dim } else { n };
            valid.slice_mut(s![..fan_in, self.weight_cols(j)]).fill(true);
            valid.column_mut(self.bias_col(j)).fill(true);
            valid.slice_mut(s![.., self.act_cols(j)]).fill(true);
        }
        let out = self.output_weight_cols();
        valid
            .slice_mut(s![.., out.start..out.start + shape.output_dim])
            .fill(true);
        valid
            .slice_mut(s![..shape.output_dim, self.output_bias_col()])
            .fill(true);
        valid.slice_mut(s![.., self.mask_cols()]).fill(true);
        valid
    }
}

/// Boundary dimensions and depth of a network to read out of a representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_layers: usize,
}

/// Value channel plus validity channel, both `N × C`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatRep {
    pub values: Array2<f64>,
    pub validity: Array2<bool>,
}

impl MatRep {
    pub fn zeros(layout: &RepLayout) -> Self {
        let shape = (layout.max_neurons, layout.columns());
        MatRep {
            values: Array2::zeros(shape),
            validity: Array2::from_elem(shape, false),
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Every padded position holds exactly zero.
    pub fn padding_is_zero(&self) -> bool {
        self.values
            .iter()
            .zip(self.validity.iter())
            .all(|(&v, &ok)| ok || v == 0.0)
    }

    /// Rows of `values ‖ validity`, the encoder's token inputs.
    pub fn token_inputs(&self) -> Array2<f64> {
        let (n, c) = self.dim();
        let mut out = Array2::zeros((n, 2 * c));
        out.slice_mut(s![.., ..c]).assign(&self.values);
        out.slice_mut(s![.., c..])
            .assign(&self.validity.mapv(|b| if b { 1.0 } else { 0.0 }));
        out
    }
}

/// Packs `mlp` into the fixed layout. Hidden layers narrower than
/// `max_neurons` are padded with invalid, zero entries.
pub fn pack(mlp: &Mlp, layout: &RepLayout) -> Result<MatRep> {
    layout.validate()?;
    mlp.validate()?;
    let depth = mlp.depth();
    if depth == 0 {
        return Err(Error::Layout("networks without hidden layers cannot be packed".into()));
    }
    let shape = NetShape {
        input_dim: mlp.input_dim,
        output_dim: mlp.output_dim,
        hidden_layers: depth,
    };
    layout.check_shape(&shape)?;
    let n = layout.max_neurons;
    if let Some(w) = mlp.widths().into_iter().find(|&w| w > n) {
        return Err(Error::Layout(format!("layer width {w} exceeds {n}")));
    }

    let mut rep = MatRep::zeros(layout);
    for (j, layer) in mlp.layers.iter().enumerate() {
        let width = layer.width();
        let fan_in = layer.fan_in();
        let wc = layout.weight_cols(j);
        rep.values
            .slice_mut(s![..fan_in, wc.start..wc.start + width])
            .assign(&layer.weights);
        rep.validity
            .slice_mut(s![..fan_in, wc.start..wc.start + width])
            .fill(true);
        rep.values
            .slice_mut(s![..width, layout.bias_col(j)])
            .assign(&layer.biases);
        rep.validity
            .slice_mut(s![..width, layout.bias_col(j)])
            .fill(true);
        let ac = layout.act_cols(j);
        rep.values
            .slice_mut(s![..width, ac.clone()])
            .assign(&layer.act_logits);
        rep.validity.slice_mut(s![..width, ac]).fill(true);
        rep.values
            .slice_mut(s![..width, layout.mask_col(j)])
            .assign(&layer.neuron_mask);
    }
    let last = mlp.output_weights.nrows();
    let oc = layout.output_weight_cols();
    rep.values
        .slice_mut(s![..last, oc.start..oc.start + mlp.output_dim])
        .assign(&mlp.output_weights);
    rep.validity
        .slice_mut(s![..last, oc.start..oc.start + mlp.output_dim])
        .fill(true);
    rep.values
        .slice_mut(s![..mlp.output_dim, layout.output_bias_col()])
        .assign(&mlp.output_biases);
    rep.validity
        .slice_mut(s![..mlp.output_dim, layout.output_bias_col()])
        .fill(true);
    rep.validity.slice_mut(s![.., layout.mask_cols()]).fill(true);
    Ok(rep)
}

/// Reads a network of the given shape out of `rep`. The validity channel is
/// not consulted; structure comes from `shape`.
///
/// With `hard`, indicators are binarized at [`NEURON_THRESHOLD`] and
/// activation rows become one-hot at their argmax. Otherwise activation rows
/// are kept as logits and indicators are clamped into `[0, 1]`.
pub fn unpack(rep: &MatRep, layout: &RepLayout, shape: NetShape, hard: bool) -> Result<Mlp> {
    layout.check_shape(&shape)?;
    let n = layout.max_neurons;
    if rep.dim() != (n, layout.columns()) {
        return Err(Error::Shape(format!(
            "representation is {:?}, layout expects ({n}, {})",
            rep.dim(),
            layout.columns()
        )));
    }
    let v = &rep.values;
    let mut layers = Vec::with_capacity(shape.hidden_layers);
    for j in 0..shape.hidden_layers {
        let fan_in = if j == 0 { shape.input_dim } else { n };
        let weights = v.slice(s![..fan_in, layout.weight_cols(j)]).to_owned();
        let biases = v.column(layout.bias_col(j)).to_owned();
        let mut act_logits = v.slice(s![.., layout.act_cols(j)]).to_owned();
        let mut neuron_mask: Array1<f64> = v.column(layout.mask_col(j)).to_owned();
        if hard {
            for h in 0..n {
                let hot = argmax_activation(act_logits.row(h)).one_hot();
                act_logits.row_mut(h).assign(&Array1::from(hot.to_vec()));
            }
            neuron_mask.mapv_inplace(|m| if m >= NEURON_THRESHOLD { 1.0 } else { 0.0 });
        } else {
            neuron_mask.mapv_inplace(|m| if m.is_nan() { 0.0 } else { m.clamp(0.0, 1.0) });
        }
        layers.push(HiddenLayer {
            weights,
            biases,
            act_logits,
            neuron_mask,
        });
    }
    let oc = layout.output_weight_cols();
    let output_weights = v
        .slice(s![.., oc.start..oc.start + shape.output_dim])
        .to_owned();
    let output_biases = v
        .slice(s![..shape.output_dim, layout.output_bias_col()])
        .to_owned();
    Mlp::new(
        shape.input_dim,
        shape.output_dim,
        layers,
        output_weights,
        output_biases,
    )
}
