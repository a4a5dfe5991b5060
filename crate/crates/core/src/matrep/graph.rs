use swatnn_autograd::{Graph, Var};

use super::{NetShape, RepLayout};
use crate::error::{Error, Result};
use crate::netcore::{LayerVars, MlpVars};

/// Differentiable soft unpack: slices a decoded `N × C` node into network
/// parameters. Activation columns stay logits and indicators are used as is,
/// so gradients reach every entry the network reads.
pub fn unpack_graph(g: &Graph, decoded: Var, layout: &RepLayout, shape: NetShape) -> Result<MlpVars> {
    layout.check_shape(&shape)?;
    let n = layout.max_neurons;
    if g.shape(decoded) != (n, layout.columns()) {
        return Err(Error::Shape(format!(
            "decoded node is {:?}, layout expects ({n}, {})",
            g.shape(decoded),
            layout.columns()
        )));
    }
    let column_as_row = |col: usize, rows: usize| g.transpose(g.slice(decoded, 0..rows, col..col + 1));
    let layers = (0..shape.hidden_layers)
        .map(|j| {
            let fan_in = if j == 0 { shape.input_dim } else { n };
            LayerVars {
                weights: g.slice(decoded, 0..fan_in, layout.weight_cols(j)),
                biases: column_as_row(layout.bias_col(j), n),
                act_logits: g.slice(decoded, 0..n, layout.act_cols(j)),
                neuron_mask: column_as_row(layout.mask_col(j), n),
            }
        })
        .collect();
    let oc = layout.output_weight_cols();
    Ok(MlpVars {
        input_dim: shape.input_dim,
        output_dim: shape.output_dim,
        layers,
        output_weights: g.slice(decoded, 0..n, oc.start..oc.start + shape.output_dim),
        output_biases: column_as_row(layout.output_bias_col(), shape.output_dim),
    })
}
