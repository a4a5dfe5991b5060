use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RepLayout;
use crate::error::{Error, Result};
use crate::netcore::{ActivationKind, HiddenLayer, Mlp};

/// Inclusive ranges for the random network generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerRanges {
    pub depth: (usize, usize),
    pub width: (usize, usize),
    pub input_dim: (usize, usize),
    pub output_dim: (usize, usize),
}

impl SamplerRanges {
    /// Every depth and width the layout allows, with fixed boundary sizes.
    pub fn full(layout: &RepLayout, input_dim: usize, output_dim: usize) -> Self {
        SamplerRanges {
            depth: (1, layout.max_hidden_layers),
            width: (1, layout.max_neurons),
            input_dim: (input_dim, input_dim),
            output_dim: (output_dim, output_dim),
        }
    }

    pub fn validate(&self, layout: &RepLayout) -> Result<()> {
        let check = |name: &str, (lo, hi): (usize, usize), max: usize| {
            if lo == 0 || lo > hi || hi > max {
                Err(Error::Config(format!("{name} range ({lo}, {hi}) outside 1..={max}")))
            } else {
                Ok(())
            }
        };
        check("depth", self.depth, layout.max_hidden_layers)?;
        check("width", self.width, layout.max_neurons)?;
        check("input_dim", self.input_dim, layout.input_dim_max)?;
        check("output_dim", self.output_dim, layout.output_dim_max)
    }
}

/// Draws a full-width network: weights uniform in `[−5, 5]`, biases in
/// `[−1, 1]`, one-hot activations chosen uniformly, and a random subset of
/// each layer active. Parameters touching inactive neurons are zero.
pub fn sample_random_mlp<R: Rng + ?Sized>(layout: &RepLayout, ranges: &SamplerRanges, rng: &mut R) -> Result<Mlp> {
    ranges.validate(layout)?;
    let n = layout.max_neurons;
    let depth = rng.random_range(ranges.depth.0..=ranges.depth.1);
    let input_dim = rng.random_range(ranges.input_dim.0..=ranges.input_dim.1);
    let output_dim = rng.random_range(ranges.output_dim.0..=ranges.output_dim.1);

    let mut layers = Vec::with_capacity(depth);
    let mut prev_active = vec![true; input_dim];
    for _ in 0..depth {
        let width = rng.random_range(ranges.width.0..=ranges.width.1);
        let mut active = vec![false; n];
        for h in index::sample(rng, n, width) {
            active[h] = true;
        }
        let fan_in = prev_active.len();
        let mut weights = Array2::zeros((fan_in, n));
        let mut biases = Array1::zeros(n);
        let mut act_logits = Array2::zeros((n, ActivationKind::COUNT));
        let mut neuron_mask = Array1::zeros(n);
        for h in 0..n {
            let kind = ActivationKind::ALL[rng.random_range(0..ActivationKind::COUNT)];
            act_logits[[h, kind.index()]] = 1.0;
            if active[h] {
                neuron_mask[h] = 1.0;
                biases[h] = rng.random_range(-1.0..=1.0);
                for r in 0..fan_in {
                    if prev_active[r] {
                        weights[[r, h]] = rng.random_range(-5.0..=5.0);
                    }
                }
            }
        }
        layers.push(HiddenLayer {
            weights,
            biases,
            act_logits,
            neuron_mask,
        });
        prev_active = active;
    }
    let mut output_weights = Array2::zeros((n, output_dim));
    for r in 0..n {
        if prev_active[r] {
            for c in 0..output_dim {
                output_weights[[r, c]] = rng.random_range(-5.0..=5.0);
            }
        }
    }
    let output_biases = Array1::from_shape_fn(output_dim, |_| rng.random_range(-1.0..=1.0));
    Mlp::new(input_dim, output_dim, layers, output_weights, output_biases)
}
