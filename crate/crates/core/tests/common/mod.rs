#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use swatnn_core::autoenc::{AutoencoderConfig, AutoencoderModel, Precision};
use swatnn_core::matrep::{sample_random_mlp, RepLayout, SamplerRanges};
use swatnn_core::netcore::Mlp;
use swatnn_core::rng::SeedTree;

/// Attention autoencoder small enough for finite-difference checks.
pub fn tiny_config() -> AutoencoderConfig {
    AutoencoderConfig {
        d_model: 32,
        n_heads: 2,
        encoder_blocks: 1,
        decoder_blocks: 1,
        ffn_mult: 2,
        layout: RepLayout::new(3, 2, 2, 1).unwrap(),
        precision: Precision::F64,
    }
}

pub fn tiny_model(seed: u64) -> AutoencoderModel {
    AutoencoderModel::init(tiny_config(), &SeedTree::new(seed)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    SeedTree::new(seed).child("test").rng()
}

pub fn normal_matrix(shape: (usize, usize), rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || StandardNormal.sample(rng))
}

pub fn uniform_inputs(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, dim), || rng.random_range(-1.0..=1.0))
}

pub fn random_mlp(layout: &RepLayout, seed: u64) -> Mlp {
    let ranges = SamplerRanges::full(layout, layout.input_dim_max, layout.output_dim_max);
    sample_random_mlp(layout, &ranges, &mut rng(seed)).unwrap()
}

/// Random network using every hidden layer and neuron the layout allows.
pub fn full_random_mlp(layout: &RepLayout, seed: u64) -> Mlp {
    let (l, n) = (layout.max_hidden_layers, layout.max_neurons);
    let (i, o) = (layout.input_dim_max, layout.output_dim_max);
    let ranges = SamplerRanges {
        depth: (l, l),
        width: (n, n),
        input_dim: (i, i),
        output_dim: (o, o),
    };
    sample_random_mlp(layout, &ranges, &mut rng(seed)).unwrap()
}

/// Random network with fractional indicator values and non-one-hot
/// activation logits, so every smooth path is exercised.
pub fn soft_random_mlp(layout: &RepLayout, seed: u64) -> Mlp {
    soften(random_mlp(layout, seed), seed)
}

pub fn soften(mut mlp: Mlp, seed: u64) -> Mlp {
    let mut r = rng(seed ^ 0xabcd);
    for layer in &mut mlp.layers {
        layer.act_logits.mapv_inplace(|x| { let n: f64 = StandardNormal.sample(&mut r); x + 0.5 * n });
        layer.neuron_mask.mapv_inplace(|_| r.random_range(0.2..0.8));
        layer.weights.mapv_inplace(|w| if w == 0.0 { r.random_range(-1.0..1.0) } else { w * 0.3 });
    }
    mlp
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central difference of `f` along `direction` at step `h`.
pub fn directional_fd(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}
