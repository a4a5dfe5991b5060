use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pca::pca_top2;
use crate::autoenc::AutoencoderModel;
use crate::error::{Error, Result};
use crate::matrep::{unpack, NetShape};
use crate::netcore::{eval_mlp, EvalConfig};
use crate::rng::SeedTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub decoder: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub neighbors: usize,
    pub noise_std: f64,
    pub grid_step: f64,
    pub grid_range: f64,
    pub inputs: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            decoder: 1,
            input_dim: 2,
            output_dim: 1,
            neighbors: 200,
            noise_std: 0.1,
            grid_step: 0.25,
            grid_range: 3.0,
            inputs: 1024,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neighbors < 2 || self.inputs == 0 {
            return Err(Error::Config("need at least two neighbors and one input".into()));
        }
        if !(self.noise_std > 0.0 && self.grid_step > 0.0 && self.grid_range >= 0.0) {
            return Err(Error::Config("noise, step and range must be positive".into()));
        }
        Ok(())
    }

    /// Grid coordinates `−range, −range + step, …, range`.
    pub fn offsets(&self) -> Vec<f64> {
        let half = (self.grid_range / self.grid_step).round() as i64;
        (-half..=half).map(|i| i as f64 * self.grid_step).collect()
    }
}

/// Functional distance to the decoded network at the probe center, sampled
/// over the plane spanned by the top two principal directions of a noisy
/// neighborhood.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessGrid {
    pub offsets: Vec<f64>,
    /// `mse[[a, b]]` at `center + offsets[a]·v1 + offsets[b]·v2`.
    pub mse: Array2<f64>,
    pub rank_deficient: bool,
    pub explained_variance: [f64; 2],
}

/// Probes the latent space around `center`, or around a standard normal draw
/// when `center` is `None`.
pub fn smoothness_probe(model: &AutoencoderModel, center: Option<&Array2<f64>>, cfg: &ProbeConfig) -> Result<SmoothnessGrid> {
    cfg.validate()?;
    let shape = model.config.embedding_shape();
    let seeds = SeedTree::new(cfg.seed).child("smoothness");
    let center = match center {
        Some(z) => z.clone(),
        None => {
            let mut rng = seeds.child("center").rng();
            Array2::from_shape_simple_fn(shape, || StandardNormal.sample(&mut rng))
        }
    };
    if center.dim() != shape {
        return Err(Error::Shape(format!("center is {:?}, expected {shape:?}", center.dim())));
    }
    let net_shape = NetShape {
        input_dim: cfg.input_dim,
        output_dim: cfg.output_dim,
        hidden_layers: cfg.decoder,
    };
    model.config.layout.check_shape(&net_shape)?;

    let flat = center.iter().copied().collect::<Array1<f64>>();
    let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = seeds.child("neighbors").rng();
    let cloud = Array2::from_shape_fn((cfg.neighbors, flat.len()), |(_, j)| flat[j] + noise.sample(&mut rng));
    let pca = pca_top2(cloud.view())?;

    let mut rng = seeds.child("inputs").rng();
    let xs = Array2::from_shape_simple_fn((cfg.inputs, cfg.input_dim), || rng.random_range(-1.0..=1.0));
    let outputs = |z: &Array2<f64>| -> Result<Array2<f64>> {
        let rep = model.decode_rep(cfg.decoder, z, cfg.input_dim, cfg.output_dim)?;
        let mlp = unpack(&rep, &model.config.layout, net_shape, false)?;
        eval_mlp(&mlp, xs.view(), &EvalConfig::soft(1.0))
    };
    let base = outputs(&center)?;

    let offsets = cfg.offsets();
    let [v1, v2] = &pca.components;
    let cells: Vec<(usize, usize)> = (0..offsets.len())
        .flat_map(|a| (0..offsets.len()).map(move |b| (a, b)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(a, b)| {
            let (s, t) = (offsets[a], offsets[b]);
            let moved = &flat + &(v1 * s) + &(v2 * t);
            let z = moved.into_shape_with_order(shape).map_err(|e| Error::Shape(e.to_string()))?;
            Ok(mse(outputs(&z)?.view(), base.view()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mse = Array2::from_shape_vec((offsets.len(), offsets.len()), values).map_err(|e| Error::Shape(e.to_string()))?;
    Ok(SmoothnessGrid {
        offsets,
        mse,
        rank_deficient: pca.rank_deficient,
        explained_variance: pca.variances,
    })
}

fn mse(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    (&a - &b).mapv(|d| d * d).mean().unwrap_or(0.0)
}
