use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use swatnn_autograd::{Graph, Var};

use super::penalty::{compactness_penalty_graph, soft_weight_mask_graph, sparsity_penalty_graph};
use super::select::{select_best, Candidate};
use super::{temperature, DataReduction, SearchConfig};
use crate::autoenc::{AutoencoderModel, Bound};
use crate::bench::TaskDataset;
use crate::error::{Error, Result};
use crate::matrep::{unpack_graph, NetShape};
use crate::netcore::{eval_graph, eval_mlp, EvalConfig, MaskMode, Mlp, MlpVars};
use crate::optim::Optimizer;
use crate::rng::SeedTree;

/// Training and test samples for a search.
#[derive(Clone, Copy, Debug)]
pub struct DataSplit<'a> {
    pub x_train: ArrayView2<'a, f64>,
    pub y_train: ArrayView2<'a, f64>,
    pub x_test: ArrayView2<'a, f64>,
    pub y_test: ArrayView2<'a, f64>,
}

impl TaskDataset {
    pub fn split(&self) -> DataSplit<'_> {
        DataSplit {
            x_train: self.x_train.view(),
            y_train: self.y_train.view(),
            x_test: self.x_test.view(),
            y_test: self.y_test.view(),
        }
    }
}

/// Nodes of one search-loss evaluation.
pub struct LossParts {
    pub total: Var,
    pub data: Var,
    pub sparsity: Var,
    pub compactness: Var,
    /// Decoded network before weight masking.
    pub net: MlpVars,
}

/// Decodes `z` through decoder `k`, masks small weights softly, evaluates
/// with tempered activation mixing and soft neuron gates, and adds the
/// sparsity and compactness penalties.
#[allow(clippy::too_many_arguments)]
pub fn search_loss(
    bound: &Bound,
    z: Var,
    t_s: Var,
    k: usize,
    xs: ArrayView2<f64>,
    ys: ArrayView2<f64>,
    epoch: u64,
    cfg: &SearchConfig,
) -> Result<LossParts> {
    let g = bound.g;
    let layout = &bound.config().layout;
    if xs.nrows() != ys.nrows() || xs.nrows() == 0 {
        return Err(Error::Shape("inputs and targets must have the same positive row count".into()));
    }
    let shape = NetShape {
        input_dim: xs.ncols(),
        output_dim: ys.ncols(),
        hidden_layers: k,
    };
    let decoded = bound.decode(k, z, 1);
    let net = unpack_graph(g, decoded, layout, shape)?;
    let p = &cfg.penalties;

    let mut masked = net.clone();
    for layer in &mut masked.layers {
        layer.weights = soft_weight_mask_graph(g, layer.weights, t_s, p.soft_scale);
    }
    masked.output_weights = soft_weight_mask_graph(g, masked.output_weights, t_s, p.soft_scale);
    let eval = EvalConfig {
        temperature: temperature(epoch, &cfg.anneal),
        mask_mode: MaskMode::Soft,
        mask_sharpness: p.soft_scale,
        neuron_threshold: p.t_n,
        ..EvalConfig::default()
    };
    let pred = eval_graph(g, &masked, g.constant(xs.to_owned()), &eval)?;
    let sq = g.sum(g.square(g.sub(pred, g.constant(ys.to_owned()))));
    let data = match cfg.reduction {
        DataReduction::Mean => g.scale(sq, 1.0 / xs.nrows() as f64),
        DataReduction::Sum => sq,
    };
    let sparsity = sparsity_penalty_graph(g, &net.weight_vars(), t_s, p);
    let masks: Vec<Var> = net.layers.iter().map(|l| l.neuron_mask).collect();
    let compactness = compactness_penalty_graph(g, &masks, p.alpha, p.beta);
    let total = g.add(g.add(data, g.scale(sparsity, p.lambda_s)), compactness);
    Ok(LossParts {
        total,
        data,
        sparsity,
        compactness,
        net,
    })
}

/// Outcome of searching with one decoder.
#[derive(Clone, Debug)]
pub struct DecoderRun {
    pub decoder: usize,
    pub z: Array2<f64>,
    pub t_s: f64,
    /// Hardened network: small weights and inactive neurons zeroed,
    /// activations one-hot.
    pub mlp: Mlp,
    pub train_mse: f64,
    pub test_mse: f64,
    pub nonzeros: usize,
    pub active_neurons: Vec<usize>,
    /// Total loss per completed step.
    pub trajectory: Vec<f64>,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderSummary {
    pub decoder: usize,
    pub train_mse: f64,
    pub test_mse: f64,
    pub nonzeros: usize,
    pub active_neurons: Vec<usize>,
    pub t_s: f64,
    pub diverged: bool,
    pub steps_run: usize,
    pub final_loss: Option<f64>,
    pub z: Vec<Vec<f64>>,
}

impl DecoderRun {
    pub fn summary(&self) -> DecoderSummary {
        DecoderSummary {
            decoder: self.decoder,
            train_mse: self.train_mse,
            test_mse: self.test_mse,
            nonzeros: self.nonzeros,
            active_neurons: self.active_neurons.clone(),
            t_s: self.t_s,
            diverged: self.diverged,
            steps_run: self.trajectory.len(),
            final_loss: self.trajectory.last().copied(),
            z: self.z.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn candidate(&self) -> Candidate {
        Candidate {
            mse: if self.diverged { f64::NAN } else { self.test_mse },
            nonzeros: self.nonzeros,
            decoder: self.decoder,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub runs: Vec<DecoderRun>,
}

impl SearchResult {
    /// The run chosen by [`select_best`] on test MSE; diverged runs never
    /// qualify.
    pub fn best(&self, tolerance: f64) -> Result<&DecoderRun> {
        let cands: Vec<Candidate> = self.runs.iter().map(DecoderRun::candidate).collect();
        Ok(&self.runs[select_best(&cands, tolerance)?])
    }
}

fn mse(mlp: &Mlp, xs: ArrayView2<f64>, ys: ArrayView2<f64>) -> Result<f64> {
    let pred = eval_mlp(mlp, xs, &EvalConfig::hard())?;
    Ok((&pred - &ys).mapv(|d| d * d).mean().unwrap_or(0.0))
}

fn search_one(model: &AutoencoderModel, data: DataSplit, cfg: &SearchConfig, k: usize) -> Result<DecoderRun> {
    let mut rng = SeedTree::new(cfg.seed ^ k as u64).child("latent-search").rng();
    let mut z = Array2::from_shape_simple_fn(model.config.embedding_shape(), || StandardNormal.sample(&mut rng));
    let mut t_s = Array2::from_elem((1, 1), cfg.penalties.t_s_init.clamp(0.0, 1.0));
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr);
    let mut trajectory = Vec::with_capacity(cfg.steps as usize);
    let mut diverged = false;

    for step in 0..cfg.steps {
        let g = Graph::new();
        let bound = model.bind(&g, false);
        let zv = g.variable(z.clone());
        let tv = g.variable(t_s.clone());
        let parts = search_loss(&bound, zv, tv, k, data.x_train, data.y_train, step, cfg)?;
        let loss = g.scalar(parts.total);
        if !loss.is_finite() || loss > cfg.divergence_threshold {
            log::warn!("decoder {k}: loss {loss:.3e} at step {step}, stopping this run");
            diverged = true;
            break;
        }
        trajectory.push(loss);
        let grads = g.backward(parts.total);
        let gz = grads.get_or_zeros(zv, z.dim());
        let gt = grads.get_or_zeros(tv, (1, 1));
        opt.step(&mut [&mut z, &mut t_s], &[&gz, &gt]);
        t_s[[0, 0]] = t_s[[0, 0]].clamp(0.0, 1.0);
    }

    let threshold = t_s[[0, 0]];
    let g = Graph::new();
    let bound = model.bind(&g, false);
    let shape = NetShape {
        input_dim: data.x_train.ncols(),
        output_dim: data.y_train.ncols(),
        hidden_layers: k,
    };
    let decoded = bound.decode(k, g.constant(z.clone()), 1);
    let soft = unpack_graph(&g, decoded, &model.config.layout, shape)?.to_mlp(&g)?;
    let mlp = soft.harden(Some(threshold), cfg.penalties.t_n);
    Ok(DecoderRun {
        decoder: k,
        train_mse: mse(&mlp, data.x_train, data.y_train)?,
        test_mse: mse(&mlp, data.x_test, data.y_test)?,
        nonzeros: mlp.nonzero_weights(),
        active_neurons: mlp.active_neurons(cfg.penalties.t_n),
        z,
        t_s: threshold,
        mlp,
        trajectory,
        diverged,
    })
}

/// Independent searches, one per decoder in `cfg.decoders`, run in
/// parallel. Each starts from `z ~ N(0, I)` drawn from a seed derived from
/// `cfg.seed` and the decoder index.
pub fn run_search(model: &AutoencoderModel, data: DataSplit, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let decoders: Vec<usize> = if cfg.decoders.is_empty() {
        (1..=model.config.decoders()).collect()
    } else {
        cfg.decoders.clone()
    };
    for &k in &decoders {
        if k == 0 || k > model.config.decoders() {
            return Err(Error::Config(format!("decoder {k} outside 1..={}", model.config.decoders())));
        }
    }
    let runs = decoders
        .par_iter()
        .map(|&k| search_one(model, data, cfg, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(SearchResult { runs })
}
