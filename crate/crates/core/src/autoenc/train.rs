use std::path::PathBuf;
use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use swatnn_autograd::Graph;

use super::checkpoint::save_checkpoint;
use super::loss::{branch_losses, combine, LossConfig};
use super::model::AutoencoderModel;
use crate::error::{Error, Result};
use crate::matrep::{sample_random_mlp, SamplerRanges};
use crate::netcore::Mlp;
use crate::optim::{Optimizer, OptimizerKind};
use crate::rng::SeedTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSpec {
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub batch_size: usize,
    pub inputs_per_mlp: usize,
    pub lr: f64,
    pub seed: u64,
    /// Defaults to every depth and width the layout allows, with the
    /// layout's maximal input and output sizes.
    #[serde(default)]
    pub sampler: Option<SamplerRanges>,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    /// Smoothing window (in batches) of the loss average watched for
    /// divergence.
    #[serde(default = "default_ema_window")]
    pub ema_window: usize,
    /// Where to write the model if training hits a non-finite loss.
    #[serde(default)]
    pub diagnostic_path: Option<PathBuf>,
}

fn default_optimizer() -> OptimizerKind {
    OptimizerKind::adam()
}

fn default_ema_window() -> usize {
    500
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            epochs: 1,
            batches_per_epoch: 2000,
            batch_size: 32,
            inputs_per_mlp: 1000,
            lr: 1e-4,
            seed: 0,
            sampler: None,
            loss: LossConfig::default(),
            optimizer: default_optimizer(),
            ema_window: default_ema_window(),
            diagnostic_path: None,
        }
    }
}

impl TrainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batches_per_epoch == 0 || self.batch_size == 0 || self.inputs_per_mlp == 0 {
            return Err(Error::Config("epochs, batch counts and sizes must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if self.ema_window == 0 {
            return Err(Error::Config("ema_window must be positive".into()));
        }
        self.loss.source_eval.validate()?;
        self.loss.decoded_eval.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Fraction of samples won by each decoder, in decoder order.
    pub per_decoder_win_rate: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    pub batch_losses: Vec<f64>,
    /// Batches at which the smoothed loss first exceeded twice its minimum.
    pub divergence_warnings: Vec<usize>,
}

/// Networks and inputs drawn from one seed.
#[derive(Clone, Debug)]
pub struct NetworkBatch {
    pub sources: Vec<Mlp>,
    pub inputs: Vec<Array2<f64>>,
}

pub fn default_sampler(model: &AutoencoderModel) -> SamplerRanges {
    let layout = &model.config.layout;
    SamplerRanges::full(layout, layout.input_dim_max, layout.output_dim_max)
}

/// `count` random networks, each with `inputs_per_mlp` inputs uniform in
/// `[−1, 1]^i`.
pub fn sample_batch(
    model: &AutoencoderModel,
    ranges: &SamplerRanges,
    count: usize,
    inputs_per_mlp: usize,
    seed: &SeedTree,
) -> Result<NetworkBatch> {
    let mut rng = seed.rng();
    let mut sources = Vec::with_capacity(count);
    let mut inputs = Vec::with_capacity(count);
    for _ in 0..count {
        let m = sample_random_mlp(&model.config.layout, ranges, &mut rng)?;
        inputs.push(Array2::from_shape_simple_fn((inputs_per_mlp, m.input_dim), || {
            rng.random_range(-1.0..=1.0)
        }));
        sources.push(m);
    }
    Ok(NetworkBatch { sources, inputs })
}

/// Mean per-network minimum loss, evaluated in chunks without gradients.
pub fn mean_min_loss(model: &AutoencoderModel, set: &NetworkBatch, cfg: &LossConfig) -> Result<f64> {
    const CHUNK: usize = 16;
    let mut total = 0.0;
    for (src, xs) in set.sources.chunks(CHUNK).zip(set.inputs.chunks(CHUNK)) {
        let g = Graph::new();
        let bound = model.bind(&g, false);
        let branches = branch_losses(&bound, src, xs, cfg)?;
        total += branches
            .values(&g)
            .iter()
            .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
            .sum::<f64>();
    }
    Ok(total / set.sources.len() as f64)
}

/// Observer for per-epoch progress; return an error to stop training.
pub trait TrainObserver {
    fn on_epoch(&mut self, _metrics: &EpochMetrics, _model: &AutoencoderModel) -> Result<()> {
        Ok(())
    }
}

impl TrainObserver for () {}

/// Minimizes the mean min-loss over freshly sampled networks.
///
/// Every batch draws from its own seed stream, so the run is determined by
/// the `TrainSpec` and the initial parameters.
pub fn train_autoencoder(
    model: &mut AutoencoderModel,
    spec: &TrainSpec,
    observer: &mut dyn TrainObserver,
) -> Result<TrainReport> {
    spec.validate()?;
    let ranges = spec.sampler.unwrap_or_else(|| default_sampler(model));
    ranges.validate(&model.config.layout)?;
    let seeds = SeedTree::new(spec.seed).child("autoenc-train");
    let mut opt = Optimizer::new(spec.optimizer, spec.lr);
    let decoders = model.config.decoders();
    let ema_alpha = 2.0 / (spec.ema_window as f64 + 1.0);
    let (mut ema, mut ema_min) = (None::<f64>, f64::INFINITY);
    let mut warned = false;
    let mut report = TrainReport::default();

    for epoch in 0..spec.epochs {
        let mut loss_sum = 0.0;
        let mut wins = vec![0usize; decoders];
        for b in 0..spec.batches_per_epoch {
            let step = epoch * spec.batches_per_epoch + b;
            let batch = sample_batch(model, &ranges, spec.batch_size, spec.inputs_per_mlp, &seeds.index(step as u64))?;

            let g = Graph::new();
            let bound = model.bind(&g, true);
            let branches = branch_losses(&bound, &batch.sources, &batch.inputs, &spec.loss)?;
            let (per_sample, winners) = combine(&g, &branches, spec.loss.objective);
            let total = g.mean(g.concat_cols(&per_sample));
            let loss = g.scalar(total);
            if !loss.is_finite() {
                let detail = format!("non-finite loss {loss} at epoch {epoch}, batch {b}");
                if let Some(path) = &spec.diagnostic_path {
                    drop(bound);
                    drop(g);
                    save_checkpoint(model, path)?;
                    return Err(Error::Divergence {
                        stage: "autoencoder training".into(),
                        detail: format!("{detail}; model before this step written to {}", path.display()),
                    });
                }
                return Err(Error::Divergence {
                    stage: "autoencoder training".into(),
                    detail,
                });
            }
            let mut grads = g.backward(total);
            let names_and_grads: Vec<(String, Array2<f64>)> = bound
                .vars()
                .map(|(name, v)| {
                    let shape = g.shape(v);
                    (name.to_string(), grads.take(v).unwrap_or_else(|| Array2::zeros(shape)))
                })
                .collect();
            drop(bound);
            drop(g);

            let mut params: Vec<&mut Array2<f64>> = model.params.values_mut().map(Arc::make_mut).collect();
            let grad_refs: Vec<&Array2<f64>> = names_and_grads.iter().map(|(_, g)| g).collect();
            opt.step(&mut params, &grad_refs);

            for k in winners {
                wins[k - 1] += 1;
            }
            loss_sum += loss;
            report.batch_losses.push(loss);
            let e = match ema {
                None => loss,
                Some(prev) => prev + ema_alpha * (loss - prev),
            };
            ema = Some(e);
            if step >= spec.ema_window {
                ema_min = ema_min.min(e);
                if e > 2.0 * ema_min && !warned {
                    log::warn!("smoothed training loss {e:.4e} exceeds twice its minimum {ema_min:.4e} at batch {step}");
                    report.divergence_warnings.push(step);
                    warned = true;
                } else if e <= 2.0 * ema_min {
                    warned = false;
                }
            }
        }
        let samples = (spec.batches_per_epoch * spec.batch_size) as f64;
        let metrics = EpochMetrics {
            epoch,
            mean_loss: loss_sum / spec.batches_per_epoch as f64,
            per_decoder_win_rate: wins.iter().map(|&w| w as f64 / samples).collect(),
        };
        log::info!("epoch {epoch}: mean loss {:.6e}", metrics.mean_loss);
        observer.on_epoch(&metrics, model)?;
        report.epochs.push(metrics);
    }
    Ok(report)
}
