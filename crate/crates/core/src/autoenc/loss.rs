use ndarray::Array2;
use serde::{Deserialize, Serialize};
use swatnn_autograd::{Graph, Var};

use super::model::{interleave, sample_rows, AutoencoderModel, Bound};
use crate::error::{Error, Result};
use crate::matrep::{pack, unpack_graph, NetShape};
use crate::netcore::{eval_graph, eval_mlp, EvalConfig, Mlp};

/// How per-decoder losses are combined per sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MinObjective {
    /// Hard minimum; gradient reaches only the best branch.
    #[default]
    Argmin,
    /// `−τ·log Σ exp(−l/τ)`, which spreads gradient over all branches.
    SoftMin { temperature: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub source_eval: EvalConfig,
    pub decoded_eval: EvalConfig,
    #[serde(default)]
    pub objective: MinObjective,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            source_eval: EvalConfig::hard(),
            decoded_eval: EvalConfig::soft(1.0),
            objective: MinObjective::Argmin,
        }
    }
}

/// `Σ_x ‖source(x) − decoded(x)‖²`, both networks under `cfg`.
pub fn functional_loss(source: &Mlp, decoded: &Mlp, xs: &Array2<f64>, cfg: &EvalConfig) -> Result<f64> {
    functional_loss_with(source, cfg, decoded, cfg, xs)
}

pub fn functional_loss_with(
    source: &Mlp,
    source_cfg: &EvalConfig,
    decoded: &Mlp,
    decoded_cfg: &EvalConfig,
    xs: &Array2<f64>,
) -> Result<f64> {
    if source.input_dim != decoded.input_dim || source.output_dim != decoded.output_dim {
        return Err(Error::Shape("source and decoded boundary sizes differ".into()));
    }
    let a = eval_mlp(source, xs.view(), source_cfg)?;
    let b = eval_mlp(decoded, xs.view(), decoded_cfg)?;
    Ok((&a - &b).mapv(|d| d * d).sum())
}

/// Graph nodes for every (sample, decoder) reconstruction loss.
pub struct BranchLosses {
    /// `losses[b][k - 1]` is sample `b` through decoder `k`.
    pub losses: Vec<Vec<Var>>,
}

impl BranchLosses {
    pub fn values(&self, g: &Graph) -> Vec<Vec<f64>> {
        self.losses
            .iter()
            .map(|row| row.iter().map(|&v| g.scalar(v)).collect())
            .collect()
    }
}

/// Encodes each source, decodes through every decoder, and builds the
/// functional loss of each branch on that sample's inputs.
pub fn branch_losses(bound: &Bound, sources: &[Mlp], xs: &[Array2<f64>], cfg: &LossConfig) -> Result<BranchLosses> {
    let g = bound.g;
    let model_cfg = bound.config();
    let layout = &model_cfg.layout;
    if sources.is_empty() || sources.len() != xs.len() {
        return Err(Error::Shape("need one input matrix per source network".into()));
    }
    let batch = sources.len();
    let n = layout.max_neurons;
    let reps = sources
        .iter()
        .map(|m| pack(m, layout).map(|r| r.token_inputs()))
        .collect::<Result<Vec<_>>>()?;
    let z = bound.encode(g.constant(interleave(&reps)), batch);
    let targets = sources
        .iter()
        .zip(xs)
        .map(|(m, x)| eval_mlp(m, x.view(), &cfg.source_eval).map(|y| g.constant(y)))
        .collect::<Result<Vec<_>>>()?;
    let inputs: Vec<Var> = xs.iter().map(|x| g.constant(x.clone())).collect();

    let mut losses = vec![Vec::with_capacity(model_cfg.decoders()); batch];
    for k in 1..=model_cfg.decoders() {
        let decoded = bound.decode(k, z, batch);
        for (b, src) in sources.iter().enumerate() {
            let rows = if batch == 1 {
                decoded
            } else {
                g.gather_rows(decoded, &sample_rows(n, batch, b))
            };
            let shape = NetShape {
                input_dim: src.input_dim,
                output_dim: src.output_dim,
                hidden_layers: k,
            };
            let net = unpack_graph(g, rows, layout, shape)?;
            let y = eval_graph(g, &net, inputs[b], &cfg.decoded_eval)?;
            losses[b].push(g.sum(g.square(g.sub(y, targets[b]))));
        }
    }
    Ok(BranchLosses { losses })
}

/// Index of the smallest value; ties go to the earlier entry.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Per-sample objective nodes and the winning decoder (1-based) per sample.
pub fn combine(g: &Graph, branches: &BranchLosses, objective: MinObjective) -> (Vec<Var>, Vec<usize>) {
    let values = branches.values(g);
    let winners: Vec<usize> = values.iter().map(|v| argmin(v) + 1).collect();
    let per_sample = branches
        .losses
        .iter()
        .zip(&winners)
        .map(|(row, &k)| match objective {
            MinObjective::Argmin => row[k - 1],
            MinObjective::SoftMin { temperature } => {
                let stacked = g.concat_cols(row);
                let lse = g.logsumexp(g.scale(stacked, -1.0 / temperature));
                g.scale(lse, -temperature)
            }
        })
        .collect();
    (per_sample, winners)
}

impl AutoencoderModel {
    /// Smallest reconstruction loss over all decoders for one source, with
    /// the decoder (1-based) that achieves it.
    pub fn min_loss(&self, source: &Mlp, xs: &Array2<f64>, cfg: &LossConfig) -> Result<(f64, usize)> {
        let losses = self.branch_loss_values(source, xs, cfg)?;
        let k = argmin(&losses);
        Ok((losses[k], k + 1))
    }

    /// Reconstruction loss through each decoder, in decoder order.
    pub fn branch_loss_values(&self, source: &Mlp, xs: &Array2<f64>, cfg: &LossConfig) -> Result<Vec<f64>> {
        let g = Graph::new();
        let bound = self.bind(&g, false);
        let branches = branch_losses(&bound, std::slice::from_ref(source), std::slice::from_ref(xs), cfg)?;
        Ok(branches.values(&g).remove(0))
    }
}
