use ndarray::Array1;
use serde::{Deserialize, Serialize};
use swatnn_autograd::{Graph, Var};

use super::{CountForm, PenaltyConfig};
use crate::netcore::sigmoid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMaskMode {
    Soft,
    Hard,
}

/// `μ₁‖w‖₁` plus the soft count of weights below `t_s`.
pub fn sparsity_penalty(w: &[f64], t_s: f64, cfg: &PenaltyConfig) -> f64 {
    let l1: f64 = w.iter().map(|x| x.abs()).sum();
    let count = match cfg.count_form {
        CountForm::PerWeight => w.iter().map(|x| sigmoid(cfg.soft_scale * (t_s - x.abs()))).sum(),
        CountForm::Aggregate => sigmoid(cfg.soft_scale * w.iter().map(|x| (x.abs() - t_s).abs()).sum::<f64>()),
    };
    cfg.mu_1 * l1 + cfg.mu_c * count
}

pub fn soft_weight_mask(w: &[f64], t_s: f64, soft_scale: f64, mode: WeightMaskMode) -> Vec<f64> {
    w.iter()
        .map(|&x| match mode {
            WeightMaskMode::Soft => x * sigmoid(soft_scale * (x.abs() - t_s)),
            WeightMaskMode::Hard => {
                if x.abs() >= t_s {
                    x
                } else {
                    0.0
                }
            }
        })
        .collect()
}

/// `−α · mean_i std(M_i) + β · mean_i mean(M_i)` with population standard
/// deviation per layer.
pub fn compactness_penalty(masks: &[Array1<f64>], alpha: f64, beta: f64) -> f64 {
    if masks.is_empty() {
        return 0.0;
    }
    let l = masks.len() as f64;
    let (mut std_sum, mut mean_sum) = (0.0, 0.0);
    for m in masks {
        let n = m.len() as f64;
        let mean = m.sum() / n;
        let var = m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        std_sum += var.sqrt();
        mean_sum += mean;
    }
    -alpha * std_sum / l + beta * mean_sum / l
}

/// Graph form of [`sparsity_penalty`] over several weight matrices; `t_s`
/// is a `1 × 1` node.
pub fn sparsity_penalty_graph(g: &Graph, weights: &[Var], t_s: Var, cfg: &PenaltyConfig) -> Var {
    let mut l1 = Vec::with_capacity(weights.len());
    let mut count = Vec::with_capacity(weights.len());
    for &w in weights {
        let a = g.abs(w);
        l1.push(g.sum(a));
        match cfg.count_form {
            CountForm::PerWeight => {
                let below = g.add_scalar(g.neg(a), t_s);
                count.push(g.sum(g.sigmoid(g.scale(below, cfg.soft_scale))));
            }
            CountForm::Aggregate => {
                let dev = g.abs(g.add_scalar(a, g.neg(t_s)));
                count.push(g.sum(dev));
            }
        }
    }
    let l1 = g.sum(g.concat_cols(&l1));
    let count = g.sum(g.concat_cols(&count));
    let count = match cfg.count_form {
        CountForm::PerWeight => count,
        CountForm::Aggregate => g.sigmoid(g.scale(count, cfg.soft_scale)),
    };
    g.add(g.scale(l1, cfg.mu_1), g.scale(count, cfg.mu_c))
}

/// `w ⊙ σ(s·(|w| − t_s))`.
pub fn soft_weight_mask_graph(g: &Graph, w: Var, t_s: Var, soft_scale: f64) -> Var {
    let margin = g.add_scalar(g.abs(w), g.neg(t_s));
    g.mul(w, g.sigmoid(g.scale(margin, soft_scale)))
}

/// Graph form of [`compactness_penalty`]; each mask is a row node.
pub fn compactness_penalty_graph(g: &Graph, masks: &[Var], alpha: f64, beta: f64) -> Var {
    let l = masks.len() as f64;
    let stds: Vec<Var> = masks.iter().map(|&m| g.std(m)).collect();
    let means: Vec<Var> = masks.iter().map(|&m| g.mean(m)).collect();
    let std_term = g.scale(g.sum(g.concat_cols(&stds)), -alpha / l);
    let mean_term = g.scale(g.sum(g.concat_cols(&means)), beta / l);
    g.add(std_term, mean_term)
}
