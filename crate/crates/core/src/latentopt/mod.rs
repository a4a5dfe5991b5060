//! Gradient search over a frozen latent space for a network that fits a
//! task while staying sparse and compact.

mod penalty;
mod search;
mod select;

use serde::{Deserialize, Serialize};

pub use penalty::{
    compactness_penalty, compactness_penalty_graph, soft_weight_mask, soft_weight_mask_graph, sparsity_penalty,
    sparsity_penalty_graph, WeightMaskMode,
};
pub use search::{run_search, search_loss, DataSplit, DecoderRun, DecoderSummary, LossParts, SearchResult};
pub use select::{select_best, Candidate};

use crate::error::{Error, Result};
use crate::optim::OptimizerKind;

/// How the soft count of small weights is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountForm {
    /// `Σ_j σ(s·(t_s − |w_j|))`, one soft indicator per weight.
    #[default]
    PerWeight,
    /// `σ(s·‖|w| − t_s‖₁)`, a single sigmoid of the aggregate deviation.
    Aggregate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltyConfig {
    pub lambda_s: f64,
    #[serde(default = "default_mu_1")]
    pub mu_1: f64,
    #[serde(default = "default_mu_c")]
    pub mu_c: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_t_s_init")]
    pub t_s_init: f64,
    #[serde(default = "default_t_n")]
    pub t_n: f64,
    #[serde(default = "default_soft_scale")]
    pub soft_scale: f64,
    #[serde(default)]
    pub count_form: CountForm,
}

fn default_mu_1() -> f64 {
    0.1
}
fn default_mu_c() -> f64 {
    0.01
}
fn default_t_s_init() -> f64 {
    0.05
}
fn default_t_n() -> f64 {
    0.5
}
fn default_soft_scale() -> f64 {
    20.0
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self::none()
    }
}

impl PenaltyConfig {
    fn level(lambda_s: f64, alpha: f64, beta: f64) -> Self {
        PenaltyConfig {
            lambda_s,
            mu_1: default_mu_1(),
            mu_c: default_mu_c(),
            alpha,
            beta,
            t_s_init: default_t_s_init(),
            t_n: default_t_n(),
            soft_scale: default_soft_scale(),
            count_form: CountForm::PerWeight,
        }
    }

    pub fn none() -> Self {
        Self::level(0.0, 0.0, 0.0)
    }

    pub fn small() -> Self {
        Self::level(1e-5, 0.1, 1e-4)
    }

    pub fn medium() -> Self {
        Self::level(1e-4, 0.4, 1e-3)
    }

    pub fn large() -> Self {
        Self::level(1e-3, 0.4, 1e-1)
    }

    /// `none`, `small`, `medium` or `large`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "none" => Some(Self::none()),
            "small" => Some(Self::small()),
            "medium" => Some(Self::medium()),
            "large" => Some(Self::large()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let coefficients = [self.lambda_s, self.mu_1, self.mu_c, self.alpha, self.beta];
        if coefficients.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Config("penalty coefficients must be finite and nonnegative".into()));
        }
        if !(self.soft_scale.is_finite() && self.soft_scale > 0.0) || !self.t_s_init.is_finite() || !self.t_n.is_finite()
        {
            return Err(Error::Config("soft_scale must be positive; thresholds finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealSchedule {
    pub t_init: f64,
    pub t_final: f64,
    pub e_anneal: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            t_init: 1.0,
            t_final: 0.01,
            e_anneal: 3000,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_init >= self.t_final && self.t_init.is_finite()) || self.e_anneal == 0 {
            return Err(Error::Config("need t_init ≥ t_final > 0 and e_anneal > 0".into()));
        }
        Ok(())
    }
}

/// `max(T_final, T_init · (1 − e / E_anneal))`.
pub fn temperature(epoch: u64, sched: &AnnealSchedule) -> f64 {
    let linear = sched.t_init * (1.0 - epoch as f64 / sched.e_anneal as f64);
    linear.max(sched.t_final)
}

/// Reduction of the squared error over samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataReduction {
    /// Squared error averaged over samples.
    #[default]
    Mean,
    /// Squared error summed over samples.
    Sum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub steps: u64,
    pub lr: f64,
    pub seed: u64,
    /// 1-based decoder indices to search; empty means every decoder.
    pub decoders: Vec<usize>,
    pub penalties: PenaltyConfig,
    #[serde(default)]
    pub anneal: AnnealSchedule,
    #[serde(default = "default_tolerance")]
    pub selection_tolerance: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub reduction: DataReduction,
    /// Loss above which a run is stopped and flagged.
    #[serde(default = "default_divergence")]
    pub divergence_threshold: f64,
}

fn default_tolerance() -> f64 {
    0.05
}
fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Sgd
}
fn default_divergence() -> f64 {
    1e6
}

impl Default for SearchConfig {
    /// 2000 steps at learning rate 0.1 through every decoder, no penalties.
    fn default() -> Self {
        Self::new(2000, 0.1, 0, Vec::new(), PenaltyConfig::none())
    }
}

impl SearchConfig {
    pub fn new(steps: u64, lr: f64, seed: u64, decoders: Vec<usize>, penalties: PenaltyConfig) -> Self {
        SearchConfig {
            steps,
            lr,
            seed,
            decoders,
            penalties,
            anneal: AnnealSchedule::default(),
            selection_tolerance: default_tolerance(),
            optimizer: default_optimizer(),
            reduction: DataReduction::Mean,
            divergence_threshold: default_divergence(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if !(self.selection_tolerance >= 0.0) {
            return Err(Error::Config("selection tolerance must be nonnegative".into()));
        }
        self.penalties.validate()?;
        self.anneal.validate()
    }
}
