//! Feed-forward networks with per-neuron activation mixtures and soft neuron
//! masks.
//!
//! Every hidden neuron computes `gate(mask) · Σ_k α_k · o_k(w·x + b)` where
//! `α = softmax(logits / T)` in soft mode, or the one-hot argmax in hard mode.
//! The output layer is affine.

mod graph;
mod json;

pub use graph::{eval_graph, LayerVars, MlpVars, SoftGate};
pub use json::{mlp_from_json, mlp_to_json};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Candidate activation functions. Ordinals are part of every file format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    LeakyRelu,
    Tanh,
    Sigmoid,
}

impl ActivationKind {
    pub const COUNT: usize = 3;
    pub const ALL: [ActivationKind; 3] = [
        ActivationKind::LeakyRelu,
        ActivationKind::Tanh,
        ActivationKind::Sigmoid,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::LeakyRelu => "leaky_relu",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Sigmoid => "sigmoid",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "leaky_relu" | "leakyrelu" | "lrelu" => Some(ActivationKind::LeakyRelu),
            "tanh" => Some(ActivationKind::Tanh),
            "sigmoid" => Some(ActivationKind::Sigmoid),
            _ => None,
        }
    }

    pub fn apply(self, x: f64, leaky_slope: f64) -> f64 {
        match self {
            ActivationKind::LeakyRelu => {
                if x >= 0.0 {
                    x
                } else {
                    leaky_slope * x
                }
            }
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Sigmoid => sigmoid(x),
        }
    }

    /// One-hot logits row selecting this activation.
    pub fn one_hot(self) -> [f64; 3] {
        let mut row = [0.0; 3];
        row[self.index()] = 1.0;
        row
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    Soft,
    Hard,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub temperature: f64,
    pub leaky_slope: f64,
    pub mask_mode: MaskMode,
    pub mask_sharpness: f64,
    pub neuron_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            temperature: 1.0,
            leaky_slope: 0.01,
            mask_mode: MaskMode::Soft,
            mask_sharpness: 20.0,
            neuron_threshold: 0.5,
        }
    }
}

impl EvalConfig {
    /// Hard masks and argmax activations.
    pub fn hard() -> Self {
        EvalConfig {
            mask_mode: MaskMode::Hard,
            ..Self::default()
        }
    }

    pub fn soft(temperature: f64) -> Self {
        EvalConfig {
            temperature,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Config(format!(
                "leaky slope must lie in (0, 1), got {}",
                self.leaky_slope
            )));
        }
        if !(self.mask_sharpness > 0.0) {
            return Err(Error::Config("mask sharpness must be positive".into()));
        }
        Ok(())
    }
}

/// Softmax of `logits / temperature`.
pub fn mixture_weights(logits: ArrayView1<f64>, temperature: f64) -> [f64; 3] {
    let mut w = [0.0; 3];
    let m = logits.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l / temperature));
    let mut total = 0.0;
    for (k, &l) in logits.iter().enumerate().take(3) {
        w[k] = (l / temperature - m).exp();
        total += w[k];
    }
    for e in &mut w {
        *e /= total;
    }
    w
}

/// Index of the largest logit; ties go to the lower index.
pub fn argmax_activation(logits: ArrayView1<f64>) -> ActivationKind {
    let mut best = 0;
    for k in 1..logits.len().min(3) {
        if logits[k] > logits[best] {
            best = k;
        }
    }
    ActivationKind::ALL[best]
}

/// Output of one neuron given its pre-activation and activation logits.
pub fn neuron_output(pre_activation: f64, act_logits: ArrayView1<f64>, temperature: f64, leaky_slope: f64) -> f64 {
    let alpha = mixture_weights(act_logits, temperature);
    ActivationKind::ALL
        .iter()
        .zip(alpha)
        .map(|(kind, a)| a * kind.apply(pre_activation, leaky_slope))
        .sum()
}

/// Multiplier applied to a neuron's output.
///
/// In soft mode the mask passes through `σ(sharpness · (m − t_n))`, except
/// that exactly 0 and exactly 1 are hard states and map to themselves.
pub fn soft_neuron_gate(mask_value: f64, mode: MaskMode, threshold: f64, sharpness: f64) -> f64 {
    match mode {
        MaskMode::Hard => {
            if mask_value >= threshold {
                1.0
            } else {
                0.0
            }
        }
        MaskMode::Soft => {
            if mask_value == 0.0 || mask_value == 1.0 {
                mask_value
            } else {
                sigmoid(sharpness * (mask_value - threshold))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenLayer {
    /// `fan_in × width`
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    /// `width × 3`, one row of unnormalized logits per neuron.
    pub act_logits: Array2<f64>,
    /// Soft activity indicator per neuron, in `[0, 1]`.
    pub neuron_mask: Array1<f64>,
}

impl HiddenLayer {
    pub fn width(&self) -> usize {
        self.biases.len()
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    /// Layer where every neuron is active and uses `kind`.
    pub fn uniform(weights: Array2<f64>, biases: Array1<f64>, kind: ActivationKind) -> Self {
        let n = biases.len();
        let hot = kind.one_hot();
        HiddenLayer {
            weights,
            biases,
            act_logits: Array2::from_shape_fn((n, 3), |(_, k)| hot[k]),
            neuron_mask: Array1::ones(n),
        }
    }

    pub fn activation(&self, neuron: usize) -> ActivationKind {
        argmax_activation(self.act_logits.row(neuron))
    }
}

/// A feed-forward regression network.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub input_dim: usize,
    pub output_dim: usize,
    pub layers: Vec<HiddenLayer>,
    /// `width_last × output_dim` (or `input_dim × output_dim` without hidden layers)
    pub output_weights: Array2<f64>,
    pub output_biases: Array1<f64>,
}

impl Mlp {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        layers: Vec<HiddenLayer>,
        output_weights: Array2<f64>,
        output_biases: Array1<f64>,
    ) -> Result<Self> {
        let mlp = Mlp {
            input_dim,
            output_dim,
            layers,
            output_weights,
            output_biases,
        };
        mlp.validate()?;
        Ok(mlp)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(HiddenLayer::width).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidNetwork(msg));
        if self.input_dim == 0 || self.output_dim == 0 {
            return bad("input and output dimensions must be positive".into());
        }
        let mut fan_in = self.input_dim;
        for (j, layer) in self.layers.iter().enumerate() {
            let n = layer.width();
            if layer.weights.dim() != (fan_in, n) {
                return bad(format!(
                    "layer {j}: weights {:?}, expected ({fan_in}, {n})",
                    layer.weights.dim()
                ));
            }
            if layer.act_logits.dim() != (n, ActivationKind::COUNT) {
                return bad(format!("layer {j}: activation logits {:?}", layer.act_logits.dim()));
            }
            if layer.neuron_mask.len() != n {
                return bad(format!("layer {j}: mask length {}", layer.neuron_mask.len()));
            }
            if layer.neuron_mask.iter().any(|&m| !(0.0..=1.0).contains(&m)) {
                return bad(format!("layer {j}: mask entries must lie in [0, 1]"));
            }
            let finite = layer.weights.iter().chain(layer.biases.iter()).chain(layer.act_logits.iter());
            if finite.into_iter().any(|v| !v.is_finite()) {
                return bad(format!("layer {j}: non-finite parameter"));
            }
            fan_in = n;
        }
        if self.output_weights.dim() != (fan_in, self.output_dim) {
            return bad(format!(
                "output weights {:?}, expected ({fan_in}, {})",
                self.output_weights.dim(),
                self.output_dim
            ));
        }
        if self.output_biases.len() != self.output_dim {
            return bad("output bias length".into());
        }
        if self
            .output_weights
            .iter()
            .chain(self.output_biases.iter())
            .any(|v| !v.is_finite())
        {
            return bad("output layer: non-finite parameter".into());
        }
        Ok(())
    }

    /// Every weight matrix, hidden layers first.
    pub fn weight_matrices(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.layers
            .iter()
            .map(|l| &l.weights)
            .chain(std::iter::once(&self.output_weights))
    }

    pub fn weight_count(&self) -> usize {
        self.weight_matrices().map(|w| w.len()).sum()
    }

    pub fn nonzero_weights(&self) -> usize {
        self.weight_matrices()
            .map(|w| w.iter().filter(|&&v| v != 0.0).count())
            .sum()
    }

    pub fn active_neurons(&self, threshold: f64) -> Vec<usize> {
        self.layers
            .iter()
            .map(|l| l.neuron_mask.iter().filter(|&&m| m >= threshold).count())
            .collect()
    }

    /// Copy with inactive neurons (mask below `threshold`) removed and the
    /// surviving masks set to 1.
    pub fn pruned(&self, threshold: f64) -> Mlp {
        let mut layers = Vec::with_capacity(self.depth());
        let mut keep_prev: Vec<usize> = (0..self.input_dim).collect();
        for layer in &self.layers {
            let keep: Vec<usize> = (0..layer.width())
                .filter(|&h| layer.neuron_mask[h] >= threshold)
                .collect();
            let weights = layer
                .weights
                .select(Axis(0), &keep_prev)
                .select(Axis(1), &keep);
            layers.push(HiddenLayer {
                weights,
                biases: layer.biases.select(Axis(0), &keep),
                act_logits: layer.act_logits.select(Axis(0), &keep),
                neuron_mask: Array1::ones(keep.len()),
            });
            keep_prev = keep;
        }
        Mlp {
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            layers,
            output_weights: self.output_weights.select(Axis(0), &keep_prev),
            output_biases: self.output_biases.clone(),
        }
    }

    /// Discrete test-time network: masks binarized at `neuron_threshold`,
    /// activations one-hot by argmax, weights with magnitude below
    /// `weight_threshold` zeroed, and every parameter attached to an inactive
    /// neuron zeroed.
    pub fn harden(&self, weight_threshold: Option<f64>, neuron_threshold: f64) -> Mlp {
        let mut out = self.clone();
        let mut prev_active: Vec<bool> = vec![true; self.input_dim];
        for layer in &mut out.layers {
            let active: Vec<bool> = layer.neuron_mask.iter().map(|&m| m >= neuron_threshold).collect();
            for (h, &on) in active.iter().enumerate() {
                let hot = argmax_activation(layer.act_logits.row(h)).one_hot();
                layer.act_logits.row_mut(h).assign(&ndarray::ArrayView1::from(&hot));
                layer.neuron_mask[h] = if on { 1.0 } else { 0.0 };
                if !on {
                    layer.biases[h] = 0.0;
                }
            }
            for ((r, c), w) in layer.weights.indexed_iter_mut() {
                if !prev_active[r] || !active[c] {
                    *w = 0.0;
                } else if let Some(t) = weight_threshold {
                    if w.abs() < t {
                        *w = 0.0;
                    }
                }
            }
            prev_active = active;
        }
        for ((r, _), w) in out.output_weights.indexed_iter_mut() {
            if !prev_active[r] {
                *w = 0.0;
            } else if let Some(t) = weight_threshold {
                if w.abs() < t {
                    *w = 0.0;
                }
            }
        }
        out
    }

    /// Pads every hidden layer to `width` neurons. Added neurons are inactive,
    /// carry zero parameters and select the first activation.
    pub fn padded_to_width(&self, width: usize) -> Result<Mlp> {
        let mut layers = Vec::with_capacity(self.depth());
        let mut fan_in = self.input_dim;
        for layer in &self.layers {
            let n = layer.width();
            if n > width {
                return Err(Error::Layout(format!("layer width {n} exceeds {width}")));
            }
            let mut weights = Array2::zeros((fan_in, width));
            weights
                .slice_mut(ndarray::s![..layer.fan_in(), ..n])
                .assign(&layer.weights);
            let mut biases = Array1::zeros(width);
            biases.slice_mut(ndarray::s![..n]).assign(&layer.biases);
            let mut act_logits = Array2::zeros((width, 3));
            act_logits.slice_mut(ndarray::s![..n, ..]).assign(&layer.act_logits);
            for h in n..width {
                act_logits[[h, 0]] = 1.0;
            }
            let mut neuron_mask = Array1::zeros(width);
            neuron_mask.slice_mut(ndarray::s![..n]).assign(&layer.neuron_mask);
            layers.push(HiddenLayer {
                weights,
                biases,
                act_logits,
                neuron_mask,
            });
            fan_in = width;
        }
        let mut output_weights = Array2::zeros((fan_in, self.output_dim));
        output_weights
            .slice_mut(ndarray::s![..self.output_weights.nrows(), ..])
            .assign(&self.output_weights);
        Mlp::new(
            self.input_dim,
            self.output_dim,
            layers,
            output_weights,
            self.output_biases.clone(),
        )
    }
}

/// Evaluates `mlp` on a batch of inputs (one row per sample).
pub fn eval_mlp(mlp: &Mlp, xs: ArrayView2<f64>, cfg: &EvalConfig) -> Result<Array2<f64>> {
    if xs.ncols() != mlp.input_dim {
        return Err(Error::Shape(format!(
            "inputs have {} columns, network expects {}",
            xs.ncols(),
            mlp.input_dim
        )));
    }
    let mut h = xs.to_owned();
    for layer in &mlp.layers {
        let mut pre = h.dot(&layer.weights);
        pre += &layer.biases;
        for j in 0..layer.width() {
            let gate = soft_neuron_gate(
                layer.neuron_mask[j],
                cfg.mask_mode,
                cfg.neuron_threshold,
                cfg.mask_sharpness,
            );
            let alpha = match cfg.mask_mode {
                MaskMode::Hard => argmax_activation(layer.act_logits.row(j)).one_hot(),
                MaskMode::Soft => mixture_weights(layer.act_logits.row(j), cfg.temperature),
            };
            for v in pre.column_mut(j) {
                let x = *v;
                let mixed: f64 = ActivationKind::ALL
                    .iter()
                    .zip(alpha)
                    .filter(|(_, a)| *a != 0.0)
                    .map(|(kind, a)| a * kind.apply(x, cfg.leaky_slope))
                    .sum();
                *v = gate * mixed;
            }
        }
        h = pre;
    }
    let mut out = h.dot(&mlp.output_weights);
    out += &mlp.output_biases;
    Ok(out)
}

/// `Σ_x ‖a(x) − b(x)‖²` over the rows of `xs`.
pub fn functional_distance(a: &Mlp, b: &Mlp, xs: ArrayView2<f64>, cfg_a: &EvalConfig, cfg_b: &EvalConfig) -> Result<f64> {
    if a.output_dim != b.output_dim {
        return Err(Error::Shape("output dimensions differ".into()));
    }
    let ya = eval_mlp(a, xs, cfg_a)?;
    let yb = eval_mlp(b, xs, cfg_b)?;
    Ok((&ya - &yb).iter().map(|d| d * d).sum())
}
