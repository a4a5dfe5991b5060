//! Reference methods: direct training of a fixed-activation network, and
//! ADMM magnitude pruning of a trained one.

use ndarray::{Array1, Array2, ArrayView2, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};
use swatnn_autograd::Graph;

use crate::error::{Error, Result};
use crate::latentopt::DataSplit;
use crate::netcore::{eval_graph, eval_mlp, ActivationKind, EvalConfig, HiddenLayer, Mlp, MlpVars};
use crate::rng::SeedTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub depth: usize,
    pub width: usize,
    pub activation: ActivationKind,
}

impl Architecture {
    /// Parses `depth,width,activation`, e.g. `2,5,tanh`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("architecture `{s}` is not depth,width,activation"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let arch = Architecture {
            depth: parts[0].parse().map_err(|_| bad())?,
            width: parts[1].parse().map_err(|_| bad())?,
            activation: ActivationKind::from_name(parts[2]).ok_or_else(bad)?,
        };
        if arch.depth == 0 || arch.width == 0 {
            return Err(bad());
        }
        Ok(arch)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraditionalConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Initial parameters are uniform in `[−init_range, init_range]`.
    #[serde(default = "default_init_range")]
    pub init_range: f64,
}

fn default_init_range() -> f64 {
    0.5
}

impl Default for TraditionalConfig {
    fn default() -> Self {
        TraditionalConfig {
            epochs: 6000,
            lr: 0.01,
            seed: 0,
            init_range: default_init_range(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineMetrics {
    pub train_mse: f64,
    pub test_mse: f64,
    pub nonzeros: usize,
    pub loss_trajectory: Vec<f64>,
    pub diverged: bool,
}

pub fn mse(mlp: &Mlp, xs: ArrayView2<f64>, ys: ArrayView2<f64>) -> Result<f64> {
    let pred = eval_mlp(mlp, xs, &EvalConfig::hard())?;
    Ok((&pred - &ys).mapv(|d| d * d).mean().unwrap_or(0.0))
}

fn metrics(mlp: &Mlp, data: DataSplit, loss_trajectory: Vec<f64>, diverged: bool) -> Result<BaselineMetrics> {
    Ok(BaselineMetrics {
        train_mse: mse(mlp, data.x_train, data.y_train)?,
        test_mse: mse(mlp, data.x_test, data.y_test)?,
        nonzeros: mlp.nonzero_weights(),
        loss_trajectory,
        diverged,
    })
}

type MseGrads = (f64, Vec<Array2<f64>>, Vec<Array1<f64>>);

/// Mean squared error on `(xs, ys)` and its gradient with respect to every
/// weight matrix (hidden layers first) and bias vector.
fn mse_and_grads(mlp: &Mlp, xs: ArrayView2<f64>, ys: ArrayView2<f64>) -> Result<MseGrads> {
    let g = Graph::new();
    let vars = MlpVars::variables(&g, mlp);
    let pred = eval_graph(&g, &vars, g.constant(xs.to_owned()), &EvalConfig::hard())?;
    let loss = g.mean(g.square(g.sub(pred, g.constant(ys.to_owned()))));
    let value = g.scalar(loss);
    let grads = g.backward(loss);
    let weight_grads = vars
        .weight_vars()
        .into_iter()
        .map(|v| grads.get_or_zeros(v, g.shape(v)))
        .collect();
    let bias_grads = vars
        .layers
        .iter()
        .map(|l| l.biases)
        .chain(std::iter::once(vars.output_biases))
        .map(|v| grads.get_or_zeros(v, g.shape(v)).row(0).to_owned())
        .collect();
    Ok((value, weight_grads, bias_grads))
}

fn weights_mut(mlp: &mut Mlp) -> Vec<&mut Array2<f64>> {
    let Mlp {
        layers, output_weights, ..
    } = mlp;
    layers
        .iter_mut()
        .map(|l| &mut l.weights)
        .chain(std::iter::once(output_weights))
        .collect()
}

fn biases_mut(mlp: &mut Mlp) -> Vec<&mut Array1<f64>> {
    let Mlp { layers, output_biases, .. } = mlp;
    layers
        .iter_mut()
        .map(|l| &mut l.biases)
        .chain(std::iter::once(output_biases))
        .collect()
}

fn sgd_biases(mlp: &mut Mlp, grads: &[Array1<f64>], lr: f64) {
    for (b, g) in biases_mut(mlp).into_iter().zip(grads) {
        b.scaled_add(-lr, g);
    }
}

/// Full-batch gradient descent on training MSE from a uniform random
/// initialization; every neuron uses the architecture's activation.
pub fn train_traditional(arch: &Architecture, data: DataSplit, cfg: &TraditionalConfig) -> Result<(Mlp, BaselineMetrics)> {
    let (i, o) = (data.x_train.ncols(), data.y_train.ncols());
    let mut rng = SeedTree::new(cfg.seed).child("traditional-init").rng();
    let r = cfg.init_range;
    let mut draw = |shape: (usize, usize)| Array2::from_shape_simple_fn(shape, || rng.random_range(-r..=r));
    let mut layers = Vec::with_capacity(arch.depth);
    let mut fan_in = i;
    for _ in 0..arch.depth {
        let weights = draw((fan_in, arch.width));
        let biases = draw((1, arch.width)).row(0).to_owned();
        layers.push(HiddenLayer::uniform(weights, biases, arch.activation));
        fan_in = arch.width;
    }
    let output_weights = draw((fan_in, o));
    let output_biases = draw((1, o)).row(0).to_owned();
    let mut mlp = Mlp::new(i, o, layers, output_weights, output_biases)?;

    let mut trajectory = Vec::with_capacity(cfg.epochs);
    let mut diverged = false;
    for _ in 0..cfg.epochs {
        let (loss, wg, bg) = mse_and_grads(&mlp, data.x_train, data.y_train)?;
        if !loss.is_finite() {
            diverged = true;
            break;
        }
        trajectory.push(loss);
        let mut next = mlp.clone();
        for (w, g) in weights_mut(&mut next).into_iter().zip(&wg) {
            w.scaled_add(-cfg.lr, g);
        }
        sgd_biases(&mut next, &bg, cfg.lr);
        if weights_mut(&mut next).iter().any(|w| w.iter().any(|x| !x.is_finite())) {
            diverged = true;
            break;
        }
        mlp = next;
    }
    let m = metrics(&mlp, data, trajectory, diverged)?;
    Ok((mlp, m))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmmConfig {
    pub rho: f64,
    pub threshold: f64,
    pub outer_iters: usize,
    pub inner_steps: usize,
    pub inner_lr: f64,
    pub finetune_steps: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho: 2.0,
            threshold: 0.1,
            outer_iters: 20,
            inner_steps: 200,
            inner_lr: 0.01,
            finetune_steps: 500,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.threshold >= 0.0) || !(self.inner_lr > 0.0) {
            return Err(Error::Config("need rho > 0, threshold ≥ 0 and inner_lr > 0".into()));
        }
        Ok(())
    }
}

/// Zeroes entries with magnitude below `threshold`.
pub fn admm_project(w: &Array2<f64>, threshold: f64) -> Array2<f64> {
    w.mapv(|x| if x.abs() < threshold { 0.0 } else { x })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmMetrics {
    pub nonzeros_before: usize,
    pub nonzeros_after: usize,
    pub train_mse_before: f64,
    pub test_mse_before: f64,
    pub train_mse_after: f64,
    pub test_mse_after: f64,
    pub diverged: bool,
}

/// ADMM on weight matrices with one global magnitude threshold, followed
/// by fine-tuning of the surviving weights. Weights that are already zero
/// stay zero throughout; biases are never pruned.
pub fn admm_prune(mlp: &Mlp, data: DataSplit, cfg: &AdmmConfig) -> Result<(Mlp, AdmmMetrics)> {
    cfg.validate()?;
    let (xs, ys) = (data.x_train, data.y_train);
    let mut net = mlp.clone();
    let allowed: Vec<Array2<bool>> = mlp.weight_matrices().map(|w| w.mapv(|x| x != 0.0)).collect();
    let mut z: Vec<Array2<f64>> = mlp.weight_matrices().map(|w| admm_project(w, cfg.threshold)).collect();
    let mut u: Vec<Array2<f64>> = z.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
    let mut diverged = false;

    let step = |net: &mut Mlp, grads: &[Array2<f64>], masks: &[Array2<bool>], lr: f64| {
        for ((w, g), m) in weights_mut(net).into_iter().zip(grads).zip(masks) {
            Zip::from(w).and(g).and(m).for_each(|w, &g, &keep| {
                *w = if keep { *w - lr * g } else { 0.0 };
            });
        }
    };

    'outer: for _ in 0..cfg.outer_iters {
        for _ in 0..cfg.inner_steps {
            let (loss, mut wg, bg) = mse_and_grads(&net, xs, ys)?;
            if !loss.is_finite() {
                diverged = true;
                break 'outer;
            }
            for (k, (g, w)) in wg.iter_mut().zip(net.weight_matrices()).enumerate() {
                Zip::from(g)
                    .and(w)
                    .and(&z[k])
                    .and(&u[k])
                    .for_each(|g, &w, &z, &u| *g += cfg.rho * (w - z + u));
            }
            step(&mut net, &wg, &allowed, cfg.inner_lr);
            sgd_biases(&mut net, &bg, cfg.inner_lr);
        }
        for (k, w) in net.weight_matrices().enumerate() {
            z[k] = admm_project(&(w + &u[k]), cfg.threshold);
            u[k] = &u[k] + w - &z[k];
        }
    }

    let keep: Vec<Array2<bool>> = z
        .iter()
        .zip(&allowed)
        .map(|(z, a)| Zip::from(z).and(a).map_collect(|&z, &a| a && z != 0.0))
        .collect();
    let zeros: Vec<Array2<f64>> = keep.iter().map(|k| Array2::zeros(k.raw_dim())).collect();
    step(&mut net, &zeros, &keep, 0.0);
    for _ in 0..cfg.finetune_steps {
        if diverged {
            break;
        }
        let (loss, wg, bg) = mse_and_grads(&net, xs, ys)?;
        if !loss.is_finite() {
            diverged = true;
            break;
        }
        step(&mut net, &wg, &keep, cfg.inner_lr);
        sgd_biases(&mut net, &bg, cfg.inner_lr);
    }

    let metrics = AdmmMetrics {
        nonzeros_before: mlp.nonzero_weights(),
        nonzeros_after: net.nonzero_weights(),
        train_mse_before: mse(mlp, xs, ys)?,
        test_mse_before: mse(mlp, data.x_test, data.y_test)?,
        train_mse_after: mse(&net, xs, ys)?,
        test_mse_after: mse(&net, data.x_test, data.y_test)?,
        diverged,
    };
    Ok((net, metrics))
}
