use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autoenc::AutoencoderModel;
use crate::error::{Error, Result};
use crate::latentopt::{run_search, DataSplit, SearchConfig};
use crate::netcore::{eval_mlp, EvalConfig, Mlp};
use crate::rng::SeedTree;

/// Splits after hidden layer `cut` (1-based). The front part ends with an
/// identity readout of that layer, so composing the two parts reproduces
/// the original network exactly.
pub fn split_mlp(mlp: &Mlp, cut: usize) -> Result<(Mlp, Mlp)> {
    mlp.validate()?;
    if cut == 0 || cut >= mlp.depth() {
        return Err(Error::Config(format!(
            "cut {cut} must lie strictly inside 1..{}",
            mlp.depth()
        )));
    }
    let width = mlp.layers[cut - 1].width();
    let front = Mlp::new(
        mlp.input_dim,
        width,
        mlp.layers[..cut].to_vec(),
        Array2::eye(width),
        Array1::zeros(width),
    )?;
    let back = Mlp::new(
        width,
        mlp.output_dim,
        mlp.layers[cut..].to_vec(),
        mlp.output_weights.clone(),
        mlp.output_biases.clone(),
    )?;
    Ok((front, back))
}

/// Chains networks by folding each linear readout into the next network's
/// first hidden layer.
pub fn compose(parts: &[Mlp]) -> Result<Mlp> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| Error::Config("nothing to compose".into()))?;
    let mut acc = first.clone();
    for next in rest {
        if next.input_dim != acc.output_dim {
            return Err(Error::InvalidNetwork(format!(
                "part emits {} values but the next expects {}",
                acc.output_dim, next.input_dim
            )));
        }
        let readout_w = acc.output_weights.clone();
        let readout_b = acc.output_biases.clone();
        let mut layers = next.layers.clone();
        let (ow, ob) = match layers.first_mut() {
            Some(head) => {
                let weights = readout_w.dot(&head.weights);
                head.biases = readout_b.dot(&head.weights) + &head.biases;
                head.weights = weights;
                (next.output_weights.clone(), next.output_biases.clone())
            }
            None => (
                readout_w.dot(&next.output_weights),
                readout_b.dot(&next.output_weights) + &next.output_biases,
            ),
        };
        acc.layers.extend(layers);
        acc = Mlp::new(acc.input_dim, next.output_dim, acc.layers, ow, ob)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressConfig {
    /// 1-based hidden layers after which the teacher is split.
    pub cuts: Vec<usize>,
    /// Hidden-layer count requested for each part.
    pub target_depths: Vec<usize>,
    pub train_count: usize,
    pub test_count: usize,
    pub seed: u64,
    /// Its decoder list is replaced by each part's target depth.
    pub search: SearchConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartFidelity {
    pub part: usize,
    pub original_depth: usize,
    pub target_depth: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub train_mse: f64,
    pub test_mse: f64,
    pub nonzeros: usize,
    pub diverged: bool,
    /// Search loss per step for this part.
    pub trajectory: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub parts: Vec<PartFidelity>,
    pub original_depth: usize,
    pub compressed_depth: usize,
    pub original_nonzeros: usize,
    pub compressed_nonzeros: usize,
    pub final_test_mse: f64,
    /// Final test MSE over the variance of the teacher's test outputs.
    pub relative_test_mse: f64,
}

#[derive(Clone, Debug)]
pub struct Compressed {
    pub parts: Vec<Mlp>,
    pub network: Mlp,
    pub report: FidelityReport,
}

fn mse(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    (&a - &b).mapv(|d| d * d).mean().unwrap_or(0.0)
}

/// Splits `teacher` at the cuts, replaces each part by a shallower network
/// found by latent search against that part's own input/output behavior on
/// the teacher's activations, and composes the results.
pub fn compress(teacher: &Mlp, model: &AutoencoderModel, cfg: &CompressConfig) -> Result<Compressed> {
    if cfg.target_depths.len() != cfg.cuts.len() + 1 {
        return Err(Error::Config(format!(
            "{} cuts need {} target depths, got {}",
            cfg.cuts.len(),
            cfg.cuts.len() + 1,
            cfg.target_depths.len()
        )));
    }
    if cfg.cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("cuts must be strictly increasing".into()));
    }
    if cfg.train_count == 0 || cfg.test_count == 0 {
        return Err(Error::Config("train and test counts must be positive".into()));
    }
    let mut teacher_parts = Vec::with_capacity(cfg.target_depths.len());
    let mut rest = teacher.clone();
    let mut consumed = 0;
    for &cut in &cfg.cuts {
        let (front, back) = split_mlp(&rest, cut - consumed)?;
        teacher_parts.push(front);
        rest = back;
        consumed = cut;
    }
    teacher_parts.push(rest);

    let seeds = SeedTree::new(cfg.seed).child("compress");
    let draw = |label: &str, n: usize| {
        let mut rng = seeds.child(label).rng();
        Array2::from_shape_simple_fn((n, teacher.input_dim), || rng.random_range(-1.0..=1.0))
    };
    let (mut x_train, mut x_test) = (draw("train", cfg.train_count), draw("test", cfg.test_count));
    let (teacher_in, mut student_in) = (x_test.clone(), x_test.clone());
    let hard = EvalConfig::hard();

    let mut parts = Vec::with_capacity(teacher_parts.len());
    let mut fidelity = Vec::with_capacity(teacher_parts.len());
    for (p, (part, &target)) in teacher_parts.iter().zip(&cfg.target_depths).enumerate() {
        let y_train = eval_mlp(part, x_train.view(), &hard)?;
        let y_test = eval_mlp(part, x_test.view(), &hard)?;
        let search = SearchConfig {
            decoders: vec![target],
            seed: cfg.search.seed.wrapping_add(p as u64),
            ..cfg.search.clone()
        };
        let split = DataSplit {
            x_train: x_train.view(),
            y_train: y_train.view(),
            x_test: x_test.view(),
            y_test: y_test.view(),
        };
        let result = run_search(model, split, &search)?;
        let run = result.runs.into_iter().next().ok_or(Error::NoResult)?;
        student_in = eval_mlp(&run.mlp, student_in.view(), &hard)?;
        fidelity.push(PartFidelity {
            part: p,
            original_depth: part.depth(),
            target_depth: target,
            input_dim: part.input_dim,
            output_dim: part.output_dim,
            train_mse: run.train_mse,
            test_mse: run.test_mse,
            nonzeros: run.nonzeros,
            diverged: run.diverged,
            trajectory: run.trajectory,
        });
        parts.push(run.mlp);
        x_train = y_train;
        x_test = y_test;
    }

    let network = compose(&parts)?;
    let teacher_out = eval_mlp(teacher, teacher_in.view(), &hard)?;
    let final_test_mse = mse(student_in.view(), teacher_out.view());
    let variance = teacher_out.var(0.0).max(1e-12);
    let report = FidelityReport {
        parts: fidelity,
        original_depth: teacher.depth(),
        compressed_depth: network.depth(),
        original_nonzeros: teacher.nonzero_weights(),
        compressed_nonzeros: network.nonzero_weights(),
        final_test_mse,
        relative_test_mse: final_test_mse / variance,
    };
    Ok(Compressed {
        parts,
        network,
        report,
    })
}
