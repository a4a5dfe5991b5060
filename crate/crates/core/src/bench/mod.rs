//! Two-input regression tasks: benchmark functions, sampling,
//! normalization and persistence.

mod codec;
mod functions;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use codec::{
    assemble, decode_dataset, decode_sidecar, encode_dataset, encode_sidecar, load_dataset, save_dataset, DatasetArrays,
    Sidecar, DATASET_MAGIC,
};
pub use functions::{builtin_function, Builtin, TaskFunction, BUILTINS};

use crate::error::{Error, Result};
use crate::rng::SeedTree;

/// Margin added to the largest output magnitude so normalized targets stay
/// strictly inside `(−1, 1)`.
pub const OUTPUT_MARGIN: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub name: String,
    /// Identifier of a builtin function, or of a user function passed to
    /// [`generate_with`].
    pub function: String,
    pub domain: [(f64, f64); 2],
    pub train_count: usize,
    pub test_count: usize,
    pub seed: u64,
}

impl TaskSpec {
    /// Task on a builtin function with its default box and standard counts.
    pub fn builtin(function: &str, seed: u64) -> Result<Self> {
        let f = builtin_function(function).ok_or_else(|| Error::UnknownTask(function.to_string()))?;
        Ok(TaskSpec {
            name: function.to_string(),
            function: function.to_string(),
            domain: f.default_domain(),
            train_count: 3750,
            test_count: 1250,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_count == 0 || self.test_count == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        for (lo, hi) in self.domain {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("degenerate domain interval ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// Affine maps between raw and normalized coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub input_domain: [(f64, f64); 2],
    /// Raw outputs are divided by this.
    pub output_scale: f64,
}

impl Normalization {
    pub fn normalize_x(&self, raw: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (i, (lo, hi)) in self.input_domain.iter().enumerate() {
            out[i] = 2.0 * (raw[i] - lo) / (hi - lo) - 1.0;
        }
        out
    }

    pub fn denormalize_x(&self, x: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (i, (lo, hi)) in self.input_domain.iter().enumerate() {
            out[i] = lo + (x[i] + 1.0) * 0.5 * (hi - lo);
        }
        out
    }

    pub fn normalize_y(&self, raw: f64) -> f64 {
        raw / self.output_scale
    }

    pub fn denormalize_y(&self, y: f64) -> f64 {
        y * self.output_scale
    }
}

/// Normalized samples; row `r` of `x_*` pairs with row `r` of `y_*`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskDataset {
    pub spec: TaskSpec,
    pub normalization: Normalization,
    pub x_train: Array2<f64>,
    pub y_train: Array2<f64>,
    pub x_test: Array2<f64>,
    pub y_test: Array2<f64>,
}

impl TaskDataset {
    pub fn input_dim(&self) -> usize {
        self.x_train.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.y_train.ncols()
    }
}

pub fn generate(spec: &TaskSpec) -> Result<TaskDataset> {
    let f = builtin_function(&spec.function).ok_or_else(|| Error::UnknownTask(spec.function.clone()))?;
    generate_with(spec, f)
}

/// Samples inputs uniformly over the box, train and test from separate
/// seed streams, and normalizes with a global output scale of
/// `max |f| + margin`. The maximum covers every sample and the four box
/// corners.
pub fn generate_with(spec: &TaskSpec, f: &dyn TaskFunction) -> Result<TaskDataset> {
    spec.validate()?;
    let seeds = SeedTree::new(spec.seed).child(&spec.name);
    let sample = |label: &str, count: usize| {
        let mut rng = seeds.child(label).rng();
        let mut raw_x = Vec::with_capacity(count);
        let mut raw_y = Vec::with_capacity(count);
        for _ in 0..count {
            let p = [
                rng.random_range(spec.domain[0].0..=spec.domain[0].1),
                rng.random_range(spec.domain[1].0..=spec.domain[1].1),
            ];
            raw_y.push(f.eval(p[0], p[1]));
            raw_x.push(p);
        }
        (raw_x, raw_y)
    };
    let (train_x, train_y) = sample("train", spec.train_count);
    let (test_x, test_y) = sample("test", spec.test_count);

    let [(a0, b0), (a1, b1)] = spec.domain;
    let corners = [(a0, a1), (a0, b1), (b0, a1), (b0, b1)].map(|(x, y)| f.eval(x, y));
    let max_abs = train_y
        .iter()
        .chain(&test_y)
        .chain(&corners)
        .map(|y| y.abs())
        .fold(0.0, f64::max);
    if !max_abs.is_finite() {
        return Err(Error::Config(format!("function {} is not finite on its domain", f.id())));
    }
    let normalization = Normalization {
        input_domain: spec.domain,
        output_scale: max_abs + OUTPUT_MARGIN,
    };
    let to_arrays = |xs: &[[f64; 2]], ys: &[f64]| {
        let x = Array2::from_shape_fn((xs.len(), 2), |(r, c)| normalization.normalize_x(xs[r])[c]);
        let y = Array2::from_shape_fn((ys.len(), 1), |(r, _)| normalization.normalize_y(ys[r]));
        (x, y)
    };
    let (x_train, y_train) = to_arrays(&train_x, &train_y);
    let (x_test, y_test) = to_arrays(&test_x, &test_y);
    Ok(TaskDataset {
        spec: spec.clone(),
        normalization,
        x_train,
        y_train,
        x_test,
        y_test,
    })
}

/// Every builtin function with its default box, standard counts and a
/// fixed per-task seed.
pub fn builtin_suite() -> Vec<TaskSpec> {
    BUILTINS
        .iter()
        .enumerate()
        .map(|(i, b)| TaskSpec::builtin(b.id, 1000 + i as u64).expect("builtin"))
        .collect()
}
