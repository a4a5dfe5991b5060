use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedTree;

pub const PCA_MAX_ITERS: usize = 1000;
pub const PCA_TOLERANCE: f64 = 1e-10;

/// Leading two principal directions of a sample cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub components: [Array1<f64>; 2],
    /// Population variances along each component.
    pub variances: [f64; 2],
    /// The centered cloud spans fewer than two dimensions; the missing
    /// directions are orthonormal completions.
    pub rank_deficient: bool,
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub fn canonical_sign(v: &mut Array1<f64>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

fn orthogonalize(v: &mut Array1<f64>, against: &[&Array1<f64>]) {
    for u in against {
        let d = v.dot(*u);
        v.scaled_add(-d, *u);
    }
}

/// Unit vector orthogonal to `against`, built from the standard basis vector
/// least aligned with them.
fn completion(dim: usize, against: &[&Array1<f64>]) -> Array1<f64> {
    let mut order: Vec<usize> = (0..dim).collect();
    let weight = |j: usize| against.iter().map(|u| u[j].abs()).sum::<f64>();
    order.sort_by(|&a, &b| weight(a).total_cmp(&weight(b)).then(a.cmp(&b)));
    for j in order {
        let mut v = Array1::zeros(dim);
        v[j] = 1.0;
        orthogonalize(&mut v, against);
        orthogonalize(&mut v, against);
        let n = v.dot(&v).sqrt();
        if n > 1e-8 {
            v /= n;
            canonical_sign(&mut v);
            return v;
        }
    }
    unreachable!("dimension exceeds the number of constraints")
}

/// Power iteration on the covariance of `centered`, restricted to the
/// orthogonal complement of `against`. Returns `None` when that restriction
/// carries no variance.
fn dominant(centered: &Array2<f64>, start: &Array1<f64>, against: &[&Array1<f64>], scale: f64) -> Option<(Array1<f64>, f64)> {
    let n = centered.nrows() as f64;
    let apply = |v: &Array1<f64>| centered.t().dot(&centered.dot(v)) / n;
    let mut v = start.clone();
    orthogonalize(&mut v, against);
    let norm = v.dot(&v).sqrt();
    if norm == 0.0 {
        return None;
    }
    v /= norm;
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    for _ in 0..PCA_MAX_ITERS {
        let mut w = apply(&v);
        orthogonalize(&mut w, against);
        let norm = w.dot(&w).sqrt();
        if norm <= floor {
            return None;
        }
        w /= norm;
        canonical_sign(&mut w);
        let delta = (&w - &v).mapv(|x| x * x).sum().sqrt();
        v = w;
        if delta < PCA_TOLERANCE {
            break;
        }
    }
    let variance = v.dot(&apply(&v));
    Some((v, variance))
}

/// Top two principal components by power iteration with deflation.
pub fn pca_top2(samples: ArrayView2<f64>) -> Result<Pca> {
    let (n, dim) = samples.dim();
    if n == 0 || dim < 2 {
        return Err(Error::Shape(format!("need at least one sample of dimension ≥ 2, got {n} × {dim}")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Shape("samples must be finite".into()));
    }
    let mean = samples.mean_axis(Axis(0)).expect("nonempty");
    let centered = &samples - &mean;
    let total = centered.mapv(|x| x * x).sum() / n as f64;
    let mut rng = SeedTree::new(0).child("pca-start").rng();
    let start = Array1::from_shape_simple_fn(dim, || StandardNormal.sample(&mut rng));

    let mut rank_deficient = false;
    let (first, var1) = match dominant(&centered, &start, &[], total) {
        Some(r) => r,
        None => {
            rank_deficient = true;
            (completion(dim, &[]), 0.0)
        }
    };
    let (second, var2) = match dominant(&centered, &start, &[&first], total) {
        Some(r) => r,
        None => {
            rank_deficient = true;
            (completion(dim, &[&first]), 0.0)
        }
    };
    Ok(Pca {
        components: [first, second],
        variances: [var1, var2],
        rank_deficient,
    })
}
