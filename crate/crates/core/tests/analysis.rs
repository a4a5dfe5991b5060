mod common;

use common::{full_random_mlp, normal_matrix, rng, tiny_model, uniform_inputs};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;
use rand::Rng;
use swatnn_core::analysis::{
    compress, pareto_front, pca_top2, smoothness_probe, split_mlp, CompressConfig, ProbeConfig, TradeoffPoint,
};
use swatnn_core::autoenc::{AutoencoderConfig, AutoencoderModel, Precision};
use swatnn_core::latentopt::{PenaltyConfig, SearchConfig};
use swatnn_core::matrep::RepLayout;
use swatnn_core::netcore::{eval_mlp, EvalConfig};
use swatnn_core::rng::SeedTree;

/// Top two eigenvectors of the population covariance, dense solver.
fn oracle(samples: &Array2<f64>) -> [(f64, Array1<f64>); 2] {
    let (n, d) = samples.dim();
    let centered = samples - &samples.mean_axis(Axis(0)).unwrap();
    let cov = centered.t().dot(&centered) / n as f64;
    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |r, c| cov[[r, c]]));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let pick = |i: usize| {
        let j = order[i];
        (eig.eigenvalues[j], Array1::from_iter(eig.eigenvectors.column(j).iter().copied()))
    };
    [pick(0), pick(1)]
}

fn aligned_distance(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let plus = (a - b).mapv(f64::abs).fold(0.0_f64, |m, &x| m.max(x));
    let minus = (a + b).mapv(f64::abs).fold(0.0_f64, |m, &x| m.max(x));
    plus.min(minus)
}

#[test]
fn pca_matches_a_dense_eigensolver() {
    for (seed, d) in [(1u64, 4usize), (2, 8), (3, 16)] {
        let cloud = normal_matrix((200, d), &mut rng(seed));
        let pca = pca_top2(cloud.view()).unwrap();
        let want = oracle(&cloud);
        for i in 0..2 {
            assert!(aligned_distance(&pca.components[i], &want[i].1) < 1e-6, "d = {d}, component {i}");
            assert!((pca.variances[i] - want[i].0).abs() < 1e-9 * want[0].0);
        }
        assert!(pca.components[0].dot(&pca.components[1]).abs() < 1e-8);
        assert!(!pca.rank_deficient);
    }
}

#[test]
fn pca_examples() {
    let mut r = rng(4);
    let axis = Array2::from_shape_fn((100, 3), |(_, c)| {
        if c == 0 {
            r.random_range(-3.0..3.0)
        } else {
            r.random_range(-1e-3..1e-3)
        }
    });
    let pca = pca_top2(axis.view()).unwrap();
    assert!(pca.components[0][0].abs() > 0.99);

    let u = Array1::from(vec![1.0, 2.0, -2.0]);
    let pair = ndarray::stack![Axis(0), u.view(), (-&u).view()];
    let pca = pca_top2(pair.view()).unwrap();
    assert!(aligned_distance(&pca.components[0], &(&u / 3.0)) < 1e-9);
    assert!(pca.rank_deficient);
    assert!(pca.components[0].dot(&pca.components[1]).abs() < 1e-12);
    assert!((pca.components[1].dot(&pca.components[1]) - 1.0).abs() < 1e-12);
}

#[test]
fn pca_rejects_degenerate_input() {
    assert!(pca_top2(Array2::<f64>::zeros((0, 3)).view()).is_err());
    assert!(pca_top2(Array2::<f64>::zeros((5, 1)).view()).is_err());
    let same = Array2::from_elem((4, 3), 2.0);
    let pca = pca_top2(same.view()).unwrap();
    assert!(pca.rank_deficient);
    assert!(pca.components[0].dot(&pca.components[1]).abs() < 1e-12);
}

fn brute_front(points: &[TradeoffPoint]) -> Vec<usize> {
    let dominated = |p: &TradeoffPoint| {
        points.iter().any(|q| {
            q.mse <= p.mse && q.nonzeros <= p.nonzeros && (q.mse < p.mse || q.nonzeros < p.nonzeros)
        })
    };
    let mut out: Vec<usize> = (0..points.len()).filter(|&i| !dominated(&points[i])).collect();
    out.sort_by(|&a, &b| {
        points[a]
            .nonzeros
            .cmp(&points[b].nonzeros)
            .then(points[a].mse.total_cmp(&points[b].mse))
            .then(a.cmp(&b))
    });
    out
}

proptest! {
    #[test]
    fn pareto_front_equals_brute_force(raw in proptest::collection::vec((0u8..20, 0usize..20), 1..40)) {
        let points: Vec<TradeoffPoint> = raw
            .iter()
            .map(|&(m, nonzeros)| TradeoffPoint { mse: m as f64 / 4.0, nonzeros })
            .collect();
        prop_assert_eq!(pareto_front(&points), brute_front(&points));
    }
}

#[test]
fn pareto_examples() {
    let pts = |rows: &[(f64, usize)]| -> Vec<TradeoffPoint> {
        rows.iter().map(|&(mse, nonzeros)| TradeoffPoint { mse, nonzeros }).collect()
    };
    assert_eq!(pareto_front(&pts(&[(1.0, 5), (2.0, 3), (3.0, 1)])), vec![2, 1, 0]);
    assert_eq!(pareto_front(&pts(&[(1.0, 5), (1.0, 6)])), vec![0]);
}

#[test]
fn splitting_a_nine_layer_network_is_exact_at_every_cut() {
    let layout = RepLayout::new(4, 9, 2, 1).unwrap();
    let deep = full_random_mlp(&layout, 5);
    assert_eq!(deep.depth(), 9);
    let xs = uniform_inputs(64, 2, &mut rng(6));
    let hard = EvalConfig::hard();
    let whole = eval_mlp(&deep, xs.view(), &hard).unwrap();
    for cut in 1..9 {
        let (front, back) = split_mlp(&deep, cut).unwrap();
        assert_eq!(front.depth() + back.depth(), 9);
        let mid = eval_mlp(&front, xs.view(), &hard).unwrap();
        assert_eq!(eval_mlp(&back, mid.view(), &hard).unwrap(), whole, "cut {cut}");
    }
}

#[test]
fn smoothness_grid_contract() {
    let model = tiny_model(2);
    let cfg = ProbeConfig {
        decoder: 2,
        neighbors: 20,
        inputs: 64,
        ..ProbeConfig::default()
    };
    let grid = smoothness_probe(&model, None, &cfg).unwrap();
    assert_eq!(grid.mse.dim(), (25, 25));
    assert_eq!(grid.offsets.first(), Some(&-3.0));
    assert_eq!(grid.offsets.last(), Some(&3.0));
    assert_eq!(grid.mse[[12, 12]], 0.0);
    assert!(grid.mse.iter().all(|x| x.is_finite() && *x >= 0.0));
    assert_eq!(grid, smoothness_probe(&model, None, &cfg).unwrap());
}

fn interface_model() -> AutoencoderModel {
    let cfg = AutoencoderConfig {
        d_model: 32,
        n_heads: 2,
        encoder_blocks: 1,
        decoder_blocks: 1,
        ffn_mult: 2,
        layout: RepLayout::new(3, 2, 3, 3).unwrap(),
        precision: Precision::F64,
    };
    AutoencoderModel::init(cfg, &SeedTree::new(8)).unwrap()
}

#[test]
fn compression_runs_end_to_end() {
    let model = interface_model();
    let teacher = full_random_mlp(&RepLayout::new(3, 4, 2, 1).unwrap(), 9);
    let cfg = CompressConfig {
        cuts: vec![2],
        target_depths: vec![1, 2],
        train_count: 32,
        test_count: 16,
        seed: 1,
        search: SearchConfig::new(5, 0.1, 0, Vec::new(), PenaltyConfig::none()),
    };
    let out = compress(&teacher, &model, &cfg).unwrap();
    assert_eq!(out.parts.len(), 2);
    assert_eq!(out.network.depth(), 3);
    assert_eq!((out.network.input_dim, out.network.output_dim), (2, 1));
    let r = &out.report;
    assert_eq!(r.original_depth, 4);
    assert_eq!(r.compressed_depth, 3);
    assert_eq!(r.parts[0].output_dim, 3);
    assert_eq!(r.parts[1].trajectory.len(), 5);
    assert!(r.final_test_mse.is_finite() && r.relative_test_mse.is_finite());
}

#[test]
fn compression_rejects_interfaces_wider_than_the_layout() {
    let model = tiny_model(1);
    let teacher = full_random_mlp(&RepLayout::new(3, 4, 2, 1).unwrap(), 9);
    let cfg = CompressConfig {
        cuts: vec![2],
        target_depths: vec![1, 1],
        train_count: 8,
        test_count: 4,
        seed: 1,
        search: SearchConfig::new(2, 0.1, 0, Vec::new(), PenaltyConfig::none()),
    };
    assert!(compress(&teacher, &model, &cfg).is_err());
    let mismatched = CompressConfig {
        target_depths: vec![1],
        ..cfg
    };
    assert!(compress(&teacher, &model, &mismatched).is_err());
}
