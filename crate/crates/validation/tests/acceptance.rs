//! Exit-gate checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::{directional_fd, full_random_mlp, normal_matrix, rel_err, rng, soften, tiny_model, uniform_inputs};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{array, Array1, Array2, Axis};
use rand::Rng;
use swatnn_autograd::Graph;
use swatnn_core::analysis::{compress, pca_top2, smoothness_probe, split_mlp, CompressConfig, ProbeConfig};
use swatnn_core::autoenc::{
    default_sampler, mean_min_loss, sample_batch, train_autoencoder, AutoencoderConfig, AutoencoderModel, LossConfig,
    TrainSpec,
};
use swatnn_core::baselines::{admm_prune, AdmmConfig};
use swatnn_core::bench::{generate, TaskSpec};
use swatnn_core::latentopt::{
    compactness_penalty, compactness_penalty_graph, run_search, search_loss, select_best, sparsity_penalty,
    sparsity_penalty_graph, temperature, AnnealSchedule, Candidate, CountForm, DataSplit, PenaltyConfig,
    SearchConfig,
};
use swatnn_core::matrep::{pack, sample_random_mlp, unpack, NetShape, RepLayout, SamplerRanges};
use swatnn_core::netcore::{
    eval_graph, eval_mlp, mixture_weights, ActivationKind, EvalConfig, HiddenLayer, Mlp, MlpVars,
};
use swatnn_core::rng::SeedTree;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn shape_of(m: &Mlp) -> NetShape {
    NetShape {
        input_dim: m.input_dim,
        output_dim: m.output_dim,
        hidden_layers: m.depth(),
    }
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let layout = RepLayout::new(5, 2, 2, 1).unwrap();
    let ranges = SamplerRanges::full(&layout, 2, 1);
    let hard = EvalConfig::hard();
    let mut failures = 0;
    for seed in 0..1000 {
        let mlp = sample_random_mlp(&layout, &ranges, &mut rng(seed)).unwrap();
        let back = unpack(&pack(&mlp, &layout).unwrap(), &layout, shape_of(&mlp), false).unwrap();
        let xs = uniform_inputs(32, mlp.input_dim, &mut rng(seed + 5000));
        let same_output = eval_mlp(&back, xs.view(), &hard).unwrap() == eval_mlp(&mlp, xs.view(), &hard).unwrap();
        if back != mlp || !same_output {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(60),
        format!("1000 networks, {failures} mismatches, {elapsed:.1?}"),
    )
}

fn eval_gradient_error() -> f64 {
    let mlp = soften(full_random_mlp(&RepLayout::new(4, 2, 2, 2).unwrap(), 11), 11);
    let xs = uniform_inputs(8, mlp.input_dim, &mut rng(12));
    let cfg = EvalConfig::soft(0.7);
    let weights = Array2::from_shape_fn((8, mlp.output_dim), |(r, c)| 0.3 + 0.1 * (r + 2 * c) as f64);
    let loss = |m: &Mlp| (&eval_mlp(m, xs.view(), &cfg).unwrap() * &weights).sum();
    let g = Graph::new();
    let vars = MlpVars::variables(&g, &mlp);
    let out = eval_graph(&g, &vars, g.constant(xs.clone()), &cfg).unwrap();
    let grads = g.backward(g.sum(g.mul(out, g.constant(weights.clone()))));
    let mut worst: f64 = 0.0;
    let mut check = |analytic: f64, nudge: &dyn Fn(&mut Mlp, f64)| {
        let numeric = directional_fd(
            |h| {
                let mut m = mlp.clone();
                nudge(&mut m, h);
                loss(&m)
            },
            1e-6,
        );
        worst = worst.max(rel_err(analytic, numeric));
    };
    for (j, lv) in vars.layers.iter().enumerate() {
        for ((r, c), &a) in grads.get_or_zeros(lv.weights, g.shape(lv.weights)).indexed_iter() {
            check(a, &|m, d| m.layers[j].weights[[r, c]] += d);
        }
        for ((_, c), &a) in grads.get_or_zeros(lv.biases, g.shape(lv.biases)).indexed_iter() {
            check(a, &|m, d| m.layers[j].biases[c] += d);
        }
        for ((r, c), &a) in grads.get_or_zeros(lv.act_logits, g.shape(lv.act_logits)).indexed_iter() {
            check(a, &|m, d| m.layers[j].act_logits[[r, c]] += d);
        }
        for ((_, c), &a) in grads.get_or_zeros(lv.neuron_mask, g.shape(lv.neuron_mask)).indexed_iter() {
            check(a, &|m, d| m.layers[j].neuron_mask[c] += d);
        }
    }
    for ((r, c), &a) in grads.get_or_zeros(vars.output_weights, g.shape(vars.output_weights)).indexed_iter() {
        check(a, &|m, d| m.output_weights[[r, c]] += d);
    }
    for ((_, c), &a) in grads.get_or_zeros(vars.output_biases, g.shape(vars.output_biases)).indexed_iter() {
        check(a, &|m, d| m.output_biases[c] += d);
    }
    worst
}

fn sparsity_gradient_error() -> f64 {
    let mut r = rng(1);
    let w: Vec<f64> = (0..12)
        .map(|_| r.random_range(0.02..1.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let t_s = 0.15;
    let mut worst: f64 = 0.0;
    for form in [CountForm::PerWeight, CountForm::Aggregate] {
        let cfg = PenaltyConfig {
            count_form: form,
            ..PenaltyConfig::large()
        };
        let g = Graph::new();
        let wv = g.variable(Array2::from_shape_vec((3, 4), w.clone()).unwrap());
        let tv = g.variable(Array2::from_elem((1, 1), t_s));
        let grads = g.backward(sparsity_penalty_graph(&g, &[wv], tv, &cfg));
        let gw = grads.get_or_zeros(wv, (3, 4));
        for j in 0..w.len() {
            let numeric = directional_fd(
                |h| {
                    let mut x = w.clone();
                    x[j] += h;
                    sparsity_penalty(&x, t_s, &cfg)
                },
                1e-7,
            );
            worst = worst.max(rel_err(gw[[j / 4, j % 4]], numeric));
        }
        let numeric = directional_fd(|h| sparsity_penalty(&w, t_s + h, &cfg), 1e-7);
        worst = worst.max(rel_err(grads.get_or_zeros(tv, (1, 1))[[0, 0]], numeric));
    }
    worst
}

fn compactness_gradient_error() -> f64 {
    let masks = [Array1::from(vec![0.2, 0.9, 0.4, 0.7]), Array1::from(vec![0.1, 0.6, 0.35])];
    let (alpha, beta) = (0.4, 1e-3);
    let g = Graph::new();
    let vars: Vec<_> = masks.iter().map(|m| g.variable(m.clone().insert_axis(Axis(0)))).collect();
    let grads = g.backward(compactness_penalty_graph(&g, &vars, alpha, beta));
    let mut worst: f64 = 0.0;
    for (l, m) in masks.iter().enumerate() {
        let analytic = grads.get_or_zeros(vars[l], (1, m.len()));
        for j in 0..m.len() {
            let numeric = directional_fd(
                |h| {
                    let mut x = masks.clone();
                    x[l][j] += h;
                    compactness_penalty(&x, alpha, beta)
                },
                1e-7,
            );
            worst = worst.max(rel_err(analytic[[0, j]], numeric));
        }
    }
    worst
}

fn mixing_gradient_error() -> f64 {
    let logits = [0.3, -0.4, 0.9];
    let coeffs = ndarray::arr2(&[[0.2, -1.0, 0.5]]);
    let mut worst: f64 = 0.0;
    for t in [1.0, 0.3, 0.05] {
        let g = Graph::new();
        let l = g.variable(ndarray::arr2(&[logits]));
        let w = g.softmax_rows(g.scale(l, 1.0 / t));
        let grad = g.backward(g.sum(g.mul(w, g.constant(coeffs.clone())))).get_or_zeros(l, (1, 3));
        for k in 0..3 {
            let numeric = directional_fd(
                |d| {
                    let mut x = logits;
                    x[k] += d;
                    let w = mixture_weights(ndarray::arr1(&x).view(), t);
                    (0..3).map(|i| w[i] * coeffs[[0, i]]).sum::<f64>()
                },
                1e-6,
            );
            worst = worst.max(rel_err(grad[[0, k]], numeric));
        }
    }
    worst
}

fn latent_gradient_error() -> f64 {
    let model = tiny_model(3);
    let data = generate(&TaskSpec {
        train_count: 24,
        test_count: 8,
        ..TaskSpec::builtin("sphere", 5).unwrap()
    })
    .unwrap();
    let mut r = rng(17);
    let z = normal_matrix(model.config.embedding_shape(), &mut r);
    let dir = normal_matrix(z.dim(), &mut r);
    let cfg = SearchConfig::new(10, 0.1, 0, vec![1, 2], PenaltyConfig::medium());
    let loss_at = |zz: &Array2<f64>, k: usize| {
        let g = Graph::new();
        let bound = model.bind(&g, false);
        let zv = g.variable(zz.clone());
        let tv = g.variable(Array2::from_elem((1, 1), 0.05));
        let parts = search_loss(&bound, zv, tv, k, data.x_train.view(), data.y_train.view(), 100, &cfg).unwrap();
        let value = g.scalar(parts.total);
        (value, g.backward(parts.total).get_or_zeros(zv, zz.dim()))
    };
    let mut worst: f64 = 0.0;
    for k in 1..=2 {
        let analytic = (&loss_at(&z, k).1 * &dir).sum();
        let numeric = directional_fd(|h| loss_at(&(&z + &(&dir * h)), k).0, 1e-4);
        worst = worst.max(rel_err(analytic, numeric));
    }
    worst
}

fn differentiability() -> Outcome {
    let start = Instant::now();
    let eval = eval_gradient_error();
    let sparsity = sparsity_gradient_error();
    let compactness = compactness_gradient_error();
    let mixing = mixing_gradient_error();
    let latent = latent_gradient_error();
    let elapsed = start.elapsed();
    outcome(
        eval < 1e-3
            && mixing < 1e-3
            && latent < 1e-3
            && sparsity < 1e-4
            && compactness < 1e-4
            && elapsed < Duration::from_secs(300),
        format!(
            "worst rel err: eval {eval:.1e}, sparsity {sparsity:.1e}, compactness {compactness:.1e}, \
             mixing {mixing:.1e}, latent {latent:.1e}; {elapsed:.1?}"
        ),
    )
}

fn min_loss_contract(model: &AutoencoderModel) -> Outcome {
    let layout = model.config.layout;
    let ranges = default_sampler(model);
    let cfg = LossConfig::default();
    let mut violations = 0;
    for seed in 0..100 {
        let source = sample_random_mlp(&layout, &ranges, &mut rng(200 + seed)).unwrap();
        let xs = uniform_inputs(64, source.input_dim, &mut rng(300 + seed));
        let branches = model.branch_loss_values(&source, &xs, &cfg).unwrap();
        let (min, k) = model.min_loss(&source, &xs, &cfg).unwrap();
        if branches.iter().any(|&b| min > b) || min != branches[k - 1] {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("100 networks, {violations} violations"))
}

fn temperature_schedule() -> Outcome {
    let sched = AnnealSchedule::default();
    let start = temperature(0, &sched);
    let end = temperature(sched.e_anneal, &sched);
    let mid = temperature(sched.e_anneal / 2, &sched);
    let schedule_ok = (start - 1.0).abs() <= 1e-12 && (end - 0.01).abs() <= 1e-12;
    let mid_ok = (mid - 0.505).abs() <= 1e-12;
    let mut r = rng(44);
    let mut worst = f64::INFINITY;
    for i in 0..1000 {
        let gap = if i == 0 { 0.1 } else { r.random_range(0.1..3.0) };
        let top = r.random_range(0..3);
        let mut logits = [0.0; 3];
        let base: f64 = r.random_range(-2.0..2.0);
        for (k, l) in logits.iter_mut().enumerate() {
            *l = if k == top { base } else { base - gap - r.random_range(0.0..1.0) };
        }
        let w = mixture_weights(ndarray::arr1(&logits).view(), end);
        worst = worst.min(w[top]);
    }
    outcome(
        schedule_ok && mid_ok && worst > 0.99,
        format!("T(0) = {start}, T(E) = {end}, T(E/2) = {mid} (expected 0.505), min argmax weight {worst:.6}"),
    )
}

fn held_out(model: &AutoencoderModel) -> f64 {
    let held = sample_batch(model, &default_sampler(model), 64, 1000, &SeedTree::new(999)).unwrap();
    mean_min_loss(model, &held, &LossConfig::default()).unwrap()
}

fn train_desk_model() -> (AutoencoderModel, Outcome) {
    let mut model = AutoencoderModel::init(AutoencoderConfig::default(), &SeedTree::new(1)).unwrap();
    let before = held_out(&model);
    let start = Instant::now();
    let spec = TrainSpec {
        seed: 3,
        ..TrainSpec::default()
    };
    let report = train_autoencoder(&mut model, &spec, &mut ()).unwrap();
    let elapsed = start.elapsed();
    let after = held_out(&model);
    let ratio = after / before;
    let result = outcome(
        ratio <= 0.5 && elapsed <= Duration::from_secs(3600),
        format!(
            "held-out {before:.4e} -> {after:.4e}, ratio {ratio:.3} (need <= 0.5); {} batches in {elapsed:.0?}; \
             decoder win rates {:?}",
            report.batch_losses.len(),
            report.epochs[0].per_decoder_win_rate
        ),
    );
    (model, result)
}

fn selected(model: &AutoencoderModel, task: &str, seed: u64, penalties: PenaltyConfig) -> (f64, usize) {
    let data = generate(&TaskSpec::builtin(task, seed).unwrap()).unwrap();
    let cfg = SearchConfig::new(2000, 0.1, seed, Vec::new(), penalties);
    let result = run_search(model, data.split(), &cfg).unwrap();
    let best = result.best(cfg.selection_tolerance).unwrap();
    (best.test_mse, best.nonzeros)
}

fn easy_tasks(model: &AutoencoderModel) -> Outcome {
    let mut solved = 0;
    let mut notes = Vec::new();
    let mut slowest = Duration::ZERO;
    for task in ["constant", "linear", "sphere"] {
        let start = Instant::now();
        let (mse, nonzeros) = selected(model, task, 0, PenaltyConfig::none());
        slowest = slowest.max(start.elapsed());
        if mse <= 0.05 {
            solved += 1;
        }
        notes.push(format!("{task} mse {mse:.4} nnz {nonzeros}"));
    }
    outcome(
        solved >= 2 && slowest <= Duration::from_secs(600),
        format!("{solved}/3 at mse <= 0.05 ({}); slowest task {slowest:.1?}", notes.join(", ")),
    )
}

fn sparsity_effect(model: &AutoencoderModel) -> Outcome {
    let (mse_none, nnz_none) = selected(model, "linear", 0, PenaltyConfig::none());
    let (mse_med, nnz_med) = selected(model, "linear", 0, PenaltyConfig::medium());
    let fewer = nnz_none > 0 && (nnz_med as f64) <= 0.7 * nnz_none as f64;
    let similar = mse_med <= 1.1 * mse_none;
    outcome(
        fewer && similar,
        format!("none: nnz {nnz_none} mse {mse_none:.4}; medium: nnz {nnz_med} mse {mse_med:.4}"),
    )
}

fn penalty_ordering(model: &AutoencoderModel) -> Outcome {
    let median = |penalties: PenaltyConfig| {
        let mut counts: Vec<usize> = (0..3).map(|s| selected(model, "linear", s, penalties).1).collect();
        counts.sort_unstable();
        counts[1]
    };
    let (small, medium, large) = (
        median(PenaltyConfig::small()),
        median(PenaltyConfig::medium()),
        median(PenaltyConfig::large()),
    );
    let informative = small > 0;
    outcome(
        informative && small >= medium && medium >= large,
        format!(
            "median nonzeros small {small}, medium {medium}, large {large}{}",
            if informative { "" } else { " (every selected network is empty, so the ordering carries no signal)" }
        ),
    )
}

fn admm_checks() -> Outcome {
    let layer = HiddenLayer::uniform(
        array![[2.0, 0.05], [0.0, -0.04]],
        array![2.0, 0.03],
        ActivationKind::LeakyRelu,
    );
    let net = Mlp::new(2, 1, vec![layer], array![[0.25], [0.06]], array![-0.5]).unwrap();
    let target = |xs: &Array2<f64>| xs.column(0).mapv(|x| 0.5 * x).insert_axis(Axis(1));
    let (x_train, x_test) = (uniform_inputs(200, 2, &mut rng(1)), uniform_inputs(100, 2, &mut rng(2)));
    let (y_train, y_test) = (target(&x_train), target(&x_test));
    let split = || DataSplit {
        x_train: x_train.view(),
        y_train: y_train.view(),
        x_test: x_test.view(),
        y_test: y_test.view(),
    };
    let zeros = |m: &Mlp| -> Vec<Array2<bool>> { m.weight_matrices().map(|w| w.mapv(|x| x == 0.0)).collect() };

    let (untuned, _) = admm_prune(&net, split(), &AdmmConfig { finetune_steps: 0, ..AdmmConfig::default() }).unwrap();
    let (pruned, metrics) = admm_prune(&net, split(), &AdmmConfig::default()).unwrap();
    let exact_zeros = zeros(&untuned) == zeros(&pruned);
    let noop_cfg = AdmmConfig {
        threshold: 0.0,
        ..AdmmConfig::default()
    };
    let (unpruned, _) = admm_prune(&net, split(), &noop_cfg).unwrap();
    let noop = zeros(&unpruned) == zeros(&net);
    let degradation = metrics.test_mse_after / metrics.test_mse_before - 1.0;
    outcome(
        exact_zeros && noop && degradation < 0.05,
        format!(
            "pruned stay zero: {exact_zeros}; threshold 0 no-op: {noop}; nonzeros {} -> {}, mse {:.3e} -> {:.3e}",
            metrics.nonzeros_before, metrics.nonzeros_after, metrics.test_mse_before, metrics.test_mse_after
        ),
    )
}

fn pca_oracle_error(samples: &Array2<f64>) -> f64 {
    let (n, d) = samples.dim();
    let centered = samples - &samples.mean_axis(Axis(0)).unwrap();
    let cov = centered.t().dot(&centered) / n as f64;
    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |r, c| cov[[r, c]]));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let pca = pca_top2(samples.view()).unwrap();
    let mut worst: f64 = 0.0;
    for (i, &j) in order.iter().take(2).enumerate() {
        let want = Array1::from_iter(eig.eigenvectors.column(j).iter().copied());
        let dist = |s: f64| (&pca.components[i] - &(&want * s)).mapv(f64::abs).fold(0.0_f64, |m, &x| m.max(x));
        worst = worst.max(dist(1.0).min(dist(-1.0)));
    }
    worst
}

fn smoothness(model: &AutoencoderModel) -> Outcome {
    let cfg = ProbeConfig::default();
    let grid = smoothness_probe(model, None, &cfg).unwrap();
    let centre = grid.offsets.len() / 2;
    let shape_ok = grid.mse.dim() == (25, 25) && grid.offsets[0] == -3.0 && grid.offsets[24] == 3.0;
    let centre_zero = grid.mse[[centre, centre]] == 0.0;
    let finite = grid.mse.iter().all(|x| x.is_finite());
    let mut worst_dot: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for seed in 0..5 {
        let cloud = normal_matrix((200, 16), &mut rng(60 + seed));
        let pca = pca_top2(cloud.view()).unwrap();
        worst_dot = worst_dot.max(pca.components[0].dot(&pca.components[1]).abs());
        worst_oracle = worst_oracle.max(pca_oracle_error(&cloud));
    }
    outcome(
        shape_ok && centre_zero && finite && worst_dot <= 1e-8 && worst_oracle <= 1e-6,
        format!(
            "grid {:?}, centre {:e}, finite {finite}, |v1.v2| {worst_dot:.1e}, oracle gap {worst_oracle:.1e}, \
             max cell {:.3e}",
            grid.mse.dim(),
            grid.mse[[centre, centre]],
            grid.mse.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn compression() -> Outcome {
    let deep = full_random_mlp(&RepLayout::new(3, 9, 2, 1).unwrap(), 5);
    let xs = uniform_inputs(256, 2, &mut rng(6));
    let hard = EvalConfig::hard();
    let whole = eval_mlp(&deep, xs.view(), &hard).unwrap();
    let mut worst: f64 = 0.0;
    for cut in 1..deep.depth() {
        let (front, back) = split_mlp(&deep, cut).unwrap();
        let mid = eval_mlp(&front, xs.view(), &hard).unwrap();
        let out = eval_mlp(&back, mid.view(), &hard).unwrap();
        worst = worst.max((&out - &whole).mapv(f64::abs).fold(0.0, |m: f64, &x| m.max(x)));
    }
    let config = AutoencoderConfig {
        layout: RepLayout::new(5, 2, 3, 3).unwrap(),
        ..AutoencoderConfig::default()
    };
    let model = AutoencoderModel::init(config, &SeedTree::new(2)).unwrap();
    let cfg = CompressConfig {
        cuts: vec![3, 6],
        target_depths: vec![2, 2, 2],
        train_count: 1024,
        test_count: 256,
        seed: 0,
        search: SearchConfig::new(300, 0.1, 0, Vec::new(), PenaltyConfig::small()),
    };
    let report = compress(&deep, &model, &cfg).map(|c| c.report);
    let pipeline_ok = matches!(&report, Ok(r) if r.parts.len() == 3 && r.compressed_depth == 6 && r.relative_test_mse.is_finite());
    let summary = match &report {
        Ok(r) => format!(
            "depth {} -> {}, nonzeros {} -> {}, relative test mse {:.3}",
            r.original_depth, r.compressed_depth, r.original_nonzeros, r.compressed_nonzeros, r.relative_test_mse
        ),
        Err(e) => format!("pipeline error: {e}"),
    };
    outcome(
        worst <= 1e-12 && pipeline_ok,
        format!("split max gap {worst:.1e} over 8 cuts; {summary}"),
    )
}

fn selection_rule() -> Outcome {
    let cands = |rows: &[(f64, usize)]| -> Vec<Candidate> {
        rows.iter()
            .enumerate()
            .map(|(i, &(mse, nonzeros))| Candidate {
                mse,
                nonzeros,
                decoder: i + 1,
            })
            .collect()
    };
    let edge = (1.0 + 0.05) * 2.0;
    let fixtures: Vec<(Vec<Candidate>, Option<usize>)> = vec![
        (cands(&[(1.0, 10), (1.04, 5), (2.0, 2)]), Some(1)),
        (cands(&[(2.0, 8), (edge, 4)]), Some(1)),
        (cands(&[(2.0, 8), (edge.next_up(), 4)]), Some(0)),
        (cands(&[(1.0, 5), (1.03, 5)]), Some(0)),
        (cands(&[(1.0, 5), (1.0, 5)]), Some(0)),
        (cands(&[(1.02, 3), (1.0, 9), (1.01, 3)]), Some(2)),
        (cands(&[(f64::NAN, 1), (1.0, 3)]), Some(1)),
        (cands(&[(f64::INFINITY, 1), (f64::NAN, 2)]), None),
        (cands(&[(0.0, 6), (1e-300, 1)]), Some(0)),
    ];
    let wrong: Vec<usize> = fixtures
        .iter()
        .enumerate()
        .filter(|(_, (c, want))| select_best(c, 0.05).ok() != *want)
        .map(|(i, _)| i)
        .collect();
    outcome(wrong.is_empty(), format!("{} fixtures, wrong: {wrong:?}", fixtures.len()))
}

fn report(index: usize, name: &str, o: &Outcome) -> bool {
    println!("[{}] {index:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    std::io::stdout().flush().ok();
    o.pass
}

fn main() {
    let mut passed = Vec::new();
    passed.push(report(1, "representation round trip", &round_trip()));
    passed.push(report(2, "differentiability", &differentiability()));
    let untrained = AutoencoderModel::init(AutoencoderConfig::default(), &SeedTree::new(1)).unwrap();
    passed.push(report(3, "min-loss contract", &min_loss_contract(&untrained)));
    passed.push(report(4, "temperature schedule", &temperature_schedule()));
    let (model, trained) = train_desk_model();
    passed.push(report(5, "desk-scale autoencoder training", &trained));
    passed.push(report(6, "easy-task search", &easy_tasks(&model)));
    passed.push(report(7, "sparsity effect", &sparsity_effect(&model)));
    passed.push(report(8, "penalty-level ordering", &penalty_ordering(&model)));
    passed.push(report(9, "admm baseline", &admm_checks()));
    passed.push(report(10, "smoothness probe", &smoothness(&model)));
    passed.push(report(11, "compression plumbing", &compression()));
    passed.push(report(12, "selection rule", &selection_rule()));
    let count = passed.iter().filter(|&&p| p).count();
    println!("acceptance: {count}/{} criteria passed", passed.len());
    if count != passed.len() {
        std::process::exit(1);
    }
}
