mod common;

use common::{directional_fd, normal_matrix, random_mlp, rel_err, rng, tiny_config, tiny_model, uniform_inputs};
use swatnn_autograd::Graph;
use swatnn_core::autoenc::{
    decode_checkpoint, encode_checkpoint, functional_loss, load_checkpoint, save_checkpoint, train_autoencoder,
    AutoencoderModel, LossConfig, Precision, TrainSpec,
};
use swatnn_core::matrep::{pack, unpack, MatRep, NetShape};
use swatnn_core::rng::SeedTree;
use swatnn_core::Error;

#[test]
fn initialization_is_seed_deterministic() {
    assert_eq!(tiny_model(4).params, tiny_model(4).params);
    assert_ne!(tiny_model(4).params, tiny_model(5).params);
}

#[test]
fn shapes_of_encode_and_decode() {
    let model = tiny_model(1);
    let layout = model.config.layout;
    let rep = pack(&random_mlp(&layout, 2), &layout).unwrap();
    let z = model.encode(&rep).unwrap();
    assert_eq!(z.dim(), model.config.embedding_shape());
    for k in 1..=model.config.decoders() {
        let out = model.decode(k, &z).unwrap();
        assert_eq!(out.dim(), (layout.max_neurons, layout.columns()));
        assert!(out.iter().all(|x| x.is_finite()));
        for c in layout.mask_cols() {
            assert!(out.column(c).iter().all(|&m| m > 0.0 && m < 1.0));
        }
        assert_eq!(out, model.decode(k, &z).unwrap());
    }
    assert!(model.decode(0, &z).is_err());
    assert!(model.decode(model.config.decoders() + 1, &z).is_err());
}

#[test]
fn tokenization_is_row_local() {
    let model = tiny_model(1);
    let layout = model.config.layout;
    let rep = pack(&random_mlp(&layout, 3), &layout).unwrap();
    let base = model.tokenize(&rep).unwrap();
    let mut changed = rep.clone();
    changed.values[[1, 0]] += 0.5;
    let moved = model.tokenize(&changed).unwrap();
    for r in 0..base.nrows() {
        assert_eq!(base.row(r) == moved.row(r), r != 1, "row {r}");
    }
    let zero = model.tokenize(&MatRep::zeros(&layout)).unwrap();
    let bias = model.params["enc.in.b"].row(0).to_owned();
    for row in zero.rows() {
        assert_eq!(row, bias);
    }
}

#[test]
fn min_loss_is_the_smallest_branch() {
    let model = tiny_model(7);
    let layout = model.config.layout;
    let cfg = LossConfig::default();
    for seed in 0..20 {
        let source = random_mlp(&layout, 100 + seed);
        let xs = uniform_inputs(32, source.input_dim, &mut rng(seed));
        let branches = model.branch_loss_values(&source, &xs, &cfg).unwrap();
        let (min, k) = model.min_loss(&source, &xs, &cfg).unwrap();
        assert!(branches.iter().all(|&b| min <= b));
        assert_eq!(min, branches[k - 1]);

        let z = model.encode(&pack(&source, &layout).unwrap()).unwrap();
        for (i, &b) in branches.iter().enumerate() {
            let shape = NetShape {
                input_dim: source.input_dim,
                output_dim: source.output_dim,
                hidden_layers: i + 1,
            };
            let rep = model.decode_rep(i + 1, &z, shape.input_dim, shape.output_dim).unwrap();
            let decoded = unpack(&rep, &layout, shape, false).unwrap();
            let brute = swatnn_core::autoenc::functional_loss_with(
                &source,
                &cfg.source_eval,
                &decoded,
                &cfg.decoded_eval,
                &xs,
            )
            .unwrap();
            assert!(rel_err(b, brute) < 1e-9, "branch {i}: {b} vs {brute}");
        }
    }
}

#[test]
fn identical_networks_have_zero_functional_loss() {
    let layout = tiny_config().layout;
    let mlp = random_mlp(&layout, 8);
    let xs = uniform_inputs(16, mlp.input_dim, &mut rng(8));
    let cfg = swatnn_core::netcore::EvalConfig::hard();
    assert_eq!(functional_loss(&mlp, &mlp, &xs, &cfg).unwrap(), 0.0);
}

/// Directional derivative of `<r, decode_k(z)>` against central differences.
#[test]
fn decode_jacobian_matches_finite_differences() {
    let model = tiny_model(2);
    let mut r = rng(21);
    let z = normal_matrix(model.config.embedding_shape(), &mut r);
    let dir = normal_matrix(z.dim(), &mut r);
    let probe = normal_matrix((model.config.layout.max_neurons, model.config.layout.columns()), &mut r);
    for k in 1..=model.config.decoders() {
        let g = Graph::new();
        let bound = model.bind(&g, false);
        let zv = g.variable(z.clone());
        let out = bound.decode(k, zv, 1);
        let root = g.sum(g.mul(out, g.constant(probe.clone())));
        let analytic = (&g.backward(root).get_or_zeros(zv, z.dim()) * &dir).sum();
        let numeric = directional_fd(
            |h| (&model.decode(k, &(&z + &(&dir * h))).unwrap() * &probe).sum(),
            1e-5,
        );
        assert!(rel_err(analytic, numeric) < 1e-4, "decoder {k}: {analytic} vs {numeric}");
    }
}

#[test]
fn checkpoint_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    for precision in [Precision::F64, Precision::F32] {
        let mut cfg = tiny_config();
        cfg.precision = precision;
        let mut model = AutoencoderModel::init(cfg, &SeedTree::new(3)).unwrap();
        model.round_to_precision();
        let path = dir.path().join(format!("{precision:?}.swck"));
        save_checkpoint(&model, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.config, model.config);
        assert_eq!(loaded.params, model.params);
        let z = normal_matrix(model.config.embedding_shape(), &mut rng(1));
        assert_eq!(loaded.decode(1, &z).unwrap(), model.decode(1, &z).unwrap());
    }
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let bytes = encode_checkpoint(&tiny_model(1));
    let mut flipped = bytes.clone();
    let mid = flipped.len() / 2;
    flipped[mid] ^= 0x10;
    assert!(matches!(decode_checkpoint(&flipped), Err(Error::Checksum(_))));
    assert!(decode_checkpoint(&bytes[..bytes.len() - 3]).is_err());
    assert!(decode_checkpoint(&[]).is_err());
}

fn tiny_spec(seed: u64) -> TrainSpec {
    TrainSpec {
        epochs: 1,
        batches_per_epoch: 3,
        batch_size: 3,
        inputs_per_mlp: 16,
        seed,
        ..TrainSpec::default()
    }
}

#[test]
fn training_is_deterministic_and_updates_parameters() {
    let run = || {
        let mut model = tiny_model(1);
        let report = train_autoencoder(&mut model, &tiny_spec(9), &mut ()).unwrap();
        (model, report)
    };
    let (a, ra) = run();
    let (b, rb) = run();
    assert_eq!(ra.batch_losses, rb.batch_losses);
    assert_eq!(a.params, b.params);
    assert_ne!(a.params, tiny_model(1).params);
    assert_eq!(ra.epochs.len(), 1);
    let rates = &ra.epochs[0].per_decoder_win_rate;
    assert_eq!(rates.len(), 2);
    assert!((rates.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}
