use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use ndarray::{s, Array2};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use swatnn_autograd::{Graph, Var};

use crate::error::{Error, Result};
use crate::matrep::{MatRep, RepLayout};
use crate::rng::SeedTree;

const LN_EPS: f64 = 1e-5;
const INIT_STD: f64 = 0.02;

/// Storage precision of checkpoint tensors. Arithmetic is always `f64`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl Precision {
    pub fn round(self, x: f64) -> f64 {
        match self {
            Precision::F32 => x as f32 as f64,
            Precision::F64 => x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AutoencoderConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub encoder_blocks: usize,
    pub decoder_blocks: usize,
    /// Hidden width of the feed-forward sublayer as a multiple of `d_model`.
    #[serde(default = "default_ffn_mult")]
    pub ffn_mult: usize,
    pub layout: RepLayout,
    #[serde(default)]
    pub precision: Precision,
}

fn default_ffn_mult() -> usize {
    4
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            d_model: 128,
            n_heads: 4,
            encoder_blocks: 2,
            decoder_blocks: 2,
            ffn_mult: 4,
            layout: RepLayout::new(5, 2, 2, 1).expect("default layout"),
            precision: Precision::F64,
        }
    }
}

impl AutoencoderConfig {
    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        if self.d_model == 0 || self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Config(format!(
                "d_model {} must be a positive multiple of n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.encoder_blocks == 0 || self.decoder_blocks == 0 || self.ffn_mult == 0 {
            return Err(Error::Config("block counts and ffn_mult must be positive".into()));
        }
        Ok(())
    }

    /// Tokens per embedding, one per representation row.
    pub fn tokens(&self) -> usize {
        self.layout.max_neurons
    }

    pub fn decoders(&self) -> usize {
        self.layout.max_hidden_layers
    }

    pub fn embedding_shape(&self) -> (usize, usize) {
        (self.tokens(), self.d_model)
    }
}

/// Named parameter tensors in a deterministic order.
pub type ParamSet = BTreeMap<String, Arc<Array2<f64>>>;

#[derive(Clone, Debug)]
pub struct AutoencoderModel {
    pub config: AutoencoderConfig,
    pub params: ParamSet,
}

#[derive(Clone, Copy, Debug)]
enum InitKind {
    Normal(f64),
    Fill(f64),
}

/// Name, shape and initializer of every parameter, in creation order.
struct ParamPlan(Vec<(String, (usize, usize), InitKind)>);

impl ParamPlan {
    fn add(&mut self, name: String, shape: (usize, usize), kind: InitKind) {
        self.0.push((name, shape, kind));
    }

    fn linear(&mut self, prefix: &str, fan_in: usize, fan_out: usize, std: f64) {
        self.add(format!("{prefix}.w"), (fan_in, fan_out), InitKind::Normal(std));
        self.add(format!("{prefix}.b"), (1, fan_out), InitKind::Fill(0.0));
    }

    fn layer_norm(&mut self, prefix: &str, d: usize) {
        self.add(format!("{prefix}.g"), (1, d), InitKind::Fill(1.0));
        self.add(format!("{prefix}.b"), (1, d), InitKind::Fill(0.0));
    }

    fn block(&mut self, prefix: &str, cfg: &AutoencoderConfig, residual_std: f64) {
        let d = cfg.d_model;
        self.layer_norm(&format!("{prefix}.ln1"), d);
        self.linear(&format!("{prefix}.attn.qkv"), d, 3 * d, INIT_STD);
        self.linear(&format!("{prefix}.attn.out"), d, d, residual_std);
        self.layer_norm(&format!("{prefix}.ln2"), d);
        self.linear(&format!("{prefix}.mlp.fc"), d, cfg.ffn_mult * d, INIT_STD);
        self.linear(&format!("{prefix}.mlp.proj"), cfg.ffn_mult * d, d, residual_std);
    }

    /// Residual projections are scaled down by the depth of their stack.
    fn for_config(config: &AutoencoderConfig) -> Self {
        let mut plan = ParamPlan(Vec::new());
        let (n, c, d) = (config.tokens(), config.layout.columns(), config.d_model);
        plan.linear("enc.in", 2 * c, d, INIT_STD);
        plan.add("enc.pos".into(), (n, d), InitKind::Normal(INIT_STD));
        let enc_std = INIT_STD / (2.0 * config.encoder_blocks as f64).sqrt();
        for b in 0..config.encoder_blocks {
            plan.block(&format!("enc.block{b}"), config, enc_std);
        }
        plan.layer_norm("enc.lnf", d);

        let dec_std = INIT_STD / (2.0 * config.decoder_blocks as f64).sqrt();
        for k in 1..=config.decoders() {
            let p = format!("dec{k}");
            plan.add(format!("{p}.prefix_pos"), (n, d), InitKind::Normal(INIT_STD));
            plan.add(format!("{p}.gen_pos"), (n, d), InitKind::Normal(INIT_STD));
            plan.add(format!("{p}.start"), (1, d), InitKind::Normal(INIT_STD));
            plan.linear(&format!("{p}.in"), c, d, INIT_STD);
            for b in 0..config.decoder_blocks {
                plan.block(&format!("{p}.block{b}"), config, dec_std);
            }
            plan.layer_norm(&format!("{p}.lnf"), d);
            plan.linear(&format!("{p}.out"), d, c, INIT_STD);
        }
        plan
    }
}

/// Name and shape of every parameter a model with `config` carries.
pub fn parameter_shapes(config: &AutoencoderConfig) -> BTreeMap<String, (usize, usize)> {
    ParamPlan::for_config(config)
        .0
        .into_iter()
        .map(|(name, shape, _)| (name, shape))
        .collect()
}

impl AutoencoderModel {
    /// Fresh model with small normal initialization.
    pub fn init(config: AutoencoderConfig, seed: &SeedTree) -> Result<Self> {
        config.validate()?;
        let mut rng = seed.child("autoenc-init").rng();
        let mut params = ParamSet::new();
        for (name, shape, kind) in ParamPlan::for_config(&config).0 {
            let t = match kind {
                InitKind::Normal(std) => {
                    let dist = Normal::new(0.0, std).expect("positive std");
                    Array2::from_shape_simple_fn(shape, || dist.sample(&mut rng))
                }
                InitKind::Fill(v) => Array2::from_elem(shape, v),
            };
            params.insert(name, Arc::new(t));
        }
        Ok(AutoencoderModel { config, params })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.values().map(|t| t.len()).sum()
    }

    /// Rounds every parameter to the configured storage precision.
    pub fn round_to_precision(&mut self) {
        let p = self.config.precision;
        if p == Precision::F64 {
            return;
        }
        for t in self.params.values_mut() {
            Arc::make_mut(t).mapv_inplace(|x| p.round(x));
        }
    }

    /// Places every parameter on `g`, trainable or frozen.
    pub fn bind<'g>(&self, g: &'g Graph, trainable: bool) -> Bound<'g> {
        let vars = self
            .params
            .iter()
            .map(|(name, t)| {
                let v = if trainable {
                    g.param(Arc::clone(t))
                } else {
                    g.constant_shared(Arc::clone(t))
                };
                (name.clone(), v)
            })
            .collect();
        Bound {
            g,
            vars,
            config: self.config.clone(),
        }
    }

    fn check_decoder(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.config.decoders() {
            return Err(Error::Config(format!(
                "decoder index {k} outside 1..={}",
                self.config.decoders()
            )));
        }
        Ok(())
    }

    fn check_rep(&self, rep: &MatRep) -> Result<()> {
        let want = (self.config.tokens(), self.config.layout.columns());
        if rep.dim() != want {
            return Err(Error::Shape(format!("representation is {:?}, model expects {want:?}", rep.dim())));
        }
        Ok(())
    }

    /// Row-wise projection of `values ‖ validity` to `d_model`.
    pub fn tokenize(&self, rep: &MatRep) -> Result<Array2<f64>> {
        self.check_rep(rep)?;
        let g = Graph::new();
        let b = self.bind(&g, false);
        let x = g.constant(rep.token_inputs());
        Ok((*g.value(b.tokenize(x))).clone())
    }

    pub fn encode(&self, rep: &MatRep) -> Result<Array2<f64>> {
        self.check_rep(rep)?;
        let g = Graph::new();
        let b = self.bind(&g, false);
        let x = g.constant(rep.token_inputs());
        Ok((*g.value(b.encode(x, 1))).clone())
    }

    /// Decoder `k` (1-based) applied to one embedding; `N × C` values.
    pub fn decode(&self, k: usize, z: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_decoder(k)?;
        if z.dim() != self.config.embedding_shape() {
            return Err(Error::Shape(format!(
                "embedding is {:?}, model expects {:?}",
                z.dim(),
                self.config.embedding_shape()
            )));
        }
        let g = Graph::new();
        let b = self.bind(&g, false);
        let zv = g.constant(z.clone());
        Ok((*g.value(b.decode(k, zv, 1))).clone())
    }

    /// Decoded output as a representation whose validity is imposed by the
    /// layout for a depth-`k` network with the given boundary sizes.
    pub fn decode_rep(&self, k: usize, z: &Array2<f64>, input_dim: usize, output_dim: usize) -> Result<MatRep> {
        let values = self.decode(k, z)?;
        let shape = crate::matrep::NetShape {
            input_dim,
            output_dim,
            hidden_layers: k,
        };
        self.config.layout.check_shape(&shape)?;
        Ok(MatRep {
            values,
            validity: self.config.layout.structural_validity(&shape),
        })
    }
}

/// Model parameters placed on a graph.
pub struct Bound<'g> {
    pub g: &'g Graph,
    vars: HashMap<String, Var>,
    config: AutoencoderConfig,
}

impl Bound<'_> {
    pub fn config(&self) -> &AutoencoderConfig {
        &self.config
    }

    pub fn var(&self, name: &str) -> Var {
        *self
            .vars
            .get(name)
            .unwrap_or_else(|| panic!("missing parameter {name}"))
    }

    /// `(name, var)` pairs in parameter order.
    pub fn vars(&self) -> impl Iterator<Item = (&str, Var)> {
        let mut v: Vec<_> = self.vars.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v.into_iter()
    }

    fn linear(&self, x: Var, prefix: &str) -> Var {
        self.g
            .linear(x, self.var(&format!("{prefix}.w")), self.var(&format!("{prefix}.b")))
    }

    fn layer_norm(&self, x: Var, prefix: &str) -> Var {
        self.g.layer_norm(
            x,
            self.var(&format!("{prefix}.g")),
            self.var(&format!("{prefix}.b")),
            LN_EPS,
        )
    }

    fn feed_forward(&self, h: Var, prefix: &str) -> Var {
        let g = self.g;
        let a = self.layer_norm(h, &format!("{prefix}.ln2"));
        let f = g.gelu(self.linear(a, &format!("{prefix}.mlp.fc")));
        g.add(h, self.linear(f, &format!("{prefix}.mlp.proj")))
    }

    fn qkv(&self, h: Var, prefix: &str) -> (Var, Var, Var) {
        let g = self.g;
        let d = self.config.d_model;
        let a = self.layer_norm(h, &format!("{prefix}.ln1"));
        let qkv = self.linear(a, &format!("{prefix}.attn.qkv"));
        (
            g.slice_cols(qkv, 0..d),
            g.slice_cols(qkv, d..2 * d),
            g.slice_cols(qkv, 2 * d..3 * d),
        )
    }

    /// Pre-norm block where every row attends to every row of its sample.
    fn block(&self, h: Var, prefix: &str, batch: usize) -> Var {
        let (q, k, v) = self.qkv(h, prefix);
        self.block_with_cache(h, prefix, batch, q, k, v)
    }

    fn block_with_cache(&self, h: Var, prefix: &str, batch: usize, q: Var, k: Var, v: Var) -> Var {
        let g = self.g;
        let att = g.attention(q, k, v, self.config.n_heads, batch);
        let h = g.add(h, self.linear(att, &format!("{prefix}.attn.out")));
        self.feed_forward(h, prefix)
    }

    /// Position-major token inputs (`N·B × 2C`) to token embeddings.
    pub fn tokenize(&self, inputs: Var) -> Var {
        self.linear(inputs, "enc.in")
    }

    /// Position-major token inputs to embeddings (`N·B × d`).
    pub fn encode(&self, inputs: Var, batch: usize) -> Var {
        let g = self.g;
        let mut h = g.add(self.tokenize(inputs), g.repeat_rows(self.var("enc.pos"), batch));
        for b in 0..self.config.encoder_blocks {
            h = self.block(h, &format!("enc.block{b}"), batch);
        }
        self.layer_norm(h, "enc.lnf")
    }

    /// Continuous autoregressive rollout of decoder `k` conditioned on the
    /// embedding prefix `z` (`N·B × d`, position-major). Returns `N·B × C`
    /// with the indicator columns squashed into `(0, 1)`.
    pub fn decode(&self, k: usize, z: Var, batch: usize) -> Var {
        let g = self.g;
        let cfg = &self.config;
        let p = format!("dec{k}");
        let n = cfg.tokens();
        let blocks: Vec<String> = (0..cfg.decoder_blocks).map(|b| format!("{p}.block{b}")).collect();

        // Prefix pass: embedding tokens attend among themselves; keep each
        // layer's keys and values for the generated rows.
        let mut h = g.add(z, g.repeat_rows(self.var(&format!("{p}.prefix_pos")), batch));
        let mut keys = Vec::with_capacity(blocks.len());
        let mut values = Vec::with_capacity(blocks.len());
        for name in &blocks {
            let (q, kk, vv) = self.qkv(h, name);
            keys.push(kk);
            values.push(vv);
            h = self.block_with_cache(h, name, batch, q, kk, vv);
        }

        let gen_pos = self.var(&format!("{p}.gen_pos"));
        let mask_cols = cfg.layout.mask_cols();
        let mut rows = Vec::with_capacity(n);
        for t in 0..n {
            let input = match rows.last() {
                None => g.repeat_rows(self.var(&format!("{p}.start")), batch),
                Some(&prev) => self.linear(prev, &format!("{p}.in")),
            };
            let mut x = g.add(input, g.repeat_rows(g.slice_rows(gen_pos, t..t + 1), batch));
            for (l, name) in blocks.iter().enumerate() {
                let (q, kk, vv) = self.qkv(x, name);
                keys[l] = g.concat_rows(&[keys[l], kk]);
                values[l] = g.concat_rows(&[values[l], vv]);
                x = self.block_with_cache(x, name, batch, q, keys[l], values[l]);
            }
            let out = self.linear(self.layer_norm(x, &format!("{p}.lnf")), &format!("{p}.out"));
            rows.push(g.sigmoid_cols(out, mask_cols.clone()));
        }
        g.concat_rows(&rows)
    }
}

/// Stacks per-sample `N × W` matrices into position-major `N·B × W`.
pub fn interleave(samples: &[Array2<f64>]) -> Array2<f64> {
    let batch = samples.len();
    assert!(batch > 0, "empty batch");
    let (n, w) = samples[0].dim();
    let mut out = Array2::zeros((n * batch, w));
    for (b, s) in samples.iter().enumerate() {
        assert_eq!(s.dim(), (n, w), "ragged batch");
        out.slice_mut(s![b..;batch, ..]).assign(s);
    }
    out
}

/// Row indices of sample `b` in a position-major batch.
pub fn sample_rows(n: usize, batch: usize, b: usize) -> Vec<usize> {
    (0..n).map(|p| p * batch + b).collect()
}
