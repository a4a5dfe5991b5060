use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use swatnn_core::analysis::{compress, smoothness_probe, write_pareto_csv, write_summary_csv, CompressConfig, ReportRow};
use swatnn_core::autoenc::{
    load_checkpoint, save_checkpoint, train_autoencoder, AutoencoderModel, EpochMetrics, Precision, TrainObserver,
};
use swatnn_core::baselines::{admm_prune, train_traditional, Architecture};
use swatnn_core::bench::{generate, load_dataset, save_dataset, TaskSpec, BUILTINS};
use swatnn_core::config::RunConfig;
use swatnn_core::latentopt::{run_search, DecoderSummary, PenaltyConfig};
use swatnn_core::netcore::{mlp_from_json, mlp_to_json, Mlp};
use swatnn_core::rng::SeedTree;

use crate::rundir::RunDir;
use crate::{
    BaselineArgs, BaselineMethod, BenchGenArgs, Cli, Command, Common, CompressArgs, PrecisionArg, ProbeArgs,
    ReportArgs, SearchArgs, TrainAeArgs,
};

/// Result file shared by latent search and the reference methods.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultFile {
    pub task: String,
    pub method: String,
    /// Position in `runs` of the selected network.
    pub selected: Option<usize>,
    pub runs: Vec<DecoderSummary>,
}

pub fn dispatch(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::default(),
    };
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    match cli.command {
        Command::TrainAe(args) => train_ae(cfg, args),
        Command::Search(args) => search(cfg, args),
        Command::Baseline(args) => baseline(cfg, args),
        Command::BenchGen(args) => bench_gen(cfg, args),
        Command::ProbeSmoothness(args) => probe(cfg, args),
        Command::Compress(args) => compress_cmd(cfg, args),
        Command::Report(args) => report(cfg, args),
    }
}

/// Applies `--out` and `--seed`, then copies the global seed into every
/// command section.
fn apply_common(cfg: &mut RunConfig, common: &Common) {
    cfg.out = Some(common.out.clone());
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if let Some(seed) = cfg.seed {
        cfg.autoencoder.train.seed = seed;
        cfg.search.seed = seed;
        cfg.baseline.traditional.seed = seed;
        cfg.analysis.probe.seed = seed;
    }
}

struct EpochLog<'a>(&'a mut RunDir);

impl TrainObserver for EpochLog<'_> {
    fn on_epoch(&mut self, metrics: &EpochMetrics, _model: &AutoencoderModel) -> swatnn_core::Result<()> {
        log::info!(
            "epoch {}: mean loss {:.4e}, win rates {:?}",
            metrics.epoch,
            metrics.mean_loss,
            metrics.per_decoder_win_rate
        );
        self.0
            .metric(metrics)
            .map_err(|e| swatnn_core::Error::Io(std::io::Error::other(e.to_string())))
    }
}

fn train_ae(mut cfg: RunConfig, args: TrainAeArgs) -> Result<()> {
    apply_common(&mut cfg, &args.common);
    if let Some(p) = args.precision {
        cfg.precision = Some(match p {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        });
    }
    if let Some(p) = cfg.precision {
        cfg.autoencoder.model.precision = p;
    }
    let train = &mut cfg.autoencoder.train;
    if let Some(e) = args.epochs {
        train.epochs = e;
    }
    if let Some(b) = args.batches {
        train.batches_per_epoch = b;
    }
    if let Some(lr) = args.lr {
        train.lr = lr;
    }
    train.diagnostic_path = Some(args.common.out.join("diverged.swck"));
    let mut dir = RunDir::create(&args.common.out, &cfg)?;

    let seed = SeedTree::new(cfg.seed.unwrap_or(0));
    let mut model = AutoencoderModel::init(cfg.autoencoder.model.clone(), &seed)?;
    log::info!("autoencoder with {} parameters", model.parameter_count());
    let report = train_autoencoder(&mut model, &cfg.autoencoder.train, &mut EpochLog(&mut dir))?;
    save_checkpoint(&model, &dir.path("autoencoder.swck"))?;
    dir.write_json("train-report.json", &report)?;
    Ok(())
}

fn parse_penalty(spec: &str) -> Result<PenaltyConfig> {
    if let Some(p) = PenaltyConfig::preset(spec) {
        return Ok(p);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!(swatnn_core::Error::Config(format!(
            "penalty `{spec}` is neither none, small, medium, large nor an existing file"
        )));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
    let cfg: PenaltyConfig = serde_json::from_str(&text).map_err(swatnn_core::Error::from)?;
    cfg.validate()?;
    Ok(cfg)
}

fn trajectory_csv(rows: impl IntoIterator<Item = (usize, Vec<f64>)>) -> String {
    let mut text = String::from("decoder,step,loss\n");
    for (decoder, losses) in rows {
        for (step, loss) in losses.iter().enumerate() {
            writeln!(text, "{decoder},{step},{loss:e}").expect("writing to a string");
        }
    }
    text
}

#[derive(Serialize)]
struct RunMetric<'a> {
    task: &'a str,
    method: &'a str,
    decoder: usize,
    train_mse: f64,
    test_mse: f64,
    nonzeros: usize,
    diverged: bool,
    steps_run: usize,
}

impl<'a> RunMetric<'a> {
    fn new(task: &'a str, method: &'a str, s: &DecoderSummary) -> Self {
        RunMetric {
            task,
            method,
            decoder: s.decoder,
            train_mse: s.train_mse,
            test_mse: s.test_mse,
            nonzeros: s.nonzeros,
            diverged: s.diverged,
            steps_run: s.steps_run,
        }
    }
}

fn search(mut cfg: RunConfig, args: SearchArgs) -> Result<()> {
    apply_common(&mut cfg, &args.common);
    if let Some(p) = &args.penalty {
        cfg.search.penalties = parse_penalty(p)?;
    }
    if let Some(steps) = args.steps {
        cfg.search.steps = steps;
    }
    if let Some(lr) = args.lr {
        cfg.search.lr = lr;
    }
    if let Some(d) = args.decoders {
        cfg.search.decoders = d;
    }
    let model = load_checkpoint(&args.ae).with_context(|| format!("loading {}", args.ae.display()))?;
    let data = load_dataset(&args.task).with_context(|| format!("loading {}", args.task.display()))?;
    let mut dir = RunDir::create(&args.common.out, &cfg)?;

    let result = run_search(&model, data.split(), &cfg.search)?;
    let task = data.spec.name.as_str();
    let method = "latent-search";
    let summaries: Vec<DecoderSummary> = result.runs.iter().map(|r| r.summary()).collect();
    for s in &summaries {
        dir.metric(&RunMetric::new(task, method, s))?;
    }
    dir.write_text(
        "trajectory.csv",
        &trajectory_csv(result.runs.iter().map(|r| (r.decoder, r.trajectory.clone()))),
    )?;
    let best = result.best(cfg.search.selection_tolerance);
    let selected = best.as_ref().ok().map(|b| {
        result
            .runs
            .iter()
            .position(|r| std::ptr::eq(r, *b))
            .expect("selected run belongs to the result")
    });
    dir.write_json(
        "result.json",
        &ResultFile {
            task: task.to_string(),
            method: method.to_string(),
            selected,
            runs: summaries,
        },
    )?;
    let best = best?;
    dir.write_text("network.json", &mlp_to_json(&best.mlp))?;
    log::info!(
        "selected decoder {}: test MSE {:.4e}, {} nonzero weights",
        best.decoder,
        best.test_mse,
        best.nonzeros
    );
    Ok(())
}

fn baseline_summary(mlp: &Mlp, train_mse: f64, test_mse: f64, threshold: f64, trajectory: &[f64], diverged: bool) -> DecoderSummary {
    DecoderSummary {
        decoder: mlp.depth(),
        train_mse,
        test_mse,
        nonzeros: mlp.nonzero_weights(),
        active_neurons: mlp.active_neurons(0.5),
        t_s: threshold,
        diverged,
        steps_run: trajectory.len(),
        final_loss: trajectory.last().copied(),
        z: Vec::new(),
    }
}

fn baseline(mut cfg: RunConfig, args: BaselineArgs) -> Result<()> {
    apply_common(&mut cfg, &args.common);
    let data = load_dataset(&args.task).with_context(|| format!("loading {}", args.task.display()))?;
    let arch = args.arch.as_deref().map(Architecture::parse).transpose()?;
    let mut dir = RunDir::create(&args.common.out, &cfg)?;
    let task = data.spec.name.as_str();

    let trained = |arch: Option<Architecture>| -> Result<(Mlp, swatnn_core::baselines::BaselineMetrics)> {
        let Some(arch) = arch else {
            bail!(swatnn_core::Error::Config("--arch depth,width,activation is required".into()));
        };
        Ok(train_traditional(&arch, data.split(), &cfg.baseline.traditional)?)
    };
    let (method, mlp, summary, trajectory) = match args.method {
        BaselineMethod::Traditional => {
            let (mlp, m) = trained(arch)?;
            let s = baseline_summary(&mlp, m.train_mse, m.test_mse, 0.0, &m.loss_trajectory, m.diverged);
            ("traditional", mlp, s, m.loss_trajectory)
        }
        BaselineMethod::Admm => {
            let source = match &args.net {
                Some(path) => mlp_from_json(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?,
                None => trained(arch)?.0,
            };
            let (pruned, m) = admm_prune(&source, data.split(), &cfg.baseline.admm)?;
            dir.write_json("admm-metrics.json", &m)?;
            let s = baseline_summary(
                &pruned,
                m.train_mse_after,
                m.test_mse_after,
                cfg.baseline.admm.threshold,
                &[],
                m.diverged,
            );
            ("admm", pruned, s, Vec::new())
        }
    };
    dir.metric(&RunMetric::new(task, method, &summary))?;
    dir.write_text("trajectory.csv", &trajectory_csv([(summary.decoder, trajectory)]))?;
    dir.write_text("network.json", &mlp_to_json(&mlp))?;
    dir.write_json(
        "result.json",
        &ResultFile {
            task: task.to_string(),
            method: method.to_string(),
            selected: (!summary.diverged).then_some(0),
            runs: vec![summary],
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct DatasetMetric {
    task: String,
    file: String,
    output_scale: f64,
    train_count: usize,
    test_count: usize,
}

fn bench_gen(mut cfg: RunConfig, args: BenchGenArgs) -> Result<()> {
    apply_common(&mut cfg, &args.common);
    let names: Vec<&str> = if args.task == "all" {
        BUILTINS.iter().map(|b| b.id).collect()
    } else {
        vec![args.task.as_str()]
    };
    let specs = names
        .iter()
        .map(|name| {
            Ok(TaskSpec {
                train_count: cfg.bench.train_count,
                test_count: cfg.bench.test_count,
                ..TaskSpec::builtin(name, cfg.seed.unwrap_or(0))?
            })
        })
        .collect::<swatnn_core::Result<Vec<_>>>()?;
    let mut dir = RunDir::create(&args.common.out, &cfg)?;
    for spec in &specs {
        let data = generate(spec)?;
        let path = save_dataset(&data, dir.root())?;
        dir.metric(&DatasetMetric {
            task: spec.name.clone(),
            file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            output_scale: data.normalization.output_scale,
            train_count: spec.train_count,
            test_count: spec.test_count,
        })?;
    }
    Ok(())
}

fn probe(mut cfg: RunConfig, args: ProbeArgs) -> Result<()> {
    apply_common(&mut cfg, &args.common);
    if let Some(k) = args.decoder {
        cfg.analysis.probe.decoder = k;
    }
    let model = load_checkpoint(&args.ae).with_context(|| format!("loading {}", args.ae.display()))?;
    let mut dir = RunDir::create(&args.common.out, &cfg)?;
    let grid = smoothness_probe(&model, None, &cfg.analysis.probe)?;
    let mut csv = String::from("alpha,beta,mse\n");
    for ((a, b), mse) in grid.mse.indexed_iter() {
        writeln!(csv, "{},{},{mse:e}", grid.offsets[a], grid.offsets[b]).expect("writing to a string");
    }
    dir.write_text("grid.csv", &csv)?;
    dir.write_json("grid.json", &grid)?;
    dir.metric(&serde_json::json!({
        "cells": grid.mse.len(),
        "max_mse": grid.mse.iter().copied().fold(0.0, f64::max),
        "mean_mse": grid.mse.mean(),
        "rank_deficient": grid.rank_deficient,
        "explained_variance": grid.explained_variance,
    }))?;
    Ok(())
}

fn compress_cmd(mut cfg: RunConfig, args: CompressArgs) -> Result<()> {
    apply_common(&mut cfg, &args.common);
    let section = &mut cfg.analysis.compress;
    if let Some(c) = args.cuts {
        section.cuts = c;
    }
    if let Some(t) = args.targets {
        section.target_depths = t;
    }
    if section.cuts.is_empty() || section.target_depths.is_empty() {
        bail!(swatnn_core::Error::Config(
            "cuts and target depths must be given (flags or [analysis.compress])".into()
        ));
    }
    let model = load_checkpoint(&args.ae).with_context(|| format!("loading {}", args.ae.display()))?;
    let teacher = mlp_from_json(&fs::read_to_string(&args.net).with_context(|| format!("reading {}", args.net.display()))?)?;
    let mut dir = RunDir::create(&args.common.out, &cfg)?;
    let section = &cfg.analysis.compress;
    let out = compress(
        &teacher,
        &model,
        &CompressConfig {
            cuts: section.cuts.clone(),
            target_depths: section.target_depths.clone(),
            train_count: section.train_count,
            test_count: section.test_count,
            seed: cfg.seed.unwrap_or(0),
            search: cfg.search.clone(),
        },
    )?;
    for (i, part) in out.parts.iter().enumerate() {
        dir.write_text(&format!("part-{i}.json"), &mlp_to_json(part))?;
        let f = &out.report.parts[i];
        dir.metric(&serde_json::json!({
            "part": f.part,
            "original_depth": f.original_depth,
            "target_depth": f.target_depth,
            "test_mse": f.test_mse,
            "nonzeros": f.nonzeros,
        }))?;
    }
    dir.write_text("network.json", &mlp_to_json(&out.network))?;
    dir.write_json(
        "fidelity.json",
        &serde_json::json!({
            "report": out.report,
            "report_threshold": section.report_threshold,
            "within_threshold": out.report.relative_test_mse < section.report_threshold,
        }),
    )?;
    log::info!(
        "compressed depth {} -> {}, relative test MSE {:.4e}",
        out.report.original_depth,
        out.report.compressed_depth,
        out.report.relative_test_mse
    );
    Ok(())
}

fn result_path(input: &Path) -> PathBuf {
    if input.is_dir() {
        input.join("result.json")
    } else {
        input.to_path_buf()
    }
}

fn report(mut cfg: RunConfig, args: ReportArgs) -> Result<()> {
    cfg.out = Some(args.out.clone());
    let mut rows = Vec::new();
    for input in &args.inputs {
        let path = result_path(input);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let result: ResultFile =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        rows.extend(result.runs.iter().enumerate().map(|(i, run)| ReportRow {
            task: result.task.clone(),
            method: result.method.clone(),
            decoder: Some(run.decoder),
            test_mse: run.test_mse,
            nonzeros: run.nonzeros,
            selected: result.selected == Some(i),
        }));
    }
    let mut dir = RunDir::create(&args.out, &cfg)?;
    write_summary_csv(&rows, File::create(dir.path("summary.csv"))?)?;
    write_pareto_csv(&rows, File::create(dir.path("pareto.csv"))?)?;
    let best: Vec<ReportRow> = rows.iter().filter(|r| r.selected).cloned().collect();
    write_summary_csv(&best, File::create(dir.path("best.csv"))?)?;
    dir.metric(&serde_json::json!({ "inputs": args.inputs.len(), "rows": rows.len(), "selected": best.len() }))?;
    Ok(())
}
