use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn swatnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swatnn"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn bench_gen_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = swatnn(&["bench-gen", "--task", "sphere", "--seed", "7", "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for name in ["sphere.swds", "sphere.json", "metrics.jsonl"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert!(a.join("resolved-config.json").exists());
}

#[test]
fn unknown_subcommand_exits_two() {
    assert_eq!(swatnn(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn search_without_autoencoder_is_a_usage_error() {
    let out = swatnn(&["search", "--task", "t.swds", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--ae"), "{}", stderr(&out));
}

#[test]
fn runtime_failure_emits_a_json_error_record() {
    let tmp = tempfile::tempdir().unwrap();
    let out = swatnn(&["bench-gen", "--task", "no-such-function", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let last = stderr(&out).lines().last().unwrap_or_default().to_string();
    let record: serde_json::Value = serde_json::from_str(&last).expect("JSON error record");
    assert_eq!(record["error"]["category"], "unknown_task");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[search]\nstepz = 4\n").unwrap();
    let out = swatnn(&[
        "--config",
        cfg.to_str().unwrap(),
        "bench-gen",
        "--task",
        "sphere",
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("stepz"));
}

fn tiny_pipeline(root: &Path) {
    let config = root.join("tiny.toml");
    fs::write(
        &config,
        "[autoencoder.model]\nd_model = 16\nn_heads = 2\nencoder_blocks = 1\ndecoder_blocks = 1\n\
         [autoencoder.train]\nbatches_per_epoch = 2\nbatch_size = 2\ninputs_per_mlp = 16\n\
         [bench]\ntrain_count = 40\ntest_count = 10\n\
         [search]\nsteps = 3\n\
         [baseline.traditional]\nepochs = 5\n\
         [baseline.admm]\nouter_iters = 2\ninner_steps = 2\nfinetune_steps = 2\n\
         [analysis.probe]\nneighbors = 4\ngrid_range = 0.5\ninputs = 8\n",
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    let p = |name: &str| root.join(name).to_str().unwrap().to_string();
    let run = |args: &[&str]| {
        let mut full = vec!["--config", cfg, "--threads", "1"];
        full.extend_from_slice(args);
        let out = swatnn(&full);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    };
    run(&["train-ae", "--out", &p("ae"), "--seed", "1"]);
    run(&["bench-gen", "--task", "linear", "--out", &p("data"), "--seed", "2"]);
    let ae = p("ae/autoencoder.swck");
    let task = p("data/linear.swds");
    run(&["search", "--ae", &ae, "--task", &task, "--penalty", "medium", "--out", &p("search")]);
    run(&["baseline", "traditional", "--task", &task, "--arch", "1,3,tanh", "--out", &p("trad")]);
    run(&["baseline", "admm", "--task", &task, "--net", &p("trad/network.json"), "--out", &p("admm")]);
    run(&["probe-smoothness", "--ae", &ae, "--out", &p("probe")]);
    run(&["report", "--out", &p("report"), &p("search"), &p("trad"), &p("admm")]);
}

#[test]
fn every_command_writes_its_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_pipeline(tmp.path());
    let root = tmp.path();
    for dir in ["ae", "data", "search", "trad", "admm", "probe", "report"] {
        for f in ["resolved-config.json", "metrics.jsonl"] {
            assert!(root.join(dir).join(f).exists(), "{dir}/{f}");
        }
    }
    for f in [
        "ae/autoencoder.swck",
        "search/result.json",
        "search/network.json",
        "search/trajectory.csv",
        "admm/result.json",
        "probe/grid.csv",
        "report/summary.csv",
        "report/pareto.csv",
        "report/best.csv",
    ] {
        assert!(root.join(f).exists(), "{f}");
    }
    let grid = fs::read_to_string(root.join("probe/grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 25);
    let summary = fs::read_to_string(root.join("report/summary.csv")).unwrap();
    assert!(summary.contains("latent-search") && summary.contains("admm") && summary.contains("traditional"));
}

#[test]
fn resolved_config_reproduces_a_search() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_pipeline(tmp.path());
    let root = tmp.path();
    let p = |name: &str| root.join(name).to_str().unwrap().to_string();
    let out = swatnn(&[
        "--config",
        &p("search/resolved-config.json"),
        "--threads",
        "1",
        "search",
        "--ae",
        &p("ae/autoencoder.swck"),
        "--task",
        &p("data/linear.swds"),
        "--out",
        &p("again"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        fs::read(root.join("search/result.json")).unwrap(),
        fs::read(root.join("again/result.json")).unwrap()
    );
}
